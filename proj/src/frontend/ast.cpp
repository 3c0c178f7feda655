#include "mcv/ast.hpp"

namespace mcv {

namespace {

void collect_stmt(const Stmt &s, const std::string &host, std::vector<GhostAnnotation> &out) {
  using K = GhostAnnotation::Kind;
  switch (s.kind) {
    case StmtKind::Open: out.push_back({K::Open, host, s.loc, s.assertion.get()}); break;
    case StmtKind::Close: out.push_back({K::Close, host, s.loc, s.assertion.get()}); break;
    case StmtKind::Leak: out.push_back({K::Leak, host, s.loc, s.assertion.get()}); break;
    case StmtKind::GhostAssert: out.push_back({K::Assert, host, s.loc, s.assertion.get()}); break;
    case StmtKind::While:
      out.push_back({K::Invariant, host, s.loc, s.assertion.get()});
      break;
    default: break;
  }
  for (const auto &b : s.body) collect_stmt(*b, host, out);
  if (s.then_branch) collect_stmt(*s.then_branch, host, out);
  if (s.else_branch) collect_stmt(*s.else_branch, host, out);
}

void collect_function(const FunctionDecl &f, const std::string &host,
                      std::vector<GhostAnnotation> &out) {
  using K = GhostAnnotation::Kind;
  if (f.contract) {
    if (f.contract->pre)
      out.push_back({K::ContractRequires, host, f.contract->pre->loc, f.contract->pre.get()});
    if (f.contract->post)
      out.push_back({K::ContractEnsures, host, f.contract->post->loc, f.contract->post.get()});
  }
  if (f.body) collect_stmt(*f.body, host, out);
}

}  // namespace

std::vector<GhostAnnotation> collect_annotations(const Program &program) {
  std::vector<GhostAnnotation> out;
  for (const auto &d : program.decls) {
    if (const auto *c = std::get_if<ClassDecl>(&d)) {
      for (const auto &p : c->predicates)
        out.push_back({GhostAnnotation::Kind::InstancePredicateDef, c->name + "::" + p.name, p.loc,
                       p.body.get()});
      for (const auto &f : c->functions) collect_function(f, c->name + "::" + f.name, out);
    } else if (const auto *f = std::get_if<FunctionDecl>(&d)) {
      collect_function(*f, f->name, out);
    } else {
      const auto &p = std::get<PredicateDecl>(d);
      out.push_back({GhostAnnotation::Kind::PredicateDef, p.name, p.loc, p.body.get()});
    }
  }
  return out;
}

}  // namespace mcv
