#include "mcv/class_table.hpp"

#include <algorithm>
#include <functional>

#include "mcv/parser.hpp"

namespace mcv {

bool same_params(const FunctionDecl &a, const FunctionDecl &b) {
  if (a.params.size() != b.params.size()) return false;
  for (std::size_t i = 0; i < a.params.size(); ++i)
    if (!(a.params[i].type == b.params[i].type)) return false;
  return true;
}

namespace {

bool params_match(const FunctionDecl &f, const std::vector<TypeRef> &params) {
  if (f.params.size() != params.size()) return false;
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!(f.params[i].type == params[i])) return false;
  return true;
}

std::vector<TypeRef> param_types(const FunctionDecl &f) {
  std::vector<TypeRef> out;
  for (const auto &p : f.params) out.push_back(p.type);
  return out;
}

ExprPtr make_expr(ExprKind k, SourceLoc loc) {
  auto e = std::make_unique<Expr>();
  e->kind = k;
  e->loc = loc;
  return e;
}

ExprPtr name_expr(const std::string &n, SourceLoc loc) {
  auto e = make_expr(ExprKind::Name, loc);
  e->name = n;
  return e;
}

AssertionPtr chunk_assertion(std::string name, std::vector<ExprPtr> args, SourceLoc loc) {
  auto a = std::make_unique<Assertion>();
  a->kind = AssertKind::Chunk;
  a->loc = loc;
  a->name = std::move(name);
  a->args = std::move(args);
  return a;
}

AssertionPtr pure_true(SourceLoc loc) {
  auto a = std::make_unique<Assertion>();
  a->kind = AssertKind::Pure;
  a->loc = loc;
  a->expr = make_expr(ExprKind::BoolLit, loc);
  a->expr->bool_value = true;
  return a;
}

AssertionPtr sep(AssertionPtr l, AssertionPtr r) {
  if (!l) return r;
  auto a = std::make_unique<Assertion>();
  a->kind = AssertKind::Sep;
  a->loc = l->loc;
  a->left = std::move(l);
  a->right = std::move(r);
  return a;
}

std::string join_types(const std::vector<TypeRef> &ts) {
  std::string s;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i) s += ", ";
    s += ts[i].str();
  }
  return s;
}

}  // namespace

BuildResult ClassTable::build(Program program) {
  BuildResult out;
  std::shared_ptr<ClassTable> table(new ClassTable());
  table->program_ = std::move(program);
  try {
    table->resolve();
  } catch (DiagnosticError &e) {
    Diagnostic d = e.diagnostic();
    d.file = table->program_.path;
    out.diagnostics.push_back(std::move(d));
    return out;
  }
  out.table = std::move(table);
  return out;
}

const ClassInfo *ClassTable::find(const std::string &name) const {
  auto it = classes_.find(name);
  return it == classes_.end() ? nullptr : &it->second;
}

const ClassInfo &ClassTable::get(const std::string &name) const {
  const ClassInfo *c = find(name);
  if (!c) fail(Category::UnknownName, {}, "unknown class " + name);
  return *c;
}

void ClassTable::resolve() {
  // Pass 1: collect declarations.
  for (const Decl &d : program_.decls) {
    if (const auto *c = std::get_if<ClassDecl>(&d)) {
      if (classes_.count(c->name))
        fail(Category::DuplicateMember, c->loc, "class " + c->name + " is defined twice");
      ClassInfo info;
      info.name = c->name;
      info.decl = c;
      classes_.emplace(c->name, std::move(info));
      order_.push_back(c->name);
    } else if (const auto *p = std::get_if<PredicateDecl>(&d)) {
      if (static_preds_.count(p->name))
        fail(Category::DuplicateMember, p->loc, "predicate " + p->name + " is defined twice");
      static_preds_[p->name] = p;
    } else {
      const auto &f = std::get<FunctionDecl>(d);
      for (const FunctionDecl *g : free_fns_)
        if (g->name == f.name && same_params(*g, f))
          fail(Category::DuplicateMember, f.loc, "function " + f.name + " is defined twice");
      free_fns_.push_back(&f);
    }
  }

  auto check_by_value = [&](const FunctionDecl &f) {
    for (const Param &p : f.params) {
      if (p.type.is_class_object() && !p.type.reference)
        fail(Category::PassByValue, p.loc,
             "parameter " + p.name + " passes an object of class " + p.type.cls + " by value");
      if (p.type.base == TypeRef::Base::Class && !find(p.type.cls))
        fail(Category::UnknownName, p.loc, "unknown class " + p.type.cls);
    }
    if (f.return_type.is_class_object() && !f.return_type.reference)
      fail(Category::PassByValue, f.loc,
           "function " + f.name + " returns an object of class " + f.return_type.cls + " by value");
  };
  for (const FunctionDecl *f : free_fns_) check_by_value(*f);

  // Pass 2: members.
  for (const std::string &name : order_) {
    ClassInfo &info = classes_.at(name);
    const ClassDecl &c = *info.decl;
    for (const BaseSpec &b : c.bases) {
      if (!classes_.count(b.name)) fail(Category::UnknownName, b.loc, "unknown base class " + b.name);
      if (std::find(info.bases.begin(), info.bases.end(), b.name) != info.bases.end())
        fail(Category::DuplicateMember, b.loc, "duplicate direct base " + b.name);
      info.bases.push_back(b.name);
    }
    std::set<std::string> member_names;
    for (const FieldDecl &f : c.fields) {
      if (!member_names.insert(f.name).second)
        fail(Category::DuplicateMember, f.loc, "duplicate field " + name + "::" + f.name);
      if (f.type.base == TypeRef::Base::Class && !classes_.count(f.type.cls))
        fail(Category::UnknownName, f.loc, "unknown class " + f.type.cls);
      if (f.type.reference) fail(Category::TypeError, f.loc, "reference fields are not supported");
      info.fields.push_back(&f);
    }
    for (const FunctionDecl &f : c.functions) {
      check_by_value(f);
      switch (f.kind) {
        case FunctionDecl::Kind::Constructor:
          for (const FunctionDecl *g : info.ctors)
            if (same_params(*g, f))
              fail(Category::DuplicateMember, f.loc, "duplicate constructor " + signature(name, f));
          info.ctors.push_back(&f);
          break;
        case FunctionDecl::Kind::Destructor:
          if (info.dtor) fail(Category::DuplicateMember, f.loc, "duplicate destructor of " + name);
          info.dtor = &f;
          break;
        default:
          if (member_names.count(f.name) &&
              std::none_of(info.methods.begin(), info.methods.end(),
                           [&](const FunctionDecl *g) { return g->name == f.name; }))
            fail(Category::DuplicateMember, f.loc, "member " + f.name + " is declared twice");
          for (const FunctionDecl *g : info.methods)
            if (g->name == f.name && same_params(*g, f))
              fail(Category::DuplicateMember, f.loc, "duplicate member function " + signature(name, f));
          member_names.insert(f.name);
          info.methods.push_back(&f);
          break;
      }
    }
    std::set<std::string> pred_names;
    for (const PredicateDecl &p : c.predicates) {
      if (!pred_names.insert(p.name).second)
        fail(Category::DuplicateMember, p.loc, "duplicate instance predicate " + name + "::" + p.name);
      info.predicates.push_back(&p);
    }
  }

  // Derivation graph must be acyclic; class-typed fields must not contain
  // their own class.
  {
    std::map<std::string, int> state;
    std::vector<std::string> topo;
    std::function<void(const std::string &)> visit = [&](const std::string &n) {
      int &s = state[n];
      if (s == 2) return;
      const ClassInfo &ci = classes_.at(n);
      if (s == 1) fail(Category::CyclicInheritance, ci.decl->loc, "class " + n + " derives from itself");
      s = 1;
      for (const std::string &b : ci.bases) visit(b);
      state[n] = 2;
      topo.push_back(n);
    };
    for (const std::string &n : order_) visit(n);

    std::map<std::string, int> cstate;
    std::function<void(const std::string &)> contain = [&](const std::string &n) {
      int &s = cstate[n];
      if (s == 2) return;
      const ClassInfo &ci = classes_.at(n);
      if (s == 1) fail(Category::TypeError, ci.decl->loc, "class " + n + " contains itself");
      s = 1;
      for (const std::string &b : ci.bases) contain(b);
      for (const FieldDecl *f : ci.fields)
        if (f->type.is_class_object()) contain(f->type.cls);
      cstate[n] = 2;
    };
    for (const std::string &n : order_) contain(n);

    // Polymorphism flags, virtual-ness and predicate roots in base-first order.
    for (const std::string &n : topo) {
      ClassInfo &ci = classes_.at(n);
      bool poly = false;
      for (const std::string &b : ci.bases) poly = poly || classes_.at(b).polymorphic;
      for (const FunctionDecl *f : ci.methods) poly = poly || f->is_virtual;
      if (ci.dtor && ci.dtor->is_virtual) poly = true;
      ci.polymorphic = poly;

      for (const PredicateDecl *p : ci.predicates) {
        std::string root = n;
        for (const std::string &b : ci.bases) {
          auto inherited = lookup_instance_predicate(b, p->name, p->loc);
          if (inherited) {
            root = inherited->root;
            break;
          }
        }
        ci.predicate_root[p->name] = root;
      }
    }
  }

  for (const std::string &n : order_) {
    const ClassInfo &ci = classes_.at(n);
    for (const FunctionDecl *f : ci.methods)
      if (f->is_override && overridden(n, *f).empty())
        fail(Category::TypeError, f->loc, signature(n, *f) + " is marked override but overrides nothing");

    for (const FunctionDecl *f : ci.ctors) {
      std::set<std::string> seen;
      for (const Initializer &in : f->inits) {
        if (!seen.insert(in.name).second)
          fail(Category::DuplicateMember, in.loc, "duplicate initializer for " + in.name);
        bool is_base = std::find(ci.bases.begin(), ci.bases.end(), in.name) != ci.bases.end();
        bool is_field = std::any_of(ci.fields.begin(), ci.fields.end(),
                                    [&](const FieldDecl *fd) { return fd->name == in.name; });
        if (in.name == n) {
          if (f->inits.size() != 1)
            fail(Category::TypeError, in.loc, "a delegating constructor must have no other initializers");
        } else if (!is_base && !is_field) {
          fail(Category::UnknownName, in.loc, in.name + " is neither a direct base nor a field of " + n);
        }
      }
    }
  }

  for (const std::string &n : order_) synthesize_special_members(classes_.at(n));
  build_vtype_definitions();
}

void ClassTable::synthesize_special_members(ClassInfo &info) {
  if (!info.bases.empty() || info.polymorphic) return;
  for (const FieldDecl *f : info.fields)
    if (!f->type.is_primitive()) return;
  SourceLoc loc = info.decl->loc;
  auto field_chunks = [&](bool with_init) {
    AssertionPtr all;
    for (const FieldDecl *f : info.fields) {
      std::vector<ExprPtr> args;
      args.push_back(make_expr(ExprKind::This, loc));
      if (with_init && f->init)
        args.push_back(clone(*f->init));
      else
        args.push_back(make_expr(ExprKind::Wildcard, loc));
      all = sep(std::move(all), chunk_assertion(info.name + "_" + f->name, std::move(args), loc));
    }
    return all ? std::move(all) : pure_true(loc);
  };
  if (info.ctors.empty()) {
    FunctionDecl f;
    f.kind = FunctionDecl::Kind::Constructor;
    f.name = info.name;
    f.loc = loc;
    f.contract = Contract{pure_true(loc), field_chunks(true), loc};
    f.body = std::make_unique<Stmt>();
    f.body->loc = loc;
    synthesized_fns_.push_back(std::move(f));
    info.ctors.push_back(&synthesized_fns_.back());
    info.implicit_ctor = true;
  }
  if (!info.dtor) {
    FunctionDecl f;
    f.kind = FunctionDecl::Kind::Destructor;
    f.name = "~" + info.name;
    f.loc = loc;
    f.contract = Contract{field_chunks(false), pure_true(loc), loc};
    f.body = std::make_unique<Stmt>();
    f.body->loc = loc;
    synthesized_fns_.push_back(std::move(f));
    info.dtor = &synthesized_fns_.back();
    info.implicit_dtor = true;
  }
}

void ClassTable::build_vtype_definitions() {
  for (const std::string &n : order_) {
    const ClassInfo &ci = classes_.at(n);
    if (!ci.polymorphic) continue;
    std::vector<std::string> poly_bases;
    for (const std::string &b : ci.bases)
      if (classes_.at(b).polymorphic) poly_bases.push_back(b);
    if (poly_bases.empty()) {
      vtype_defs_[n] = nullptr;
      continue;
    }
    SourceLoc loc = ci.decl->loc;
    PredicateDecl p;
    p.name = n + "_vtype";
    p.params.push_back(Param{TypeRef::class_type(n).pointer_to(), "s_addr", loc});
    p.params.push_back(Param{TypeRef::make(TypeRef::Base::TypeInfo).pointer_to(), "s_info", loc});
    p.input_count = 1;
    AssertionPtr body;
    for (const std::string &b : poly_bases) {
      std::vector<ExprPtr> args;
      auto cast = make_expr(ExprKind::Cast, loc);
      cast->type = TypeRef::class_type(b).pointer_to();
      cast->args.push_back(name_expr("s_addr", loc));
      args.push_back(std::move(cast));
      args.push_back(name_expr("s_info", loc));
      body = sep(std::move(body), chunk_assertion(b + "_vtype", std::move(args), loc));
    }
    p.body = std::move(body);
    synthesized_preds_.push_back(std::move(p));
    vtype_defs_[n] = &synthesized_preds_.back();
  }
}

bool ClassTable::derives_from(const std::string &derived, const std::string &base) const {
  if (derived == base) return true;
  for (const std::string &b : get(derived).bases)
    if (derives_from(b, base)) return true;
  return false;
}

UpcastResult ClassTable::upcast_path(const std::string &derived, const std::string &base) const {
  UpcastResult r;
  if (derived == base) {
    r.status = UpcastResult::Status::Ok;
    return r;
  }
  // Count paths, saturating at 2.
  std::map<std::string, int> memo;
  std::function<int(const std::string &)> count = [&](const std::string &c) -> int {
    if (c == base) return 1;
    auto it = memo.find(c);
    if (it != memo.end()) return it->second;
    int n = 0;
    for (const std::string &b : get(c).bases) n = std::min(2, n + count(b));
    memo[c] = n;
    return n;
  };
  int n = count(derived);
  if (n == 0) return r;
  if (n > 1) {
    r.status = UpcastResult::Status::Ambiguous;
    return r;
  }
  r.status = UpcastResult::Status::Ok;
  std::string c = derived;
  while (c != base) {
    for (const std::string &b : get(c).bases) {
      if (count(b) == 1) {
        r.path.push_back(OffsetSymbol{c, b});
        c = b;
        break;
      }
    }
  }
  return r;
}

std::optional<FieldRef> ClassTable::lookup_field(const std::string &cls, const std::string &field,
                                                 SourceLoc loc) const {
  const ClassInfo &ci = get(cls);
  for (const FieldDecl *f : ci.fields)
    if (f->name == field) return FieldRef{cls, f};
  std::optional<FieldRef> found;
  for (const std::string &b : ci.bases) {
    auto r = lookup_field(b, field, loc);
    if (!r) continue;
    if (found && found->cls != r->cls)
      fail(Category::TypeError, loc, "member " + field + " is ambiguous in " + cls);
    found = r;
  }
  return found;
}

MethodSet ClassTable::lookup_methods(const std::string &cls, const std::string &name,
                                     SourceLoc loc) const {
  const ClassInfo &ci = get(cls);
  MethodSet out;
  for (const FunctionDecl *f : ci.methods)
    if (f->name == name) out.candidates.push_back(f);
  if (!out.candidates.empty()) {
    out.cls = cls;
    return out;
  }
  for (const std::string &b : ci.bases) {
    MethodSet r = lookup_methods(b, name, loc);
    if (r.candidates.empty()) continue;
    if (!out.candidates.empty() && out.cls != r.cls)
      fail(Category::TypeError, loc, "member function " + name + " is ambiguous in " + cls);
    out = std::move(r);
  }
  return out;
}

std::optional<InstancePredicateRef> ClassTable::lookup_instance_predicate(const std::string &cls,
                                                                          const std::string &name,
                                                                          SourceLoc loc) const {
  const ClassInfo &ci = get(cls);
  for (const PredicateDecl *p : ci.predicates) {
    if (p->name != name) continue;
    auto it = ci.predicate_root.find(name);
    return InstancePredicateRef{cls, it == ci.predicate_root.end() ? cls : it->second, p};
  }
  std::optional<InstancePredicateRef> found;
  for (const std::string &b : ci.bases) {
    auto r = lookup_instance_predicate(b, name, loc);
    if (!r) continue;
    if (found && found->declaring != r->declaring)
      fail(Category::TypeError, loc, "instance predicate " + name + " is ambiguous in " + cls);
    if (!found) found = r;
  }
  return found;
}

const PredicateDecl *ClassTable::instance_definition(const std::string &root, const std::string &name,
                                                     const std::string &cls) const {
  const ClassInfo *ci = find(cls);
  if (!ci) return nullptr;
  for (const PredicateDecl *p : ci->predicates) {
    if (p->name != name) continue;
    auto it = ci->predicate_root.find(name);
    if (it != ci->predicate_root.end() && it->second == root) return p;
  }
  return nullptr;
}

const PredicateDecl *ClassTable::find_static_predicate(const std::string &name) const {
  auto it = static_preds_.find(name);
  return it == static_preds_.end() ? nullptr : it->second;
}

std::vector<const FunctionDecl *> ClassTable::free_functions(const std::string &name) const {
  std::vector<const FunctionDecl *> out;
  for (const FunctionDecl *f : free_fns_)
    if (f->name == name) out.push_back(f);
  return out;
}

bool ClassTable::is_virtual(const std::string &cls, const FunctionDecl &fn) const {
  if (fn.is_virtual) return true;
  if (fn.kind == FunctionDecl::Kind::Constructor || fn.kind == FunctionDecl::Kind::Free) return false;
  return !overridden(cls, fn).empty();
}

std::pair<std::string, const FunctionDecl *> ClassTable::final_overrider(
    const std::string &cls, const std::string &name, const std::vector<TypeRef> &params) const {
  std::function<std::vector<std::pair<std::string, const FunctionDecl *>>(const std::string &)> fo =
      [&](const std::string &c) {
        std::vector<std::pair<std::string, const FunctionDecl *>> out;
        for (const FunctionDecl *f : get(c).methods)
          if (f->name == name && params_match(*f, params)) return decltype(out){{c, f}};
        for (const std::string &b : get(c).bases)
          for (auto &r : fo(b))
            if (std::none_of(out.begin(), out.end(), [&](auto &o) { return o.second == r.second; }))
              out.push_back(r);
        return out;
      };
  auto found = fo(cls);
  std::string sig = name + "(" + join_types(params) + ")";
  if (found.empty()) fail(Category::UnknownName, {}, "no member " + sig + " in " + cls);
  if (found.size() > 1) fail(Category::TypeError, {}, "no unique final overrider of " + sig + " in " + cls);
  return found.front();
}

std::vector<std::pair<std::string, const FunctionDecl *>> ClassTable::overridden(
    const std::string &cls, const FunctionDecl &fn) const {
  std::vector<std::pair<std::string, const FunctionDecl *>> out;
  auto add = [&](const std::string &c, const FunctionDecl *f) {
    if (std::none_of(out.begin(), out.end(), [&](auto &o) { return o.second == f; }))
      out.emplace_back(c, f);
  };
  if (fn.kind == FunctionDecl::Kind::Destructor) {
    std::function<bool(const std::string &)> virtual_dtor = [&](const std::string &c) {
      const ClassInfo &ci = get(c);
      if (ci.dtor && ci.dtor->is_virtual) return true;
      for (const std::string &b : ci.bases)
        if (virtual_dtor(b)) return true;
      return false;
    };
    for (const std::string &b : get(cls).bases) {
      const ClassInfo &bi = get(b);
      if (bi.dtor && virtual_dtor(b)) add(b, bi.dtor);
    }
    return out;
  }
  if (fn.kind != FunctionDecl::Kind::Member) return out;
  std::function<void(const std::string &)> nearest = [&](const std::string &c) {
    for (const FunctionDecl *f : get(c).methods) {
      if (f->name == fn.name && same_params(*f, fn) && is_virtual(c, *f)) {
        add(c, f);
        return;
      }
    }
    for (const std::string &b : get(c).bases) nearest(b);
  };
  for (const std::string &b : get(cls).bases) nearest(b);
  return out;
}

std::vector<Diagnostic> ClassTable::check_override_completeness() const {
  std::vector<Diagnostic> out;
  for (const std::string &n : order_) {
    const ClassInfo &ci = get(n);
    std::vector<std::pair<std::string, const FunctionDecl *>> required;
    std::function<void(const std::string &)> collect = [&](const std::string &c) {
      for (const FunctionDecl *f : get(c).methods) {
        if (!is_virtual(c, *f)) continue;
        bool dup = std::any_of(required.begin(), required.end(), [&](auto &r) {
          return r.second->name == f->name && same_params(*r.second, *f);
        });
        if (!dup) required.emplace_back(c, f);
      }
      for (const std::string &b : get(c).bases) collect(b);
    };
    for (const std::string &b : ci.bases)
      if (get(b).polymorphic) collect(b);
    for (const auto &[c, f] : required) {
      bool declared = std::any_of(ci.methods.begin(), ci.methods.end(), [&](const FunctionDecl *g) {
        return g->name == f->name && same_params(*g, *f);
      });
      if (declared) continue;
      Diagnostic d;
      d.category = Category::OverrideIncomplete;
      d.file = program_.path;
      d.loc = ci.decl->loc;
      d.message = n + " does not override " + signature(c, *f);
      out.push_back(std::move(d));
    }
  }
  return out;
}

const PredicateDecl *ClassTable::vtype_definition(const std::string &cls) const {
  auto it = vtype_defs_.find(cls);
  if (it == vtype_defs_.end()) fail(Category::TypeError, {}, "class " + cls + " is not polymorphic");
  return it->second;
}

bool ClassTable::convertible(const ArgType &arg, const TypeRef &param) const {
  TypeRef at = arg.type.without_ref();
  if (param.reference) {
    if (!arg.lvalue) return false;
    TypeRef pt = param.without_ref();
    if (pt.is_class_object() && at.is_class_object()) return find(at.cls) && derives_from(at.cls, pt.cls);
    return at == pt;
  }
  if (param.is_pointer()) {
    if (arg.null_literal) return true;
    if (param.is_class_pointer() && at.is_class_pointer()) return find(at.cls) && derives_from(at.cls, param.cls);
    return at == param;
  }
  return at == param;
}

const FunctionDecl *ClassTable::resolve_overload(const std::vector<const FunctionDecl *> &candidates,
                                                 const std::vector<ArgType> &args, SourceLoc loc,
                                                 const std::string &what) const {
  std::vector<const FunctionDecl *> viable;
  for (const FunctionDecl *f : candidates) {
    if (f->params.size() != args.size()) continue;
    bool ok = true;
    for (std::size_t i = 0; i < args.size() && ok; ++i) ok = convertible(args[i], f->params[i].type);
    if (ok) viable.push_back(f);
  }
  std::vector<TypeRef> ats;
  for (const ArgType &a : args) ats.push_back(a.null_literal ? TypeRef::make(TypeRef::Base::Void).pointer_to() : a.type);
  if (viable.empty())
    fail(Category::NoViableOverload, loc, "no viable overload for " + what + "(" + join_types(ats) + ")");
  if (viable.size() > 1)
    fail(Category::AmbiguousOverload, loc, "ambiguous call to " + what + "(" + join_types(ats) + ")");
  return viable.front();
}

std::string ClassTable::signature(const std::string &cls, const FunctionDecl &fn) const {
  std::string s = cls.empty() ? fn.name : cls + "::" + fn.name;
  return s + "(" + join_types(param_types(fn)) + ")";
}

}  // namespace mcv
