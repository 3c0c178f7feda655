// Acceptance checks: one PASS/FAIL line per criterion.
// usage: mcv_acceptance <corpus-dir> [<mcverify>]
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "mcv/report.hpp"
#include "properties.hpp"

using namespace mcv;

namespace {

std::string corpus_dir;
std::string mcverify;

FileReport load(const std::string &name) { return verify_file(corpus_dir + "/" + name); }

const Obligation *find(const FileReport &r, const std::string &subject) {
  for (const Obligation &o : r.obligations)
    if (o.subject == subject) return &o;
  return nullptr;
}

bool has_category(const FileReport &r, Category c) {
  for (Category x : r.categories())
    if (x == c) return true;
  return false;
}

bool failed_with(const FileReport &r, const std::string &subject, Category c, const std::string &conjunct = "") {
  const Obligation *o = find(r, subject);
  return o && o->failure && o->failure->category == c &&
         (conjunct.empty() || o->failure->conjunct.find(conjunct) != std::string::npos);
}

bool verified(const FileReport &r, const std::string &subject) {
  const Obligation *o = find(r, subject);
  return o && o->verified();
}

bool clean(const FileReport &r) {
  if (!r.verified() || !r.errors.empty() || r.obligations.empty()) return false;
  for (const Obligation &o : r.obligations)
    if (!o.warnings.empty()) return false;
  return true;
}

struct Result {
  bool pass = false;
  std::string detail;
};

Result c1() {
  FileReport r = load("shape_square.mcpp");
  bool ok = clean(r) && find(r, "Square::area() <: Shape::area()");
  return {ok, std::to_string(r.obligations.size()) + " obligations"};
}

Result c2() {
  FileReport r = load("strengthened_pre.mcpp");
  const Obligation *o = find(r, "B::foo() <: A::foo()");
  bool ok = o && o->failure && o->failure->category == Category::SubtypingViolation &&
            o->failure->message.rfind("consuming the overriding precondition", 0) == 0;
  return {ok, o && o->failure ? o->failure->message : "no failure"};
}

Result c3() {
  FileReport r = load("instance_override.mcpp");
  bool ok = clean(r) && verified(r, "B::foo() <: A::foo()");
  return {ok, std::to_string(r.obligations.size()) + " obligations"};
}

Result c4() {
  FileReport r = load("ctor_vcall.mcpp");
  bool rejected = failed_with(r, "C::C()", Category::MissingChunk, "A_vtype");
  bool own_body = verified(r, "C2::C2()");
  return {rejected && own_body, std::string("B(this) ") + (rejected ? "rejected" : "accepted") + ", own-body calls " +
                                    (own_body ? "verified" : "failed")};
}

Result c5() {
  FileReport amb = load("diamond_ambiguous.mcpp");
  FileReport expl = load("diamond_explicit.mcpp");
  bool ok = has_category(amb, Category::AmbiguousUpcast) && clean(expl);
  return {ok, ""};
}

Result c6() {
  std::vector<std::string> bad;
  auto need = [&](bool cond, const std::string &what) {
    if (!cond) bad.push_back(what);
  };
  FileReport dd = load("double_delete.mcpp");
  need(failed_with(dd, "twice()", Category::MissingChunk, "new_block_Token"), "double delete");
  FileReport vb = load("delete_via_base.mcpp");
  need(failed_with(vb, "through_base()", Category::MissingChunk, "new_block_B"), "delete through base");
  FileReport lk = load("new_leak.mcpp");
  need(failed_with(lk, "forget()", Category::Leak), "leak");
  FileReport ed = load("explicit_dtor.mcpp");
  need(failed_with(ed, "destroy_early()", Category::ExplicitDtorCall), "explicit dtor");
  std::string detail;
  for (const std::string &b : bad) detail += (detail.empty() ? "failed: " : ", ") + b;
  return {bad.empty(), detail};
}

Result c7() {
  FileReport r = load("override_incomplete.mcpp");
  return {failed_with(r, "A::bar() in B", Category::OverrideIncomplete), ""};
}

Result c8() {
  using namespace mcv::props;
  struct Suite {
    const char *name;
    Outcome o;
  };
  std::vector<Suite> suites = {
      {"entailment", entailment_soundness(300, 101)},
      {"roundtrip", produce_consume_roundtrip(250, 102)},
      {"upcast", upcast_agreement(250, 103)},
      {"coefficients", coefficient_accounting(300, 104)},
  };
  bool ok = true;
  std::string detail;
  for (const Suite &s : suites) {
    ok = ok && s.o.ok() && s.o.cases >= 200;
    detail += std::string(detail.empty() ? "" : "; ") + s.name + " " + s.o.summary();
  }
  return {ok, detail};
}

std::string run_structured(const std::vector<std::string> &files) {
  if (mcverify.empty()) {
    std::vector<FileReport> reports;
    for (const std::string &f : files) reports.push_back(verify_file(f));
    return render_structured(reports, true);
  }
  std::string cmd = "'" + mcverify + "' --format structured --trace";
  for (const std::string &f : files) cmd += " '" + f + "'";
  cmd += " 2>/dev/null";
  std::string out;
  FILE *p = popen(cmd.c_str(), "r");
  if (!p) return "";
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
  pclose(p);
  return out;
}

Result c9() {
  std::vector<std::string> files;
  for (const auto &e : std::filesystem::directory_iterator(corpus_dir))
    if (e.path().extension() == ".mcpp") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  std::string first = run_structured(files);
  bool same = !first.empty();
  for (int i = 1; i < 3; ++i) same = same && run_structured(files) == first;
  return {same, std::to_string(files.size()) + " files, " + std::to_string(first.size()) + " bytes"};
}

}  // namespace

int main(int argc, char **argv) {
  if (argc < 2) {
    std::cerr << "usage: mcv_acceptance <corpus-dir> [<mcverify>]\n";
    return 2;
  }
  corpus_dir = argv[1];
  if (argc > 2) mcverify = argv[2];

  std::vector<std::pair<const char *, std::function<Result()>>> criteria = {
      {"shape/square verifies", c1},
      {"strengthened precondition is a subtyping violation", c2},
      {"instance-predicate override verifies", c3},
      {"virtual call during base construction", c4},
      {"diamond upcasts", c5},
      {"memory safety", c6},
      {"override completeness", c7},
      {"property suites", c8},
      {"deterministic structured output", c9},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception &e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first;
    if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
    std::cout << "\n";
  }
  return failed == 0 ? 0 : 1;
}
