#include <sys/wait.h>

#include <array>
#include <cstdio>

#include "helpers.hpp"
#include "json.hpp"

using namespace mcv;
using nlohmann::json;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run_cli(const std::string &args) {
  std::string cmd = std::string(MCVERIFY_EXE) + " " + args + " 2>/dev/null";
  Run r;
  FILE *p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string corpus_arg(const std::string &name) { return "'" + testing::corpus(name) + "'"; }

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run_cli(corpus_arg("point.mcpp")).status == 0);
  Run l2 = run_cli(corpus_arg("strengthened_pre.mcpp"));
  CHECK(l2.status == 1);
  CHECK(l2.out.find("SubtypingViolation: B::foo() <: A::foo()") != std::string::npos);
  CHECK(run_cli(corpus_arg("syntax_error.mcpp")).status == 2);
  CHECK(run_cli(corpus_arg("unknown_base.mcpp")).status == 2);
  CHECK(run_cli("/nonexistent/file.mcpp").status == 2);
  CHECK(run_cli(corpus_arg("point.mcpp") + " " + corpus_arg("syntax_error.mcpp")).status == 2);
  CHECK(run_cli(corpus_arg("point.mcpp") + " " + corpus_arg("new_leak.mcpp")).status == 1);
}

TEST_CASE("text lines") {
  Run r = run_cli(corpus_arg("point.mcpp"));
  std::istringstream in(r.out);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    CHECK(line.find(": Verified: ") != std::string::npos);
    CHECK(line.rfind(testing::corpus("point.mcpp") + ":", 0) == 0);
  }
  CHECK(n == 6);
}

TEST_CASE("structured report shape") {
  std::vector<FileReport> reports = {verify_file(testing::corpus("strengthened_pre.mcpp"))};
  json doc = json::parse(render_structured(reports, false));
  CHECK(doc["format"] == "mcverify-report");
  CHECK(doc["version"] == 1);
  REQUIRE(doc["files"].size() == 1);
  const json &f = doc["files"][0];
  CHECK(f["verified"] == false);
  bool seen = false;
  for (const json &o : f["obligations"]) {
    CHECK(o.contains("subject"));
    CHECK(o.contains("kind"));
    CHECK(o.contains("verdict"));
    CHECK(o["location"]["line"].is_number_integer());
    CHECK_FALSE(o.contains("trace"));
    if (o["verdict"] == "Verified") {
      CHECK(o["category"].is_null());
      continue;
    }
    seen = true;
    CHECK(o["category"] == "SubtypingViolation");
    CHECK(o["kind"] == "subtyping-check");
    CHECK(o["failure"]["conjunct"] == "this->x |-> ?v");
  }
  CHECK(seen);
}

TEST_CASE("traces only on request, in execution order") {
  std::vector<FileReport> reports = {verify_file(testing::corpus("point.mcpp"))};
  json doc = json::parse(render_structured(reports, true));
  const json &ctor = doc["files"][0]["obligations"][0];
  REQUIRE(ctor.contains("trace"));
  std::vector<std::string> kinds;
  for (const json &e : ctor["trace"]) kinds.push_back(e["event"]);
  REQUIRE(kinds.size() >= 3);
  CHECK(kinds[0] == "assume");
  auto produce = std::find(kinds.begin(), kinds.end(), "produce");
  auto consume = std::find(kinds.begin(), kinds.end(), "consume");
  CHECK(produce < consume);

  Run cli = run_cli("--format structured --trace " + corpus_arg("point.mcpp"));
  CHECK(json::parse(cli.out)["files"][0]["obligations"][0].contains("trace"));
}

TEST_CASE("structured output is deterministic") {
  std::vector<std::string> names = {"ctor_vcall.mcpp", "shape_square.mcpp", "scope_locals.mcpp",
                                    "diamond_ambiguous.mcpp"};
  std::string args = "--format structured --trace";
  for (const std::string &n : names) args += " " + corpus_arg(n);
  Run a = run_cli(args), b = run_cli(args);
  CHECK(a.out == b.out);
  CHECK_FALSE(a.out.empty());

  std::vector<FileReport> r1, r2;
  for (const std::string &n : names) {
    r1.push_back(verify_file(testing::corpus(n)));
    r2.push_back(verify_file(testing::corpus(n)));
  }
  CHECK(render_structured(r1, true) == render_structured(r2, true));
}

TEST_CASE("manifest parsing") {
  auto entries = parse_manifest("# comment\n\na.mcpp verify\nsub/b.mcpp reject:Leak  # trailing\n", "/base");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].path == "/base/a.mcpp");
  CHECK(entries[0].expect_verified);
  CHECK(entries[1].path == "/base/sub/b.mcpp");
  CHECK_FALSE(entries[1].expect_verified);
  CHECK(entries[1].expected == Category::Leak);
  CHECK_THROWS(parse_manifest("a.mcpp maybe\n", "/base"));
  CHECK_THROWS(parse_manifest("a.mcpp reject:NoSuchCategory\n", "/base"));
}

TEST_CASE("corpus manifest") {
  std::string text = testing::read_file(testing::corpus("manifest.txt"));
  auto results = run_manifest(parse_manifest(text, MCV_CORPUS_DIR));
  CHECK(results.size() >= 20);
  for (const ManifestResult &r : results) {
    INFO(r.entry.path << " -> " << r.actual);
    CHECK(r.pass);
    // the exit-code contract agrees with each expectation
    int code = exit_code({r.report});
    if (r.entry.expect_verified)
      CHECK(code == 0);
    else
      CHECK(code == (is_resolution_category(r.entry.expected) ? 2 : 1));
  }
  CHECK(run_cli("--manifest '" + testing::corpus("manifest.txt") + "'").status == 0);
}
