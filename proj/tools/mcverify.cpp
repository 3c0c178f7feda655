#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mcv/report.hpp"

namespace {

int run_manifest_mode(const std::string &manifest, const mcv::VerifyOptions &opts) {
  std::ifstream in(manifest);
  if (!in) {
    std::cerr << manifest << ": error: cannot read manifest\n";
    return 2;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  std::vector<mcv::ManifestEntry> entries;
  try {
    entries = mcv::parse_manifest(ss.str(), std::filesystem::path(manifest).parent_path().string());
  } catch (const std::exception &e) {
    std::cerr << manifest << ": error: " << e.what() << "\n";
    return 2;
  }
  int failed = 0;
  for (const mcv::ManifestResult &r : mcv::run_manifest(entries, opts)) {
    std::string expected = r.entry.expect_verified
                               ? "verify"
                               : "reject:" + std::string(mcv::category_name(r.entry.expected));
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.entry.path << " expected " << expected << " got " << r.actual
              << "\n";
    if (!r.pass) ++failed;
  }
  std::cout << entries.size() - failed << "/" << entries.size() << " corpus files as expected\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"mcverify: separation-logic verifier for MiniCpp"};
  std::vector<std::string> files;
  std::string format = "text";
  std::string manifest;
  bool trace = false;
  bool stop = false;
  app.add_option("files", files, "MiniCpp source files");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "structured"}));
  app.add_flag("--trace", trace, "Include symbolic execution traces");
  app.add_flag("--stop-on-first-error", stop, "Stop after the first failed obligation");
  app.add_option("--manifest", manifest, "Run a corpus manifest instead of verifying files");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  mcv::VerifyOptions opts;
  opts.stop_on_first_error = stop;
  if (!manifest.empty()) return run_manifest_mode(manifest, opts);
  if (files.empty()) {
    std::cerr << "mcverify: no input files\n";
    return 2;
  }

  std::vector<mcv::FileReport> reports;
  for (const std::string &f : files) {
    reports.push_back(mcv::verify_file(f, opts));
    if (stop && !reports.back().verified()) break;
  }
  if (format == "structured") {
    std::cout << mcv::render_structured(reports, trace);
  } else {
    std::cout << mcv::render_text(reports);
  }
  std::cerr << mcv::render_details(reports, trace && format == "text");
  return mcv::exit_code(reports);
}
