#pragma once

#include <string>
#include <vector>

#include "mcv/verifier.hpp"

namespace mcv {

// Everything known about one input file after parsing, resolution and
// verification.
struct FileReport {
  std::string path;
  bool io_error = false;
  std::vector<Diagnostic> errors;  // parse and resolution errors
  std::vector<Obligation> obligations;

  bool verified() const;
  // Categories of all errors and failed obligations.
  std::vector<Category> categories() const;
};

FileReport verify_source(const std::string &text, const std::string &path, const VerifyOptions &options = {});
FileReport verify_file(const std::string &path, const VerifyOptions &options = {});

// 0: all obligations verified; 1: a verification failure; 2: I/O, parse or
// resolution errors.
int exit_code(const std::vector<FileReport> &reports);

// One line per obligation or error: `<file>:<line>:<col>: <verdict>: <subject>`.
std::string render_text(const std::vector<FileReport> &reports);
// Failure details and warnings, for stderr.
std::string render_details(const std::vector<FileReport> &reports, bool trace);
// Stable JSON document; traces only when `trace` is set.
std::string render_structured(const std::vector<FileReport> &reports, bool trace);

struct ManifestEntry {
  std::string path;
  bool expect_verified = true;
  Category expected = Category::SyntaxError;  // when !expect_verified
};

// Lines `<path> verify` or `<path> reject:<Category>`; `#` starts a comment.
// Relative paths are resolved against the manifest's directory.
std::vector<ManifestEntry> parse_manifest(const std::string &text, const std::string &base_dir);

struct ManifestResult {
  ManifestEntry entry;
  FileReport report;
  bool pass = false;
  std::string actual;
};

std::vector<ManifestResult> run_manifest(const std::vector<ManifestEntry> &entries, const VerifyOptions &options = {});

}  // namespace mcv
