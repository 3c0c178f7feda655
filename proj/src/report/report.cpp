#include "mcv/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "mcv/parser.hpp"

namespace mcv {

namespace {

using Json = nlohmann::ordered_json;

std::string loc_str(const std::string &file, SourceLoc loc) {
  return file + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.col);
}

Json loc_json(SourceLoc loc) { return Json{{"line", loc.line}, {"col", loc.col}}; }

Json diag_json(const Diagnostic &d) {
  Json j;
  j["category"] = std::string(category_name(d.category));
  j["location"] = loc_json(d.loc);
  j["message"] = d.message;
  if (!d.conjunct.empty()) j["conjunct"] = d.conjunct;
  if (!d.heap.empty() || d.category == Category::MissingChunk || d.category == Category::Leak) j["heap"] = d.heap;
  return j;
}

// Lines sorted by location, errors before obligations at the same spot.
struct Line {
  SourceLoc loc;
  std::string verdict;
  std::string subject;
};

std::vector<Line> lines_of(const FileReport &r) {
  std::vector<Line> out;
  for (const Diagnostic &d : r.errors) out.push_back({d.loc, std::string(category_name(d.category)), d.message});
  for (const Obligation &o : r.obligations) out.push_back({o.loc, o.verdict(), o.subject});
  std::stable_sort(out.begin(), out.end(), [](const Line &a, const Line &b) { return a.loc < b.loc; });
  return out;
}

}  // namespace

bool FileReport::verified() const {
  if (io_error || !errors.empty()) return false;
  return std::all_of(obligations.begin(), obligations.end(), [](const Obligation &o) { return o.verified(); });
}

std::vector<Category> FileReport::categories() const {
  std::vector<Category> out;
  for (const Diagnostic &d : errors) out.push_back(d.category);
  for (const Obligation &o : obligations)
    if (o.failure) out.push_back(o.failure->category);
  return out;
}

FileReport verify_source(const std::string &text, const std::string &path, const VerifyOptions &options) {
  FileReport r;
  r.path = path;
  ParseResult pr = parse_program(text, path);
  if (!pr.ok()) {
    r.errors = pr.diagnostics;
    return r;
  }
  BuildResult br = ClassTable::build(std::move(*pr.program));
  if (!br.ok()) {
    r.errors = br.diagnostics;
    for (Diagnostic &d : r.errors) d.file = path;
    return r;
  }
  r.obligations = verify_program(*br.table, options);
  return r;
}

FileReport verify_file(const std::string &path, const VerifyOptions &options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    FileReport r;
    r.path = path;
    r.io_error = true;
    return r;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return verify_source(ss.str(), path, options);
}

int exit_code(const std::vector<FileReport> &reports) {
  int code = 0;
  for (const FileReport &r : reports) {
    if (r.io_error) return 2;
    for (const Diagnostic &d : r.errors)
      if (is_resolution_category(d.category)) return 2;
    if (!r.verified()) code = 1;
  }
  return code;
}

std::string render_text(const std::vector<FileReport> &reports) {
  std::string out;
  for (const FileReport &r : reports)
    for (const Line &l : lines_of(r)) out += loc_str(r.path, l.loc) + ": " + l.verdict + ": " + l.subject + "\n";
  return out;
}

std::string render_details(const std::vector<FileReport> &reports, bool trace) {
  std::string out;
  for (const FileReport &r : reports) {
    if (r.io_error) out += r.path + ": error: cannot read file\n";
    for (const Obligation &o : r.obligations) {
      for (const Diagnostic &w : o.warnings)
        out += loc_str(r.path, w.loc) + ": warning: " + std::string(category_name(w.category)) + ": " + w.message + "\n";
      if (o.failure) {
        const Diagnostic &d = *o.failure;
        out += loc_str(r.path, d.loc) + ": " + std::string(category_name(d.category)) + ": " + d.message + "\n";
        if (!d.conjunct.empty()) out += "  conjunct: " + d.conjunct + "\n";
        for (const std::string &c : d.heap) out += "  heap: " + c + "\n";
      }
      if (trace) {
        out += "trace of " + o.subject + ":\n";
        for (const TraceEvent &e : o.trace)
          out += "  " + std::to_string(e.loc.line) + ":" + std::to_string(e.loc.col) + " " +
                 std::string(trace_kind_name(e.kind)) + " " + e.text + "\n";
      }
    }
  }
  return out;
}

std::string render_structured(const std::vector<FileReport> &reports, bool trace) {
  Json files = Json::array();
  for (const FileReport &r : reports) {
    Json f;
    f["path"] = r.path;
    f["verified"] = r.verified();
    if (r.io_error) f["io_error"] = true;
    Json errors = Json::array();
    for (const Diagnostic &d : r.errors) errors.push_back(diag_json(d));
    f["errors"] = errors;
    Json obs = Json::array();
    for (const Obligation &o : r.obligations) {
      Json j;
      j["subject"] = o.subject;
      j["kind"] = std::string(obligation_kind_name(o.kind));
      j["verdict"] = o.verdict();
      j["category"] = o.failure ? Json(std::string(category_name(o.failure->category))) : Json(nullptr);
      j["location"] = loc_json(o.loc);
      if (o.failure) j["failure"] = diag_json(*o.failure);
      Json warnings = Json::array();
      for (const Diagnostic &w : o.warnings) warnings.push_back(diag_json(w));
      j["warnings"] = warnings;
      if (trace) {
        Json events = Json::array();
        for (const TraceEvent &e : o.trace)
          events.push_back(Json{{"event", std::string(trace_kind_name(e.kind))},
                                {"location", loc_json(e.loc)},
                                {"text", e.text},
                                {"heap_size", e.heap_size},
                                {"path_size", e.path_size}});
        j["trace"] = events;
      }
      obs.push_back(std::move(j));
    }
    f["obligations"] = obs;
    files.push_back(std::move(f));
  }
  Json doc;
  doc["format"] = "mcverify-report";
  doc["version"] = 1;
  doc["files"] = files;
  doc["exit_code"] = exit_code(reports);
  return doc.dump(2) + "\n";
}

std::vector<ManifestEntry> parse_manifest(const std::string &text, const std::string &base_dir) {
  std::vector<ManifestEntry> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string path, expect;
    if (!(ls >> path)) continue;
    if (!(ls >> expect)) throw std::runtime_error("manifest line " + std::to_string(n) + ": missing expectation");
    ManifestEntry e;
    std::filesystem::path p(path);
    e.path = p.is_absolute() || base_dir.empty() ? path : (std::filesystem::path(base_dir) / p).string();
    if (expect == "verify") {
      e.expect_verified = true;
    } else if (expect.rfind("reject:", 0) == 0) {
      e.expect_verified = false;
      if (!category_from_name(expect.substr(7), e.expected))
        throw std::runtime_error("manifest line " + std::to_string(n) + ": unknown category " + expect.substr(7));
    } else {
      throw std::runtime_error("manifest line " + std::to_string(n) + ": bad expectation " + expect);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestResult> run_manifest(const std::vector<ManifestEntry> &entries, const VerifyOptions &options) {
  std::vector<ManifestResult> out;
  for (const ManifestEntry &e : entries) {
    ManifestResult m;
    m.entry = e;
    m.report = verify_file(e.path, options);
    auto cats = m.report.categories();
    if (m.report.io_error) {
      m.actual = "io-error";
    } else if (cats.empty()) {
      m.actual = "verify";
    } else {
      std::vector<std::string> names;
      for (Category c : cats) names.push_back("reject:" + std::string(category_name(c)));
      std::sort(names.begin(), names.end());
      names.erase(std::unique(names.begin(), names.end()), names.end());
      for (const std::string &s : names) m.actual += (m.actual.empty() ? "" : ",") + s;
    }
    if (e.expect_verified)
      m.pass = !m.report.io_error && m.report.verified();
    else
      m.pass = std::find(cats.begin(), cats.end(), e.expected) != cats.end();
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace mcv
