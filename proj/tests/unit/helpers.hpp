#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mcv/class_table.hpp"
#include "mcv/parser.hpp"
#include "mcv/report.hpp"

namespace testing {

inline std::shared_ptr<const mcv::ClassTable> table_of(const std::string &src) {
  mcv::ParseResult pr = mcv::parse_program(src, "t.mcpp");
  REQUIRE_MESSAGE(pr.ok(), (pr.diagnostics.empty() ? "" : pr.diagnostics[0].str()));
  mcv::BuildResult br = mcv::ClassTable::build(std::move(*pr.program));
  REQUIRE_MESSAGE(br.ok(), (br.diagnostics.empty() ? "" : br.diagnostics[0].str()));
  return br.table;
}

inline mcv::FileReport verify(const std::string &src) { return mcv::verify_source(src, "t.mcpp"); }

inline const mcv::Obligation *find(const mcv::FileReport &r, const std::string &subject) {
  for (const mcv::Obligation &o : r.obligations)
    if (o.subject == subject) return &o;
  return nullptr;
}

inline std::string verdict(const mcv::FileReport &r, const std::string &subject) {
  const mcv::Obligation *o = find(r, subject);
  return o ? o->verdict() : "<missing " + subject + ">";
}

inline std::string read_file(const std::string &path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string corpus(const std::string &name) { return std::string(MCV_CORPUS_DIR) + "/" + name; }

}  // namespace testing
