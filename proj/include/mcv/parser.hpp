#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcv/ast.hpp"
#include "mcv/diagnostics.hpp"

namespace mcv {

struct ParseResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return program.has_value(); }
};

// Parses a whole translation unit. There is no error recovery: the first
// syntax error ends parsing and is reported with its location.
ParseResult parse_program(std::string_view text, std::string path);

// Parses the text of a single ghost assertion, e.g. "B_m(d, ?m) &*& m > 0".
// Throws DiagnosticError(SyntaxError).
AssertionPtr parse_assertion(std::string_view text);

// Parses a single expression (ghost syntax allowed). Throws on error.
ExprPtr parse_expression(std::string_view text);

ExprPtr clone(const Expr &e);
AssertionPtr clone(const Assertion &a);

}  // namespace mcv
