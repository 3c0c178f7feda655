#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mcv/ast.hpp"

namespace mcv {

enum class Category {
  // front end and resolution
  SyntaxError,
  UnknownName,
  CyclicInheritance,
  DuplicateMember,
  TypeError,
  PassByValue,
  // verification
  NullTarget,
  MissingChunk,
  Leak,
  AmbiguousUpcast,
  NotABase,
  ExplicitDtorCall,
  SubtypingViolation,
  OverrideIncomplete,
  OpaquePredicate,
  UnknownIndex,
  NoViableOverload,
  AmbiguousOverload,
  AssertionFailed,
  MalformedAssertion,
  Unreachable,  // warning only
};

std::string_view category_name(Category c);
bool category_from_name(std::string_view name, Category &out);

// Categories that mean the input could not be resolved into a checkable
// program. The driver maps these to exit code 2.
bool is_resolution_category(Category c);

struct Diagnostic {
  Category category = Category::SyntaxError;
  std::string file;
  SourceLoc loc;
  std::string message;
  // Verification failures: the conjunct being consumed and the heap at that
  // point, both rendered as text.
  std::string conjunct;
  std::vector<std::string> heap;

  std::string str() const;
};

class DiagnosticError : public std::runtime_error {
 public:
  explicit DiagnosticError(Diagnostic d)
      : std::runtime_error(d.message), diag_(std::move(d)) {}
  const Diagnostic &diagnostic() const { return diag_; }
  Diagnostic &diagnostic() { return diag_; }

 private:
  Diagnostic diag_;
};

[[noreturn]] void fail(Category c, SourceLoc loc, std::string message);

}  // namespace mcv
