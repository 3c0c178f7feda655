#include "mcv/diagnostics.hpp"

#include <array>
#include <utility>

namespace mcv {

namespace {

constexpr std::array<std::pair<Category, std::string_view>, 21> kNames = {{
    {Category::SyntaxError, "SyntaxError"},
    {Category::UnknownName, "UnknownName"},
    {Category::CyclicInheritance, "CyclicInheritance"},
    {Category::DuplicateMember, "DuplicateMember"},
    {Category::TypeError, "TypeError"},
    {Category::PassByValue, "PassByValue"},
    {Category::NullTarget, "NullTarget"},
    {Category::MissingChunk, "MissingChunk"},
    {Category::Leak, "Leak"},
    {Category::AmbiguousUpcast, "AmbiguousUpcast"},
    {Category::NotABase, "NotABase"},
    {Category::ExplicitDtorCall, "ExplicitDtorCall"},
    {Category::SubtypingViolation, "SubtypingViolation"},
    {Category::OverrideIncomplete, "OverrideIncomplete"},
    {Category::OpaquePredicate, "OpaquePredicate"},
    {Category::UnknownIndex, "UnknownIndex"},
    {Category::NoViableOverload, "NoViableOverload"},
    {Category::AmbiguousOverload, "AmbiguousOverload"},
    {Category::AssertionFailed, "AssertionFailed"},
    {Category::MalformedAssertion, "MalformedAssertion"},
    {Category::Unreachable, "Unreachable"},
}};

}  // namespace

std::string_view category_name(Category c) {
  for (const auto &[cat, name] : kNames)
    if (cat == c) return name;
  return "Unknown";
}

bool category_from_name(std::string_view name, Category &out) {
  for (const auto &[cat, n] : kNames) {
    if (n == name) {
      out = cat;
      return true;
    }
  }
  return false;
}

bool is_resolution_category(Category c) {
  switch (c) {
    case Category::SyntaxError:
    case Category::UnknownName:
    case Category::CyclicInheritance:
    case Category::DuplicateMember:
    case Category::TypeError:
    case Category::PassByValue:
      return true;
    default:
      return false;
  }
}

std::string Diagnostic::str() const {
  std::string out = file;
  out += ":" + std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": ";
  out += category_name(category);
  out += ": ";
  out += message;
  return out;
}

void fail(Category c, SourceLoc loc, std::string message) {
  Diagnostic d;
  d.category = c;
  d.loc = loc;
  d.message = std::move(message);
  throw DiagnosticError(std::move(d));
}

}  // namespace mcv
