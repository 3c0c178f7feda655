#pragma once

#include <string>

#include "mcv/ast.hpp"

namespace mcv {

// MiniCpp source text for the tree. Ghost material is emitted inside `//@`
// comments so that the output parses back to an equal tree.
std::string pretty_print(const Program &program);

std::string to_source(const Expr &e);
std::string to_source(const Assertion &a);
std::string to_source(const TypeRef &t);

// Location-free structural dump. Two trees are structurally equal iff their
// dumps are equal.
std::string structural_dump(const Program &program);
std::string structural_dump(const Assertion &a);
std::string structural_dump(const Expr &e);

}  // namespace mcv
