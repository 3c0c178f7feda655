#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mcv/ast.hpp"

namespace mcv {

enum class TokenKind { Ident, Number, Punct, GhostBegin, GhostEnd, Eof };

struct Token {
  TokenKind kind = TokenKind::Eof;
  std::string text;
  SourceLoc loc;
  bool ghost = false;
};

// Splits MiniCpp source into tokens. Ordinary comments are dropped; the
// contents of `/*@ ... @*/` and `//@ ...` are tokenized and bracketed by
// GhostBegin/GhostEnd markers. With `ghost_only`, the whole text is lexed as
// annotation content and no markers are emitted. Throws
// DiagnosticError(SyntaxError).
std::vector<Token> tokenize(std::string_view text, bool ghost_only = false);

}  // namespace mcv
