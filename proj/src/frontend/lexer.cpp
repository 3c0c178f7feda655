#include "mcv/lexer.hpp"

#include <array>
#include <cctype>

#include "mcv/diagnostics.hpp"

namespace mcv {

namespace {

constexpr std::array<std::string_view, 2> kPunct3 = {"&*&", "|->"};
constexpr std::array<std::string_view, 12> kPunct2 = {
    "->", "::", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-="};

class Lexer {
 public:
  Lexer(std::string_view text, bool ghost_only)
      : text_(text), ghost_(ghost_only), ghost_block_(ghost_only), ghost_only_(ghost_only) {}

  std::vector<Token> run() {
    while (true) {
      skip_space_and_comments();
      if (at_end()) break;
      if (starts_with("//@") && !ghost_) {
        begin_ghost(false, 3);
        continue;
      }
      if (starts_with("/*@") && !ghost_) {
        begin_ghost(true, 3);
        continue;
      }
      if (ghost_ && ghost_block_ && !ghost_only_ && starts_with("@*/")) {
        end_ghost(3);
        continue;
      }
      lex_token();
    }
    if (ghost_ && !ghost_only_) {
      if (ghost_block_) fail(Category::SyntaxError, ghost_start_, "unterminated ghost annotation");
      end_ghost(0);
    }
    Token eof;
    eof.kind = TokenKind::Eof;
    eof.loc = loc();
    out_.push_back(eof);
    return std::move(out_);
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek(std::size_t k = 0) const {
    return pos_ + k < text_.size() ? text_[pos_ + k] : '\0';
  }
  bool starts_with(std::string_view s) const { return text_.substr(pos_).starts_with(s); }
  SourceLoc loc() const { return {line_, col_}; }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && !at_end(); ++i) {
      if (text_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void begin_ghost(bool block, std::size_t width) {
    ghost_start_ = loc();
    advance(width);
    ghost_ = true;
    ghost_block_ = block;
    Token t;
    t.kind = TokenKind::GhostBegin;
    t.loc = ghost_start_;
    t.ghost = true;
    out_.push_back(t);
  }

  void end_ghost(std::size_t width) {
    Token t;
    t.kind = TokenKind::GhostEnd;
    t.loc = loc();
    t.ghost = true;
    advance(width);
    ghost_ = false;
    ghost_block_ = false;
    out_.push_back(t);
  }

  void skip_space_and_comments() {
    while (!at_end()) {
      char c = peek();
      if (c == '\n' && ghost_ && !ghost_block_) {
        end_ghost(1);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        continue;
      }
      if (starts_with("//@") || starts_with("/*@")) {
        if (!ghost_) return;
        if (ghost_only_) {
          advance(3);
          continue;
        }
        fail(Category::SyntaxError, loc(), "nested ghost annotation");
      }
      if (starts_with("//")) {
        while (!at_end() && peek() != '\n') advance();
        continue;
      }
      if (starts_with("/*")) {
        SourceLoc start = loc();
        advance(2);
        while (!at_end() && !starts_with("*/")) advance();
        if (at_end()) fail(Category::SyntaxError, start, "unterminated comment");
        advance(2);
        continue;
      }
      return;
    }
  }

  void push(TokenKind kind, std::string text, SourceLoc at) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.loc = at;
    t.ghost = ghost_;
    out_.push_back(std::move(t));
  }

  void lex_token() {
    SourceLoc at = loc();
    char c = peek();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string s;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
        s += peek();
        advance();
      }
      // Explicit instance-predicate family names: Class#pred (ghost only).
      if (ghost_ && peek() == '#' &&
          (std::isalpha(static_cast<unsigned char>(peek(1))) || peek(1) == '_')) {
        s += '#';
        advance();
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
          s += peek();
          advance();
        }
      }
      push(TokenKind::Ident, std::move(s), at);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string s;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        s += peek();
        advance();
      }
      if (std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')
        fail(Category::SyntaxError, at, "malformed number literal");
      push(TokenKind::Number, std::move(s), at);
      return;
    }
    for (auto p : kPunct3) {
      if (starts_with(p)) {
        advance(p.size());
        push(TokenKind::Punct, std::string(p), at);
        return;
      }
    }
    for (auto p : kPunct2) {
      if (starts_with(p)) {
        advance(p.size());
        push(TokenKind::Punct, std::string(p), at);
        return;
      }
    }
    static constexpr std::string_view singles = "{}()[];:,.<>=+-*/%!&|?~#@";
    if (singles.find(c) != std::string_view::npos) {
      advance();
      push(TokenKind::Punct, std::string(1, c), at);
      return;
    }
    fail(Category::SyntaxError, at, std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  bool ghost_ = false;
  bool ghost_block_ = false;
  bool ghost_only_ = false;
  SourceLoc ghost_start_;
  std::vector<Token> out_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view text, bool ghost_only) {
  return Lexer(text, ghost_only).run();
}

}  // namespace mcv
