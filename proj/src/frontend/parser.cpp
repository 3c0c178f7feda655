#include "mcv/parser.hpp"

#include <set>

#include "mcv/lexer.hpp"

namespace mcv {

namespace {

bool is_pattern(const Expr &e) {
  return e.kind == ExprKind::Pattern || e.kind == ExprKind::Wildcard;
}

bool contains_pattern(const Expr &e) {
  if (is_pattern(e)) return true;
  for (const auto &a : e.args)
    if (a && contains_pattern(*a)) return true;
  return false;
}

void reject_patterns(const Expr &e) {
  if (contains_pattern(e))
    fail(Category::SyntaxError, e.loc,
         "patterns may only appear as chunk arguments or on the right of |->");
}

// Argument lists of chunks: a pattern is allowed only as a whole argument.
void check_argument(const Expr &e) {
  if (is_pattern(e)) return;
  reject_patterns(e);
}

class Parser {
 public:
  Parser(std::vector<Token> toks) : toks_(std::move(toks)) { scan_class_names(); }

  Program parse_program(std::string path) {
    Program p;
    p.path = std::move(path);
    while (!at(TokenKind::Eof)) parse_top_level(p);
    return p;
  }

  AssertionPtr parse_assertion_only() {
    auto a = parse_assertion();
    if (!at(TokenKind::Eof)) error("unexpected '" + cur().text + "' after assertion");
    return a;
  }

  ExprPtr parse_expression_only() {
    auto e = parse_expr();
    if (!at(TokenKind::Eof)) error("unexpected '" + cur().text + "' after expression");
    return e;
  }

 private:
  // ---- token helpers -------------------------------------------------------

  const Token &cur() const { return toks_[pos_]; }
  const Token &look(std::size_t k) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  bool at(TokenKind k) const { return cur().kind == k; }
  bool is(std::string_view text) const {
    return (cur().kind == TokenKind::Punct || cur().kind == TokenKind::Ident) &&
           cur().text == text;
  }
  bool is_at(std::size_t k, std::string_view text) const {
    const Token &t = look(k);
    return (t.kind == TokenKind::Punct || t.kind == TokenKind::Ident) && t.text == text;
  }
  bool accept(std::string_view text) {
    if (is(text)) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void error(const std::string &msg) const {
    fail(Category::SyntaxError, cur().loc, msg);
  }
  void expect(std::string_view text) {
    if (!accept(text)) {
      std::string got = at(TokenKind::Eof) ? "end of input"
                        : at(TokenKind::GhostEnd) ? "end of annotation"
                        : at(TokenKind::GhostBegin) ? "annotation"
                                                    : "'" + cur().text + "'";
      error("expected '" + std::string(text) + "', got " + got);
    }
  }
  std::string expect_ident() {
    if (!at(TokenKind::Ident)) error("expected identifier");
    return toks_[pos_++].text;
  }

  void scan_class_names() {
    for (std::size_t i = 0; i + 1 < toks_.size(); ++i) {
      if (toks_[i].kind == TokenKind::Ident &&
          (toks_[i].text == "class" || toks_[i].text == "struct") &&
          toks_[i + 1].kind == TokenKind::Ident)
        class_names_.insert(toks_[i + 1].text);
    }
  }

  bool is_class_name(const Token &t) const {
    return t.kind == TokenKind::Ident && class_names_.count(t.text) > 0;
  }

  // ---- types ---------------------------------------------------------------

  bool type_starts_at(std::size_t k) const {
    const Token &t = look(k);
    if (t.kind != TokenKind::Ident) return false;
    return t.text == "int" || t.text == "bool" || t.text == "void" || t.text == "const" ||
           t.text == "real" || (t.text == "std" && is_at(k + 1, "::")) || is_class_name(t);
  }

  TypeRef parse_type() {
    accept("const");
    TypeRef t;
    if (accept("int")) {
      t.base = TypeRef::Base::Int;
    } else if (accept("bool")) {
      t.base = TypeRef::Base::Bool;
    } else if (accept("void")) {
      t.base = TypeRef::Base::Void;
    } else if (accept("real")) {
      t.base = TypeRef::Base::Real;
    } else if (is("std")) {
      ++pos_;
      expect("::");
      if (!accept("type_info")) error("only std::type_info is supported from namespace std");
      t.base = TypeRef::Base::TypeInfo;
    } else if (is_class_name(cur())) {
      t.base = TypeRef::Base::Class;
      t.cls = toks_[pos_++].text;
    } else {
      error("expected a type");
    }
    accept("const");
    while (accept("*")) {
      ++t.pointer_depth;
      accept("const");
    }
    if (is("&&")) error("rvalue references are not supported");
    if (accept("&")) t.reference = true;
    return t;
  }

  // ---- declarations --------------------------------------------------------

  void parse_top_level(Program &p) {
    if (at(TokenKind::GhostBegin)) {
      ++pos_;
      while (!at(TokenKind::GhostEnd)) {
        if (!is("predicate")) error("expected predicate declaration in ghost annotation");
        p.decls.emplace_back(parse_predicate());
      }
      ++pos_;
      return;
    }
    if (is("class") || is("struct")) {
      if (auto cls = parse_class()) p.decls.emplace_back(std::move(*cls));
      return;
    }
    if (accept(";")) return;
    p.decls.emplace_back(parse_function_after_specifiers(FunctionDecl::Kind::Free, false));
  }

  PredicateDecl parse_predicate() {
    PredicateDecl d;
    d.loc = cur().loc;
    expect("predicate");
    d.name = expect_ident();
    expect("(");
    bool seen_semicolon = false;
    if (!is(")")) {
      while (true) {
        Param prm;
        prm.loc = cur().loc;
        prm.type = parse_type();
        prm.name = expect_ident();
        d.params.push_back(std::move(prm));
        if (accept(",")) continue;
        if (accept(";")) {
          if (seen_semicolon) error("more than one ';' in predicate parameter list");
          seen_semicolon = true;
          d.input_count = d.params.size();
          continue;
        }
        break;
      }
    }
    expect(")");
    if (!seen_semicolon) d.input_count = d.params.size();
    if (accept("=")) d.body = parse_assertion();
    expect(";");
    return d;
  }

  std::optional<ClassDecl> parse_class() {
    ClassDecl c;
    c.loc = cur().loc;
    c.is_struct = is("struct");
    ++pos_;
    c.name = expect_ident();
    if (accept(";")) return std::nullopt;  // forward declaration
    std::string saved = current_class_;
    current_class_ = c.name;
    if (accept(":")) {
      do {
        if (is("virtual")) error("virtual base classes are not supported");
        accept("public") || accept("private") || accept("protected");
        if (is("virtual")) error("virtual base classes are not supported");
        BaseSpec b;
        b.loc = cur().loc;
        b.name = expect_ident();
        c.bases.push_back(std::move(b));
      } while (accept(","));
    }
    expect("{");
    while (!accept("}")) parse_member(c);
    expect(";");
    current_class_ = saved;
    return c;
  }

  void parse_member(ClassDecl &c) {
    if (at(TokenKind::Eof)) error("unterminated class body");
    if ((is("public") || is("private") || is("protected")) && is_at(1, ":")) {
      pos_ += 2;
      return;
    }
    if (at(TokenKind::GhostBegin)) {
      ++pos_;
      while (!at(TokenKind::GhostEnd)) {
        if (!is("predicate")) error("expected predicate declaration in class annotation");
        c.predicates.push_back(parse_predicate());
      }
      ++pos_;
      return;
    }
    if (accept(";")) return;
    SourceLoc start = cur().loc;
    bool is_virtual = accept("virtual");
    if (is("~")) {
      ++pos_;
      std::string name = expect_ident();
      if (name != c.name) error("destructor name must match class name");
      FunctionDecl f;
      f.kind = FunctionDecl::Kind::Destructor;
      f.name = "~" + name;
      f.loc = start;
      f.is_virtual = is_virtual;
      expect("(");
      expect(")");
      parse_function_tail(f);
      c.functions.push_back(std::move(f));
      return;
    }
    if (is(c.name) && is_at(1, "(")) {
      if (is_virtual) error("constructors cannot be virtual");
      FunctionDecl f;
      f.kind = FunctionDecl::Kind::Constructor;
      f.name = c.name;
      f.loc = start;
      ++pos_;
      parse_params(f);
      parse_function_tail(f);
      c.functions.push_back(std::move(f));
      return;
    }
    TypeRef type = parse_type();
    SourceLoc name_loc = cur().loc;
    std::string name = expect_ident();
    if (is("(")) {
      FunctionDecl f;
      f.kind = FunctionDecl::Kind::Member;
      f.name = std::move(name);
      f.return_type = type;
      f.is_virtual = is_virtual;
      f.loc = start;
      parse_params(f);
      parse_function_tail(f);
      c.functions.push_back(std::move(f));
      return;
    }
    if (is_virtual) error("fields cannot be virtual");
    FieldDecl fd;
    fd.type = type;
    fd.name = std::move(name);
    fd.loc = name_loc;
    if (accept("=")) fd.init = parse_expr();
    expect(";");
    c.fields.push_back(std::move(fd));
  }

  FunctionDecl parse_function_after_specifiers(FunctionDecl::Kind kind, bool is_virtual) {
    FunctionDecl f;
    f.kind = kind;
    f.loc = cur().loc;
    f.is_virtual = is_virtual;
    f.return_type = parse_type();
    f.name = expect_ident();
    if (is("::")) error("out-of-class member definitions are not supported");
    parse_params(f);
    parse_function_tail(f);
    return f;
  }

  void parse_params(FunctionDecl &f) {
    expect("(");
    if (accept(")")) return;
    if (is("void") && is_at(1, ")")) {
      pos_ += 2;
      return;
    }
    do {
      Param p;
      p.loc = cur().loc;
      p.type = parse_type();
      p.name = expect_ident();
      f.params.push_back(std::move(p));
    } while (accept(","));
    expect(")");
  }

  bool contract_annotation_ahead() const {
    return at(TokenKind::GhostBegin) && (is_at(1, "requires") || is_at(1, "ensures"));
  }

  void parse_contract_annotations(FunctionDecl &f) {
    while (contract_annotation_ahead()) {
      ++pos_;
      while (!at(TokenKind::GhostEnd)) {
        if (!f.contract) {
          f.contract.emplace();
          f.contract->loc = cur().loc;
        }
        if (accept("requires")) {
          if (f.contract->pre) error("duplicate requires clause");
          f.contract->pre = parse_assertion();
        } else if (accept("ensures")) {
          if (f.contract->post) error("duplicate ensures clause");
          f.contract->post = parse_assertion();
        } else {
          error("expected 'requires' or 'ensures'");
        }
        expect(";");
      }
      ++pos_;
    }
  }

  void parse_function_tail(FunctionDecl &f) {
    while (true) {
      if (accept("const")) {
        f.is_const = true;
      } else if (accept("override")) {
        f.is_override = true;
      } else {
        break;
      }
    }
    parse_contract_annotations(f);
    if (accept(":")) {
      if (f.kind != FunctionDecl::Kind::Constructor)
        error("only constructors have initializer lists");
      do {
        Initializer in;
        in.loc = cur().loc;
        in.name = expect_ident();
        expect("(");
        if (!is(")")) {
          do in.args.push_back(parse_expr());
          while (accept(","));
        }
        expect(")");
        f.inits.push_back(std::move(in));
      } while (accept(","));
      parse_contract_annotations(f);
    }
    if (is("{")) {
      f.body = parse_block();
      return;
    }
    if (accept("=")) {
      if (!(at(TokenKind::Number) && cur().text == "0")) error("expected '0' for pure virtual");
      ++pos_;
      f.is_pure = true;
    }
    expect(";");
    parse_contract_annotations(f);
  }

  // ---- statements ----------------------------------------------------------

  StmtPtr parse_block() {
    auto b = std::make_unique<Stmt>();
    b->kind = StmtKind::Block;
    b->loc = cur().loc;
    expect("{");
    while (!accept("}")) {
      if (at(TokenKind::Eof)) error("unterminated block");
      if (at(TokenKind::GhostBegin)) {
        parse_ghost_statements(b->body);
        continue;
      }
      b->body.push_back(parse_stmt());
    }
    return b;
  }

  void parse_ghost_statements(std::vector<StmtPtr> &out) {
    ++pos_;
    while (!at(TokenKind::GhostEnd)) {
      auto s = std::make_unique<Stmt>();
      s->loc = cur().loc;
      if (accept("open")) {
        s->kind = StmtKind::Open;
      } else if (accept("close")) {
        s->kind = StmtKind::Close;
      } else if (accept("leak")) {
        s->kind = StmtKind::Leak;
      } else if (accept("assert")) {
        s->kind = StmtKind::GhostAssert;
      } else {
        error("expected ghost statement (open, close, leak, assert)");
      }
      s->assertion = parse_assertion();
      if (s->kind == StmtKind::Open || s->kind == StmtKind::Close) {
        auto k = s->assertion->kind;
        if (k != AssertKind::Chunk && k != AssertKind::Instance)
          fail(Category::SyntaxError, s->assertion->loc,
               "open/close require a predicate assertion");
      }
      expect(";");
      out.push_back(std::move(s));
    }
    ++pos_;
  }

  StmtPtr parse_stmt() {
    if (is("{")) return parse_block();
    if (at(TokenKind::GhostBegin)) {
      auto b = std::make_unique<Stmt>();
      b->kind = StmtKind::Block;
      b->loc = cur().loc;
      parse_ghost_statements(b->body);
      return b;
    }
    auto s = std::make_unique<Stmt>();
    s->loc = cur().loc;
    if (accept("if")) {
      s->kind = StmtKind::If;
      expect("(");
      s->expr = parse_expr();
      expect(")");
      s->then_branch = parse_stmt();
      if (accept("else")) s->else_branch = parse_stmt();
      return s;
    }
    if (accept("while")) {
      s->kind = StmtKind::While;
      expect("(");
      s->expr = parse_expr();
      expect(")");
      if (!(at(TokenKind::GhostBegin) && is_at(1, "invariant")))
        error("while loops require a '//@ invariant' annotation");
      ++pos_;
      expect("invariant");
      s->assertion = parse_assertion();
      expect(";");
      if (!at(TokenKind::GhostEnd)) error("expected end of invariant annotation");
      ++pos_;
      s->then_branch = parse_stmt();
      return s;
    }
    if (accept("return")) {
      s->kind = StmtKind::Return;
      if (!is(";")) s->expr = parse_expr();
      expect(";");
      return s;
    }
    if (accept("delete")) {
      s->kind = StmtKind::Delete;
      s->expr = parse_expr();
      expect(";");
      return s;
    }
    if (type_starts_at(0) && !(is_class_name(cur()) && is_at(1, "::")) &&
        !(is_class_name(cur()) && is_at(1, "("))) {
      s->kind = StmtKind::VarDecl;
      s->type = parse_type();
      s->name = expect_ident();
      if (accept("=")) {
        s->expr = parse_expr();
      } else if (is("(")) {
        ++pos_;
        s->ctor_syntax = true;
        if (!is(")")) {
          do s->ctor_args.push_back(parse_expr());
          while (accept(","));
        }
        expect(")");
      } else if (s->type.is_class_object()) {
        s->ctor_syntax = true;
      }
      expect(";");
      return s;
    }
    auto e = parse_expr();
    if (accept("=")) {
      s->kind = StmtKind::Assign;
      s->lhs = std::move(e);
      s->expr = parse_expr();
    } else if (is("+=") || is("-=")) {
      std::string op = cur().text.substr(0, 1);
      SourceLoc here = cur().loc;
      ++pos_;
      s->kind = StmtKind::Assign;
      auto rhs = parse_expr();
      s->expr = binary(op, clone(*e), std::move(rhs), here);
      s->lhs = std::move(e);
    } else if (is("++") || is("--")) {
      std::string op = cur().text.substr(0, 1);
      SourceLoc here = cur().loc;
      ++pos_;
      s->kind = StmtKind::Assign;
      auto one = std::make_unique<Expr>();
      one->kind = ExprKind::IntLit;
      one->int_value = 1;
      one->loc = here;
      s->expr = binary(op, clone(*e), std::move(one), here);
      s->lhs = std::move(e);
    } else {
      s->kind = StmtKind::ExprStmt;
      s->expr = std::move(e);
    }
    expect(";");
    return s;
  }

  // ---- expressions ---------------------------------------------------------

  static ExprPtr binary(std::string op, ExprPtr l, ExprPtr r, SourceLoc loc) {
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Binary;
    e->name = std::move(op);
    e->loc = loc;
    e->args.push_back(std::move(l));
    e->args.push_back(std::move(r));
    return e;
  }

  ExprPtr parse_expr() {
    auto c = parse_binary(0);
    if (is("?")) {
      SourceLoc here = cur().loc;
      ++pos_;
      auto t = parse_expr();
      expect(":");
      auto f = parse_expr();
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Ternary;
      e->loc = here;
      e->args.push_back(std::move(c));
      e->args.push_back(std::move(t));
      e->args.push_back(std::move(f));
      return e;
    }
    return c;
  }

  static int precedence(std::string_view op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "==" || op == "!=") return 3;
    if (op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
    if (op == "+" || op == "-") return 5;
    if (op == "*" || op == "/" || op == "%") return 6;
    return -1;
  }

  ExprPtr parse_binary(int min_prec) {
    auto lhs = parse_unary();
    while (cur().kind == TokenKind::Punct) {
      int p = precedence(cur().text);
      if (p < 0 || p < min_prec) break;
      std::string op = cur().text;
      SourceLoc here = cur().loc;
      ++pos_;
      auto rhs = parse_binary(p + 1);
      lhs = binary(op, std::move(lhs), std::move(rhs), here);
    }
    return lhs;
  }

  bool cast_ahead() const {
    if (!is("(")) return false;
    const Token &t = look(1);
    if (t.kind != TokenKind::Ident) return false;
    if (is_class_name(t)) return true;
    if (t.text == "int" || t.text == "bool") return true;
    if (t.text == "std" && is_at(2, "::")) return true;
    // `(T *)` cannot be an expression even when T is not a known class
    std::size_t k = 2;
    if (!is_at(k, "*")) return false;
    while (is_at(k, "*")) ++k;
    return is_at(k, ")");
  }

  ExprPtr parse_unary() {
    SourceLoc here = cur().loc;
    auto make = [&](ExprKind k) {
      auto e = std::make_unique<Expr>();
      e->kind = k;
      e->loc = here;
      return e;
    };
    if (is("-") || is("!")) {
      auto e = make(ExprKind::Unary);
      e->name = cur().text;
      ++pos_;
      e->args.push_back(parse_unary());
      return e;
    }
    if (accept("*")) {
      auto e = make(ExprKind::Deref);
      e->args.push_back(parse_unary());
      return e;
    }
    if (accept("&")) {
      auto operand = parse_unary();
      if (operand->kind == ExprKind::TypeId) return operand;
      auto e = make(ExprKind::AddrOf);
      e->args.push_back(std::move(operand));
      return e;
    }
    if (accept("new")) {
      auto e = make(ExprKind::New);
      e->type = parse_new_type();
      if (accept("(")) {
        if (!is(")")) {
          do e->args.push_back(parse_expr());
          while (accept(","));
        }
        expect(")");
      }
      return e;
    }
    if (cast_ahead()) {
      if (!is_class_name(look(1)) && is_at(2, "*")) class_names_.insert(look(1).text);
      ++pos_;
      auto e = make(ExprKind::Cast);
      e->type = parse_type();
      expect(")");
      e->args.push_back(parse_unary());
      return e;
    }
    return parse_postfix();
  }

  TypeRef parse_new_type() {
    TypeRef t;
    if (accept("int")) {
      t.base = TypeRef::Base::Int;
    } else if (accept("bool")) {
      t.base = TypeRef::Base::Bool;
    } else if (is_class_name(cur())) {
      t = TypeRef::class_type(toks_[pos_++].text);
    } else {
      error("expected a type after 'new'");
    }
    return t;
  }

  std::vector<ExprPtr> parse_call_args() {
    std::vector<ExprPtr> args;
    expect("(");
    if (!is(")")) {
      do args.push_back(parse_expr());
      while (accept(","));
    }
    expect(")");
    return args;
  }

  ExprPtr parse_postfix() {
    auto e = parse_primary();
    while (true) {
      SourceLoc here = cur().loc;
      if (is(".") || is("->")) {
        bool arrow = is("->");
        ++pos_;
        if (accept("~")) {
          auto d = std::make_unique<Expr>();
          d->kind = ExprKind::DtorCall;
          d->loc = here;
          d->arrow = arrow;
          d->name = expect_ident();
          expect("(");
          expect(")");
          d->args.push_back(std::move(e));
          e = std::move(d);
          continue;
        }
        std::string name = expect_ident();
        std::string qualifier;
        if (accept("::")) {
          qualifier = std::move(name);
          name = expect_ident();
        }
        if (is("(")) {
          auto c = std::make_unique<Expr>();
          c->kind = ExprKind::MemberCall;
          c->loc = here;
          c->arrow = arrow;
          c->name = std::move(name);
          c->qualifier = std::move(qualifier);
          c->args.push_back(std::move(e));
          for (auto &a : parse_call_args()) c->args.push_back(std::move(a));
          // A call result is never called again; the assertion parser handles
          // the indexed instance form `t->p(i)(args)`.
          e = std::move(c);
          continue;
        }
        if (!qualifier.empty()) error("qualified member access is only supported for calls");
        auto m = std::make_unique<Expr>();
        m->kind = ExprKind::Member;
        m->loc = here;
        m->arrow = arrow;
        m->name = std::move(name);
        m->args.push_back(std::move(e));
        e = std::move(m);
        continue;
      }
      break;
    }
    return e;
  }

  ExprPtr parse_primary() {
    SourceLoc here = cur().loc;
    auto make = [&](ExprKind k) {
      auto e = std::make_unique<Expr>();
      e->kind = k;
      e->loc = here;
      return e;
    };
    if (at(TokenKind::Number)) {
      auto e = make(ExprKind::IntLit);
      try {
        e->int_value = std::stoll(cur().text);
      } catch (const std::out_of_range &) {
        error("integer literal out of range");
      }
      ++pos_;
      return e;
    }
    if (accept("(")) {
      auto e = parse_expr();
      expect(")");
      return e;
    }
    if (is("?")) {
      ++pos_;
      auto e = make(ExprKind::Pattern);
      e->name = expect_ident();
      return e;
    }
    if (!at(TokenKind::Ident)) {
      if (at(TokenKind::GhostEnd) || at(TokenKind::GhostBegin) || at(TokenKind::Eof))
        error("unexpected end of expression");
      error("unexpected '" + cur().text + "'");
    }
    const std::string &text = cur().text;
    if (text == "true" || text == "false") {
      auto e = make(ExprKind::BoolLit);
      e->bool_value = text == "true";
      ++pos_;
      return e;
    }
    if (text == "nullptr" || text == "NULL") {
      ++pos_;
      return make(ExprKind::Null);
    }
    if (text == "this") {
      ++pos_;
      return make(ExprKind::This);
    }
    if (text == "thisType" && cur().ghost) {
      ++pos_;
      return make(ExprKind::ThisType);
    }
    if (text == "result" && cur().ghost) {
      ++pos_;
      return make(ExprKind::Result);
    }
    if (text == "_") {
      ++pos_;
      return make(ExprKind::Wildcard);
    }
    if (text == "typeid") {
      ++pos_;
      auto e = make(ExprKind::TypeId);
      expect("(");
      // an undeclared class here is left to name resolution
      if (cur().kind == TokenKind::Ident && look(1).kind == TokenKind::Punct && look(1).text == ")" &&
          cur().text != "int" && cur().text != "bool")
        class_names_.insert(cur().text);
      e->type = parse_type();
      expect(")");
      return e;
    }
    std::string name = expect_ident();
    if (accept("::")) {
      std::string member = expect_ident();
      if (!is("(")) error("qualified names are only supported in calls");
      auto c = make(ExprKind::MemberCall);
      c->qualifier = std::move(name);
      c->name = std::move(member);
      c->arrow = true;
      c->args.push_back(nullptr);
      for (auto &a : parse_call_args()) c->args.push_back(std::move(a));
      return c;
    }
    if (is("(")) {
      auto c = make(ExprKind::Call);
      c->name = std::move(name);
      c->args = parse_call_args();
      return c;
    }
    auto e = make(ExprKind::Name);
    e->name = std::move(name);
    return e;
  }

  // ---- assertions ----------------------------------------------------------

  AssertionPtr parse_assertion() {
    auto lhs = parse_assertion_atom();
    if (is("&*&")) {
      auto s = std::make_unique<Assertion>();
      s->kind = AssertKind::Sep;
      s->loc = cur().loc;
      ++pos_;
      s->left = std::move(lhs);
      s->right = parse_assertion();
      return s;
    }
    return lhs;
  }

  AssertionPtr parse_assertion_atom() {
    SourceLoc here = cur().loc;
    if (accept("[")) {
      auto coef = parse_expr();
      expect("]");
      auto a = parse_assertion_atom();
      if (a->kind != AssertKind::Chunk && a->kind != AssertKind::Instance &&
          a->kind != AssertKind::PointsTo)
        fail(Category::SyntaxError, here, "a coefficient must prefix a chunk or points-to");
      if (a->coef) fail(Category::SyntaxError, here, "duplicate coefficient");
      if (is_pattern(*coef) == false) reject_patterns(*coef);
      a->coef = std::move(coef);
      a->loc = here;
      return a;
    }
    std::size_t save = pos_;
    ExprPtr e;
    try {
      e = parse_binary(0);
    } catch (const DiagnosticError &) {
      if (!(toks_[save].kind == TokenKind::Punct && toks_[save].text == "(")) throw;
      pos_ = save;
      expect("(");
      auto inner = parse_assertion();
      expect(")");
      return inner;
    }
    if (is("|->")) {
      ++pos_;
      auto a = std::make_unique<Assertion>();
      a->kind = AssertKind::PointsTo;
      a->loc = here;
      reject_patterns(*e);
      a->expr = std::move(e);
      a->rhs = parse_binary(0);
      check_argument(*a->rhs);
      return a;
    }
    if (is("?")) {
      ++pos_;
      reject_patterns(*e);
      auto a = std::make_unique<Assertion>();
      a->kind = AssertKind::Cond;
      a->loc = here;
      a->expr = std::move(e);
      a->left = parse_assertion();
      expect(":");
      a->right = parse_assertion();
      return a;
    }
    if (e->kind == ExprKind::Call || e->kind == ExprKind::MemberCall) {
      auto a = call_assertion(std::move(e), here);
      if (is("(")) {
        // t->p(index)(args) / p(index)(args)
        if (a->args.size() != 1)
          fail(Category::SyntaxError, a->loc, "instance predicate index must be a single expression");
        a->index = std::move(a->args[0]);
        reject_patterns(*a->index);
        a->args = parse_call_args();
        if (a->kind == AssertKind::Chunk && a->name.find('#') != std::string::npos)
          fail(Category::SyntaxError, a->loc, "unexpected index on explicit family chunk");
      }
      for (const auto &arg : a->args) check_argument(*arg);
      return a;
    }
    return pure_assertion(std::move(e));
  }

  static AssertionPtr call_assertion(ExprPtr e, SourceLoc here) {
    auto a = std::make_unique<Assertion>();
    a->loc = here;
    a->name = e->name;
    if (e->kind == ExprKind::Call) {
      a->kind = AssertKind::Chunk;
      a->args = std::move(e->args);
    } else {
      if (!e->qualifier.empty())
        fail(Category::SyntaxError, e->loc, "qualified instance predicate assertions are not supported");
      a->kind = AssertKind::Instance;
      a->target = std::move(e->args[0]);
      if (!a->target) fail(Category::SyntaxError, e->loc, "missing instance predicate target");
      reject_patterns(*a->target);
      for (std::size_t i = 1; i < e->args.size(); ++i) a->args.push_back(std::move(e->args[i]));
    }
    return a;
  }

  // A top-level conditional expression in assertion position is read as a
  // conditional assertion, with calls in its arms read as chunks; this keeps
  // printing and reparsing stable.
  static AssertionPtr pure_assertion(ExprPtr e) {
    if (e->kind == ExprKind::Call || e->kind == ExprKind::MemberCall) {
      SourceLoc here = e->loc;
      auto a = call_assertion(std::move(e), here);
      for (const auto &arg : a->args) check_argument(*arg);
      return a;
    }
    auto a = std::make_unique<Assertion>();
    a->loc = e->loc;
    if (e->kind == ExprKind::Ternary) {
      a->kind = AssertKind::Cond;
      reject_patterns(*e->args[0]);
      a->expr = std::move(e->args[0]);
      a->left = pure_assertion(std::move(e->args[1]));
      a->right = pure_assertion(std::move(e->args[2]));
      return a;
    }
    reject_patterns(*e);
    a->kind = AssertKind::Pure;
    a->expr = std::move(e);
    return a;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<std::string> class_names_;
  std::string current_class_;
};

}  // namespace

ParseResult parse_program(std::string_view text, std::string path) {
  ParseResult r;
  try {
    Parser p(tokenize(text));
    r.program = p.parse_program(path);
  } catch (DiagnosticError &e) {
    e.diagnostic().file = path;
    r.diagnostics.push_back(e.diagnostic());
  }
  return r;
}

AssertionPtr parse_assertion(std::string_view text) {
  Parser p(tokenize(text, true));
  return p.parse_assertion_only();
}

ExprPtr parse_expression(std::string_view text) {
  Parser p(tokenize(text, true));
  return p.parse_expression_only();
}

ExprPtr clone(const Expr &e) {
  auto c = std::make_unique<Expr>();
  c->kind = e.kind;
  c->loc = e.loc;
  c->name = e.name;
  c->qualifier = e.qualifier;
  c->arrow = e.arrow;
  c->int_value = e.int_value;
  c->bool_value = e.bool_value;
  c->type = e.type;
  for (const auto &a : e.args) c->args.push_back(a ? clone(*a) : nullptr);
  return c;
}

AssertionPtr clone(const Assertion &a) {
  auto c = std::make_unique<Assertion>();
  c->kind = a.kind;
  c->loc = a.loc;
  c->name = a.name;
  c->peek = a.peek;
  if (a.coef) c->coef = clone(*a.coef);
  if (a.target) c->target = clone(*a.target);
  if (a.index) c->index = clone(*a.index);
  for (const auto &x : a.args) c->args.push_back(clone(*x));
  if (a.expr) c->expr = clone(*a.expr);
  if (a.rhs) c->rhs = clone(*a.rhs);
  if (a.left) c->left = clone(*a.left);
  if (a.right) c->right = clone(*a.right);
  return c;
}

}  // namespace mcv
