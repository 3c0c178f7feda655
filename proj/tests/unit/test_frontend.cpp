#include <filesystem>

#include "helpers.hpp"
#include "mcv/lexer.hpp"
#include "mcv/printer.hpp"

using namespace mcv;

TEST_CASE("empty class") {
  ParseResult pr = parse_program("class A {};", "a.mcpp");
  REQUIRE(pr.ok());
  REQUIRE(pr.program->decls.size() == 1);
  const auto &c = std::get<ClassDecl>(pr.program->decls[0]);
  CHECK(c.name == "A");
  CHECK(c.fields.empty());
}

TEST_CASE("virtual member with trivial contract") {
  ParseResult pr =
      parse_program("class A { virtual void foo() //@ requires true;\n //@ ensures true;\n {} };", "a.mcpp");
  REQUIRE(pr.ok());
  const auto &c = std::get<ClassDecl>(pr.program->decls[0]);
  REQUIRE(c.functions.size() == 1);
  const FunctionDecl &f = c.functions[0];
  CHECK(f.is_virtual);
  REQUIRE(f.contract);
  CHECK(to_source(*f.contract->pre) == "true");
  CHECK(to_source(*f.contract->post) == "true");
}

TEST_CASE("shape program has an instance predicate and an override") {
  ParseResult pr = parse_program(testing::read_file(testing::corpus("shape_square.mcpp")), "shape.mcpp");
  REQUIRE(pr.ok());
  const ClassDecl *shape = nullptr, *square = nullptr;
  for (const Decl &d : pr.program->decls)
    if (auto *c = std::get_if<ClassDecl>(&d)) (c->name == "Shape" ? shape : square) = c;
  REQUIRE(shape);
  REQUIRE(square);
  REQUIRE(shape->predicates.size() == 1);
  CHECK(shape->predicates[0].name == "valid");
  REQUIRE(square->predicates.size() == 1);
  CHECK(square->predicates[0].name == "valid");
  CHECK(square->bases.size() == 1);
}

TEST_CASE("chunk-name field assertion") {
  AssertionPtr a = parse_assertion("B_m(d, ?m)");
  CHECK(a->kind == AssertKind::Chunk);
  CHECK(a->name == "B_m");
  REQUIRE(a->args.size() == 2);
  CHECK(a->args[0]->kind == ExprKind::Name);
  CHECK(a->args[1]->kind == ExprKind::Pattern);
  CHECK(a->args[1]->name == "m");
}

TEST_CASE("points-to with wildcard and explicit cast") {
  AssertionPtr a = parse_assertion("x |-> _");
  CHECK(a->kind == AssertKind::PointsTo);
  CHECK(a->rhs->kind == ExprKind::Wildcard);

  AssertionPtr b = parse_assertion("((B *) d)->m |-> ?m");
  REQUIRE(b->kind == AssertKind::PointsTo);
  CHECK(b->expr->kind == ExprKind::Member);
  CHECK(b->expr->args[0]->kind == ExprKind::Cast);
  CHECK(b->expr->args[0]->type.cls == "B");
}

TEST_CASE("vtype chunk and indexed instance predicate") {
  AssertionPtr a = parse_assertion("S_vtype(s, ?t) &*& s->p(t)(a)");
  REQUIRE(a->kind == AssertKind::Sep);
  CHECK(a->left->kind == AssertKind::Chunk);
  CHECK(a->left->name == "S_vtype");
  const Assertion &r = *a->right;
  CHECK(r.kind == AssertKind::Instance);
  CHECK(r.name == "p");
  REQUIRE(r.index);
  CHECK(r.index->name == "t");
  REQUIRE(r.args.size() == 1);
}

TEST_CASE("coefficients") {
  AssertionPtr a = parse_assertion("[1/2]S_vtype(s, ?t)");
  REQUIRE(a->coef);
  CHECK(to_source(*a->coef) == "(1 / 2)");
  AssertionPtr b = parse_assertion("[_]S_vtype(s, ?t)");
  CHECK(b->coef->kind == ExprKind::Wildcard);
  CHECK_THROWS_AS(parse_assertion("[1/2](x > 0)"), DiagnosticError);
}

TEST_CASE("patterns only in consumed positions") {
  CHECK_THROWS_AS(parse_assertion("?x > 0"), DiagnosticError);
  CHECK_THROWS_AS(parse_assertion("?x |-> 1"), DiagnosticError);
  CHECK_NOTHROW(parse_assertion("x |-> ?v &*& v > 0"));
}

TEST_CASE("ghost annotations are bracketed") {
  auto toks = tokenize("int x; //@ requires true;\n/*@ open p(); @*/ int y;");
  int begins = 0, ends = 0;
  for (const Token &t : toks) {
    begins += t.kind == TokenKind::GhostBegin;
    ends += t.kind == TokenKind::GhostEnd;
  }
  CHECK(begins == 2);
  CHECK(ends == 2);
}

TEST_CASE("plain comments are dropped") {
  auto toks = tokenize("int /* hidden */ x; // also hidden\n");
  for (const Token &t : toks) CHECK(t.text != "hidden");
}

TEST_CASE("syntax errors carry a location") {
  ParseResult pr = parse_program("class A {\n  int x\n};", "bad.mcpp");
  REQUIRE_FALSE(pr.ok());
  REQUIRE(pr.diagnostics.size() >= 1);
  CHECK(pr.diagnostics[0].category == Category::SyntaxError);
  CHECK(pr.diagnostics[0].loc.line >= 2);
  CHECK(pr.diagnostics[0].loc.col > 0);
}

TEST_CASE("unsupported constructs are syntax errors") {
  CHECK_FALSE(parse_program("template <class T> class A {};", "t.mcpp").ok());
  CHECK_FALSE(parse_program("void f(int &&x) {}", "t.mcpp").ok());
}

TEST_CASE("declaration order is preserved") {
  ParseResult pr = parse_program("class A { int z; int a; int m; };", "t.mcpp");
  REQUIRE(pr.ok());
  const auto &c = std::get<ClassDecl>(pr.program->decls[0]);
  REQUIRE(c.fields.size() == 3);
  CHECK(c.fields[0].name == "z");
  CHECK(c.fields[1].name == "a");
  CHECK(c.fields[2].name == "m");
}

TEST_CASE("every annotation has a host and a location") {
  ParseResult pr = parse_program(testing::read_file(testing::corpus("instance_override.mcpp")), "l4.mcpp");
  REQUIRE(pr.ok());
  auto anns = collect_annotations(*pr.program);
  CHECK(anns.size() > 10);
  for (const GhostAnnotation &g : anns) {
    CHECK_FALSE(g.host.empty());
    CHECK(g.loc.line > 0);
  }
}

TEST_CASE("corpus programs survive printing and reparsing") {
  int n = 0;
  for (const auto &entry : std::filesystem::directory_iterator(MCV_CORPUS_DIR)) {
    if (entry.path().extension() != ".mcpp") continue;
    ParseResult pr = parse_program(testing::read_file(entry.path().string()), entry.path().string());
    if (!pr.ok()) continue;
    ++n;
    std::string printed = pretty_print(*pr.program);
    ParseResult again = parse_program(printed, "printed.mcpp");
    INFO(entry.path().string());
    REQUIRE(again.ok());
    CHECK(structural_dump(*again.program) == structural_dump(*pr.program));
    CHECK(pretty_print(*again.program) == printed);
  }
  CHECK(n >= 20);
}

TEST_CASE("parsing is deterministic") {
  std::string src = testing::read_file(testing::corpus("ctor_vcall.mcpp"));
  ParseResult a = parse_program(src, "x.mcpp"), b = parse_program(src, "x.mcpp");
  REQUIRE(a.ok());
  CHECK(structural_dump(*a.program) == structural_dump(*b.program));
}
