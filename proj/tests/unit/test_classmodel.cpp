#include <random>

#include "helpers.hpp"
#include "mcv/printer.hpp"

using namespace mcv;

namespace {

const char *kDiamond = R"(
class A { public: int m; };
class B : public A {};
class C : public A {};
class D : public B, public C {};
)";

std::vector<Diagnostic> build_errors(const std::string &src) {
  ParseResult pr = parse_program(src, "t.mcpp");
  REQUIRE(pr.ok());
  return ClassTable::build(std::move(*pr.program)).diagnostics;
}

}  // namespace

TEST_CASE("diamond bases and upcasts") {
  auto t = testing::table_of(kDiamond);
  const ClassInfo &d = t->get("D");
  REQUIRE(d.bases.size() == 2);
  CHECK(d.bases[0] == "B");
  CHECK(d.bases[1] == "C");
  CHECK(t->upcast_path("D", "A").status == UpcastResult::Status::Ambiguous);

  UpcastResult ba = t->upcast_path("B", "A");
  REQUIRE(ba.status == UpcastResult::Status::Ok);
  REQUIRE(ba.path.size() == 1);
  CHECK(ba.path[0].name() == "B_A_offset");

  UpcastResult db = t->upcast_path("D", "B");
  REQUIRE(db.status == UpcastResult::Status::Ok);
  UpcastPath via = db.path;
  for (const OffsetSymbol &o : t->upcast_path("B", "A").path) via.push_back(o);
  REQUIRE(via.size() == 2);
  CHECK(via[0].name() == "D_B_offset");
  CHECK(via[1].name() == "B_A_offset");

  CHECK(t->upcast_path("A", "D").status == UpcastResult::Status::NotABase);
  CHECK(t->upcast_path("B", "C").status == UpcastResult::Status::NotABase);
}

TEST_CASE("polymorphism is inherited") {
  auto t = testing::table_of(R"(
class A { public: virtual int f() //@ requires true;
//@ ensures true;
{ return 0; } };
class B : public A {};
class P {};
class Q : public P {};
)");
  CHECK(t->is_polymorphic("A"));
  CHECK(t->is_polymorphic("B"));
  CHECK_FALSE(t->is_polymorphic("P"));
  CHECK_FALSE(t->is_polymorphic("Q"));
}

TEST_CASE("implicit default constructor of a trivial class") {
  auto t = testing::table_of("class S { public: int m = 3; };");
  const ClassInfo &s = t->get("S");
  CHECK(s.implicit_ctor);
  CHECK(s.implicit_dtor);
  REQUIRE(s.ctors.size() == 1);
  REQUIRE(s.ctors[0]->contract);
  CHECK(to_source(*s.ctors[0]->contract->post) == "S_m(this, 3)");
  REQUIRE(s.dtor);
  CHECK(to_source(*s.dtor->contract->pre) == "S_m(this, _)");
}

TEST_CASE("no implicit members for classes with bases or virtuals") {
  auto t = testing::table_of(R"(
class A {};
class B : public A {};
class V { public: virtual void f() //@ requires true;
//@ ensures true;
{} };
)");
  CHECK(t->get("A").implicit_ctor);
  CHECK(t->get("B").ctors.empty());
  CHECK(t->get("V").ctors.empty());
}

TEST_CASE("resolution errors") {
  auto unknown = build_errors("class B : public A {};");
  REQUIRE_FALSE(unknown.empty());
  CHECK(unknown[0].category == Category::UnknownName);

  auto cyclic = build_errors("class A : public B {}; class B : public A {};");
  REQUIRE_FALSE(cyclic.empty());
  CHECK(cyclic[0].category == Category::CyclicInheritance);

  auto dup = build_errors("class A { int x; int x; };");
  REQUIRE_FALSE(dup.empty());
  CHECK(dup[0].category == Category::DuplicateMember);

  auto dup_class = build_errors("class A {}; class A {};");
  REQUIRE_FALSE(dup_class.empty());
  CHECK(dup_class[0].category == Category::DuplicateMember);
}

TEST_CASE("final overrider") {
  auto t = testing::table_of(testing::read_file(testing::corpus("shape_square.mcpp")));
  auto [cls, fn] = t->final_overrider("Square", "area", {});
  CHECK(cls == "Square");
  REQUIRE(fn);
  auto [base_cls, base_fn] = t->final_overrider("Shape", "area", {});
  CHECK(base_cls == "Shape");

  auto u = testing::table_of(R"(
class A { public: virtual int f() //@ requires true;
//@ ensures true;
{ return 0; } };
class B : public A {};
class X { public: virtual int g() //@ requires true;
//@ ensures true;
{ return 0; } };
class Y { public: virtual int g() //@ requires true;
//@ ensures true;
{ return 1; } };
class Z : public X, public Y { public: int g() override //@ requires true;
//@ ensures true;
{ return 2; } };
)");
  CHECK(u->final_overrider("B", "f", {}).first == "A");
  CHECK(u->final_overrider("Z", "g", {}).first == "Z");
  CHECK_THROWS_AS(u->final_overrider("B", "nope", {}), DiagnosticError);
}

TEST_CASE("override completeness") {
  auto shape = testing::table_of(testing::read_file(testing::corpus("shape_square.mcpp")));
  CHECK(shape->check_override_completeness().empty());

  auto missing = testing::table_of(R"(
class A { public: virtual void foo() //@ requires true;
//@ ensures true;
{} };
class B : public A {};
)");
  auto diags = missing.get()->check_override_completeness();
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].category == Category::OverrideIncomplete);

  auto plain = testing::table_of(R"(
class A { public: void foo() //@ requires true;
//@ ensures true;
{} };
class B : public A {};
)");
  CHECK(plain->check_override_completeness().empty());
}

TEST_CASE("vtype predicate definitions") {
  auto t = testing::table_of(R"(
class S { public: virtual void f() //@ requires true;
//@ ensures true;
{} };
class D : public S { public: void f() override //@ requires true;
//@ ensures true;
{} };
class A { public: virtual void a() //@ requires true;
//@ ensures true;
{} };
class C : public S, public A { public:
  void f() override //@ requires true;
  //@ ensures true;
  {}
  void a() override //@ requires true;
  //@ ensures true;
  {}
};
class N {};
)");
  CHECK(t->vtype_definition("S") == nullptr);

  const PredicateDecl *d = t->vtype_definition("D");
  REQUIRE(d);
  REQUIRE(d->body);
  std::string body = to_source(*d->body);
  CHECK(body == "S_vtype(((S*)s_addr), s_info)");

  const PredicateDecl *c = t->vtype_definition("C");
  REQUIRE(c);
  std::string cb = to_source(*c->body);
  CHECK(c->body->kind == AssertKind::Sep);
  CHECK(cb.find("S_vtype") != std::string::npos);
  CHECK(cb.find("A_vtype") != std::string::npos);
  // one shared info parameter, each base once
  CHECK(c->params.size() == 2);
  CHECK(cb.find("S_vtype") == cb.rfind("S_vtype"));
  CHECK(cb.find("A_vtype") == cb.rfind("A_vtype"));

  CHECK_THROWS_AS(t->vtype_definition("N"), DiagnosticError);
}

TEST_CASE("overload resolution") {
  auto t = testing::table_of(R"(
class A {};
class B : public A {};
class P {
public:
  P(int x) //@ requires true;
  //@ ensures true;
  {}
  P(bool b) //@ requires true;
  //@ ensures true;
  {}
  void take(A *a) //@ requires true;
  //@ ensures true;
  {}
};
)");
  const ClassInfo &p = t->get("P");
  TypeRef i = TypeRef::make(TypeRef::Base::Int), b = TypeRef::make(TypeRef::Base::Bool);
  const FunctionDecl *by_int = t->resolve_overload(p.ctors, {ArgType{i}}, {}, "P");
  REQUIRE(by_int);
  CHECK(by_int->params[0].type == i);
  const FunctionDecl *by_bool = t->resolve_overload(p.ctors, {ArgType{b}}, {}, "P");
  CHECK(by_bool->params[0].type == b);
  CHECK_THROWS_AS(t->resolve_overload(p.ctors, {}, {}, "P"), DiagnosticError);

  MethodSet take = t->lookup_methods("P", "take", {});
  TypeRef bp = TypeRef::class_type("B").pointer_to();
  CHECK(t->resolve_overload(take.candidates, {ArgType{bp}}, {}, "take") != nullptr);
  CHECK(t->convertible(ArgType{bp}, TypeRef::class_type("A").pointer_to()));
  CHECK_FALSE(t->convertible(ArgType{TypeRef::class_type("A").pointer_to()}, bp));
}

TEST_CASE("polymorphism is a least fixed point over random hierarchies") {
  // p(C) = declares-virtual(C) or some base is polymorphic
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937 rng(static_cast<unsigned>(seed));
    int n = 2 + static_cast<int>(rng() % 6);
    std::vector<std::vector<int>> bases(static_cast<std::size_t>(n));
    std::vector<bool> declares(static_cast<std::size_t>(n));
    std::string src;
    for (int i = 0; i < n; ++i) {
      declares[static_cast<std::size_t>(i)] = rng() % 4 == 0;
      src += "class K" + std::to_string(i);
      for (int j = 0; j < i; ++j)
        if (rng() % 3 == 0) {
          src += std::string(bases[static_cast<std::size_t>(i)].empty() ? " : " : ", ") + "public K" + std::to_string(j);
          bases[static_cast<std::size_t>(i)].push_back(j);
        }
      src += " { public: ";
      if (declares[static_cast<std::size_t>(i)]) src += "virtual void v" + std::to_string(i) + "() //@ requires true;\n//@ ensures true;\n{}";
      src += " };\n";
    }
    auto t = testing::table_of(src);
    std::vector<bool> poly(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      bool p = declares[static_cast<std::size_t>(i)];
      for (int b : bases[static_cast<std::size_t>(i)]) p = p || poly[static_cast<std::size_t>(b)];
      poly[static_cast<std::size_t>(i)] = p;
      CHECK(t->is_polymorphic("K" + std::to_string(i)) == p);
    }
  }
}
