#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mcv {

struct SourceLoc {
  int line = 0;
  int col = 0;

  friend bool operator==(const SourceLoc &, const SourceLoc &) = default;
  friend auto operator<=>(const SourceLoc &, const SourceLoc &) = default;
};

// A syntactic type. Pointer depth and reference are layered over a base;
// `std::type_info` is a ghost-only base.
struct TypeRef {
  enum class Base { Void, Int, Bool, Class, TypeInfo, Real };

  Base base = Base::Int;
  std::string cls;
  int pointer_depth = 0;
  bool reference = false;

  static TypeRef make(Base b) {
    TypeRef t;
    t.base = b;
    return t;
  }
  static TypeRef class_type(std::string name) {
    TypeRef t;
    t.base = Base::Class;
    t.cls = std::move(name);
    return t;
  }
  TypeRef pointer_to() const {
    TypeRef t = *this;
    t.reference = false;
    ++t.pointer_depth;
    return t;
  }
  TypeRef pointee() const {
    TypeRef t = *this;
    if (t.pointer_depth > 0) --t.pointer_depth;
    return t;
  }
  TypeRef without_ref() const {
    TypeRef t = *this;
    t.reference = false;
    return t;
  }

  bool is_void() const { return base == Base::Void && pointer_depth == 0; }
  bool is_pointer() const { return pointer_depth > 0; }
  bool is_class_object() const { return base == Base::Class && pointer_depth == 0; }
  bool is_class_pointer() const { return base == Base::Class && pointer_depth == 1; }
  bool is_primitive() const { return pointer_depth > 0 || base != Base::Class; }
  bool is_int() const { return base == Base::Int && pointer_depth == 0; }
  bool is_bool() const { return base == Base::Bool && pointer_depth == 0; }

  std::string str() const;

  friend bool operator==(const TypeRef &, const TypeRef &) = default;
};

struct Expr;
struct Stmt;
struct Assertion;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;
using AssertionPtr = std::unique_ptr<Assertion>;

enum class ExprKind {
  IntLit,
  BoolLit,
  Null,
  Name,       // identifier; also implicit-this field access
  This,
  ThisType,   // ghost `thisType`
  Result,     // ghost `result` in postconditions
  Member,     // args[0].name or args[0]->name (arrow)
  Deref,      // *args[0]
  AddrOf,     // &args[0]
  Unary,      // name is the operator: "-" or "!"
  Binary,     // name is the operator
  Ternary,    // args[0] ? args[1] : args[2]
  Cast,       // (type) args[0]
  Call,       // name(args) free function
  MemberCall, // args[0]->qualifier::name(args[1..]); args[0] null for implicit this
  New,        // new type(args)
  TypeId,     // &typeid(type) (ghost)
  Pattern,    // ?name
  Wildcard,   // _
  DtorCall,   // args[0].~name()
};

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  SourceLoc loc;
  std::string name;
  std::string qualifier;
  bool arrow = false;
  long long int_value = 0;
  bool bool_value = false;
  TypeRef type;
  std::vector<ExprPtr> args;
};

enum class AssertKind {
  Pure,      // expr
  Chunk,     // [coef] name(args); with index set: implicit-target instance form
  Instance,  // [coef] target->name(args) or target->name(index)(args)
  PointsTo,  // [coef] expr |-> rhs
  Sep,       // left &*& right
  Cond,      // expr ? left : right
};

struct Assertion {
  AssertKind kind = AssertKind::Pure;
  SourceLoc loc;
  ExprPtr coef;
  std::string name;
  ExprPtr target;
  ExprPtr index;
  std::vector<ExprPtr> args;
  ExprPtr expr;
  ExprPtr rhs;
  AssertionPtr left;
  AssertionPtr right;
  // Set only by desugaring: the chunk is read (some fraction) and left in place.
  bool peek = false;
};

enum class StmtKind {
  Block,
  VarDecl,     // type name [= init | (ctor_args)]
  Assign,      // lhs = rhs
  ExprStmt,    // expr;
  Return,      // return [expr];
  If,
  While,       // while (cond) //@ invariant A; body
  Delete,      // delete expr;
  Open,        // ghost
  Close,       // ghost
  Leak,        // ghost
  GhostAssert, // ghost
};

struct Stmt {
  StmtKind kind = StmtKind::Block;
  SourceLoc loc;
  std::string name;
  TypeRef type;
  ExprPtr expr;  // init / rhs / condition / returned value / deleted pointer
  ExprPtr lhs;
  bool ctor_syntax = false;  // `T x(args);` or `T x;` for class types
  std::vector<ExprPtr> ctor_args;
  std::vector<StmtPtr> body;  // block contents
  StmtPtr then_branch;
  StmtPtr else_branch;
  AssertionPtr assertion;
};

struct Param {
  TypeRef type;
  std::string name;
  SourceLoc loc;
};

struct Contract {
  AssertionPtr pre;
  AssertionPtr post;
  SourceLoc loc;
};

struct Initializer {
  std::string name;
  std::vector<ExprPtr> args;
  SourceLoc loc;
};

struct FunctionDecl {
  enum class Kind { Free, Member, Constructor, Destructor };

  Kind kind = Kind::Free;
  std::string name;
  TypeRef return_type = TypeRef::make(TypeRef::Base::Void);
  std::vector<Param> params;
  bool is_virtual = false;
  bool is_override = false;
  bool is_pure = false;
  bool is_const = false;
  std::vector<Initializer> inits;
  std::optional<Contract> contract;
  StmtPtr body;
  SourceLoc loc;
};

struct PredicateDecl {
  std::string name;
  std::vector<Param> params;
  // Number of parameters before `;` (precise-predicate input parameters).
  // Equal to params.size() when no `;` was written. Recorded, not interpreted.
  std::size_t input_count = 0;
  AssertionPtr body;  // null: abstract / opaque
  SourceLoc loc;
};

struct FieldDecl {
  TypeRef type;
  std::string name;
  ExprPtr init;
  SourceLoc loc;
};

struct BaseSpec {
  std::string name;
  SourceLoc loc;
};

struct ClassDecl {
  std::string name;
  bool is_struct = false;
  std::vector<BaseSpec> bases;
  std::vector<FieldDecl> fields;
  std::vector<FunctionDecl> functions;
  std::vector<PredicateDecl> predicates;
  SourceLoc loc;
};

using Decl = std::variant<ClassDecl, FunctionDecl, PredicateDecl>;

struct Program {
  std::string path;
  std::vector<Decl> decls;
};

// Flattened view of one ghost annotation and the declaration or statement it
// is attached to.
struct GhostAnnotation {
  enum class Kind {
    ContractRequires,
    ContractEnsures,
    PredicateDef,
    InstancePredicateDef,
    Open,
    Close,
    Leak,
    Assert,
    Invariant,
  };
  Kind kind;
  std::string host;
  SourceLoc loc;
  const Assertion *payload = nullptr;  // null for abstract predicates
};

std::vector<GhostAnnotation> collect_annotations(const Program &program);

}  // namespace mcv
