#pragma once

#include <functional>
#include <map>
#include <string>

#include "mcv/ast.hpp"
#include "mcv/class_table.hpp"
#include "mcv/symstate.hpp"

namespace mcv {

// Storage denoted by an lvalue expression.
struct Place {
  enum class Kind { None, Local, Field, Cell, Object };
  Kind kind = Kind::None;
  std::string local;       // Local
  std::string cls, field;  // Field: declaring class and field name
  TermId addr = -1;        // Field: object address at the declaring class; Cell, Object: address
};

struct Value {
  TermId term = -1;  // class objects evaluate to their address
  TypeRef type;
  bool null_literal = false;
  Place place;
};

struct EvalContext {
  const ClassTable *table = nullptr;
  std::string cls;  // class whose member is being verified; empty elsewhere
  // Results of calls and `new` expressions already executed by the caller.
  const std::map<const Expr *, Value> *precomputed = nullptr;
};

// Errors are reported by throwing DiagnosticError.
Value eval_expr(SymState &st, const Expr &e, const EvalContext &ctx);
// Locates an lvalue without reading it: place and static type.
Value eval_place(SymState &st, const Expr &e, const EvalContext &ctx);
Value read_place(SymState &st, const Place &p, const TypeRef &type, SourceLoc loc);
void write_place(SymState &st, const Place &p, TermId value, SourceLoc loc);
// Upcast or downcast of an object address between classes.
TermId convert_pointer(SymState &st, TermId addr, const std::string &from, const std::string &to,
                       const ClassTable &table, SourceLoc loc);

Sort sort_of(const TypeRef &t);

using StateCont = std::function<void(SymState)>;

void produce(SymState st, const Assertion &a, const EvalContext &ctx, const StateCont &k);
void consume(SymState st, const Assertion &a, const EvalContext &ctx, const StateCont &k);

// Rewrites an instance-predicate assertion into plain chunk assertions over the
// family `Root#name(target, index, args...)`. `target` null means implicit
// `this` with index `thisType`.
AssertionPtr desugar_instance(const SymState &st, const EvalContext &ctx, const Expr *target, const Expr *index,
                              const std::string &name, const std::vector<ExprPtr> &args, const Expr *coef,
                              SourceLoc loc);

void open_close(SymState st, bool open, const Assertion &a, const EvalContext &ctx, const StateCont &k);

// Fails with `category`, attaching the conjunct text and heap snapshot.
[[noreturn]] void consume_failure(const SymState &st, Category category, SourceLoc loc, const std::string &message,
                                  const std::string &conjunct);

}  // namespace mcv
