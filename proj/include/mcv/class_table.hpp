#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mcv/ast.hpp"
#include "mcv/diagnostics.hpp"

namespace mcv {

// Offset of the `base` subobject inside a `derived` object. Offsets are
// uninterpreted: only non-negativity and per-class distinctness are known.
struct OffsetSymbol {
  std::string derived;
  std::string base;

  std::string name() const { return derived + "_" + base + "_offset"; }
  friend bool operator==(const OffsetSymbol &, const OffsetSymbol &) = default;
  friend auto operator<=>(const OffsetSymbol &, const OffsetSymbol &) = default;
};

using UpcastPath = std::vector<OffsetSymbol>;

struct UpcastResult {
  enum class Status { Ok, Ambiguous, NotABase };
  Status status = Status::NotABase;
  UpcastPath path;
};

struct ClassInfo {
  std::string name;
  const ClassDecl *decl = nullptr;
  std::vector<std::string> bases;  // derivation order
  std::vector<const FieldDecl *> fields;
  std::vector<const FunctionDecl *> ctors;
  const FunctionDecl *dtor = nullptr;
  std::vector<const FunctionDecl *> methods;
  std::vector<const PredicateDecl *> predicates;
  // Root class of the family each locally declared instance predicate
  // belongs to.
  std::map<std::string, std::string> predicate_root;
  bool polymorphic = false;
  bool implicit_ctor = false;
  bool implicit_dtor = false;
};

struct FieldRef {
  std::string cls;  // declaring class
  const FieldDecl *decl = nullptr;
};

struct InstancePredicateRef {
  std::string declaring;
  std::string root;
  const PredicateDecl *decl = nullptr;
};

struct MethodSet {
  std::string cls;  // declaring class of the overload set
  std::vector<const FunctionDecl *> candidates;
};

// Static description of an argument for overload resolution.
struct ArgType {
  TypeRef type;
  bool lvalue = false;
  bool null_literal = false;
};

class ClassTable;

struct BuildResult {
  std::shared_ptr<const ClassTable> table;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return table != nullptr; }
};

// Resolves all names in a parsed program. Owns the program; immutable after
// construction.
class ClassTable {
 public:
  static BuildResult build(Program program);

  const Program &program() const { return program_; }
  const std::string &path() const { return program_.path; }

  const ClassInfo *find(const std::string &name) const;
  const ClassInfo &get(const std::string &name) const;
  const std::map<std::string, ClassInfo> &classes() const { return classes_; }
  // Classes in declaration order.
  const std::vector<std::string> &class_order() const { return order_; }

  bool is_polymorphic(const std::string &cls) const { return get(cls).polymorphic; }
  bool has_bases(const std::string &cls) const { return !get(cls).bases.empty(); }
  // Reflexive.
  bool derives_from(const std::string &derived, const std::string &base) const;

  UpcastResult upcast_path(const std::string &derived, const std::string &base) const;

  std::optional<FieldRef> lookup_field(const std::string &cls, const std::string &field,
                                       SourceLoc loc) const;
  // C++ name lookup of member functions; empty candidates when not found.
  MethodSet lookup_methods(const std::string &cls, const std::string &name, SourceLoc loc) const;
  std::optional<InstancePredicateRef> lookup_instance_predicate(const std::string &cls,
                                                                const std::string &name,
                                                                SourceLoc loc) const;
  // The definition class `cls` supplies for the family (root, name), if any.
  const PredicateDecl *instance_definition(const std::string &root, const std::string &name,
                                           const std::string &cls) const;

  const PredicateDecl *find_static_predicate(const std::string &name) const;
  std::vector<const FunctionDecl *> free_functions(const std::string &name) const;
  const std::vector<const FunctionDecl *> &all_free_functions() const { return free_fns_; }

  bool is_virtual(const std::string &cls, const FunctionDecl &fn) const;

  // The most-derived declaration of `name(params)` visible from `cls`.
  // Throws DiagnosticError(UnknownName) when absent and
  // DiagnosticError(TypeError) when two unrelated final overriders exist.
  std::pair<std::string, const FunctionDecl *> final_overrider(
      const std::string &cls, const std::string &name, const std::vector<TypeRef> &params) const;

  // The virtual functions a member function of `cls` overrides: the nearest
  // matching virtual declaration in each direct base branch.
  std::vector<std::pair<std::string, const FunctionDecl *>> overridden(
      const std::string &cls, const FunctionDecl &fn) const;

  std::vector<Diagnostic> check_override_completeness() const;

  // The vtype predicate of a polymorphic class. Returns nullptr when the
  // predicate is opaque. Throws DiagnosticError(TypeError) if `cls` is not
  // polymorphic.
  const PredicateDecl *vtype_definition(const std::string &cls) const;

  const FunctionDecl *resolve_overload(const std::vector<const FunctionDecl *> &candidates,
                                       const std::vector<ArgType> &args, SourceLoc loc,
                                       const std::string &what) const;
  bool convertible(const ArgType &arg, const TypeRef &param) const;

  // "Class::name(int, B*)"
  std::string signature(const std::string &cls, const FunctionDecl &fn) const;

 private:
  ClassTable() = default;
  void resolve();
  void synthesize_special_members(ClassInfo &info);
  void build_vtype_definitions();

  Program program_;
  std::map<std::string, ClassInfo> classes_;
  std::vector<std::string> order_;
  std::map<std::string, const PredicateDecl *> static_preds_;
  std::vector<const FunctionDecl *> free_fns_;
  std::map<std::string, const PredicateDecl *> vtype_defs_;
  std::deque<FunctionDecl> synthesized_fns_;
  std::deque<PredicateDecl> synthesized_preds_;
};

bool same_params(const FunctionDecl &a, const FunctionDecl &b);

}  // namespace mcv
