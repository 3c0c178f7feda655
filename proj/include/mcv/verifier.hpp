#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcv/class_table.hpp"
#include "mcv/diagnostics.hpp"
#include "mcv/symstate.hpp"

namespace mcv {

struct Obligation {
  enum class Kind { Function, Constructor, Destructor, Subtyping, OverrideCompleteness };
  Kind kind = Kind::Function;
  std::string subject;
  std::string file;
  SourceLoc loc;
  std::optional<Diagnostic> failure;
  std::vector<Diagnostic> warnings;
  Trace trace;

  bool verified() const { return !failure.has_value(); }
  // "Verified" or the failure category name.
  std::string verdict() const;
};

std::string_view obligation_kind_name(Obligation::Kind k);

struct VerifyOptions {
  bool stop_on_first_error = false;
  SolverLimits limits;
};

Obligation verify_function(const ClassTable &table, const std::string &cls, const FunctionDecl &fn,
                           const VerifyOptions &options = {});
Obligation verify_constructor(const ClassTable &table, const std::string &cls, const FunctionDecl &ctor,
                              const VerifyOptions &options = {});
Obligation verify_destructor(const ClassTable &table, const std::string &cls, const FunctionDecl &dtor,
                             const VerifyOptions &options = {});
// `base_cls::base_fn` is overridden by `derived_cls::derived_fn`; `path`
// converts a derived address to the base subobject.
Obligation check_behavioral_subtyping(const ClassTable &table, const std::string &base_cls,
                                      const FunctionDecl &base_fn, const std::string &derived_cls,
                                      const FunctionDecl &derived_fn, const UpcastPath &path,
                                      const VerifyOptions &options = {});

// All obligations of the program, sorted by location then subject.
std::vector<Obligation> verify_program(const ClassTable &table, const VerifyOptions &options = {});

}  // namespace mcv
