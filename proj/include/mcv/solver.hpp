#pragma once

#include <vector>

#include "mcv/term.hpp"

namespace mcv {

enum class SatResult { Unsat, Open };

struct SolverLimits {
  int max_leaves = 512;
  std::size_t max_fm_constraints = 4000;
};

// Refutation procedure for conjunctions of quantifier-free formulas over
// uninterpreted address constructors and linear arithmetic. `Unsat` is only
// returned when the formulas are unsatisfiable; `Open` means no refutation was
// found (satisfiable, or beyond the procedure).
//
// Theory: congruence closure; field_ptr/field_addr injectivity in the base
// argument; distinct offsets (fields) of the same class at the same non-null base
// give distinct addresses; field_ptr(a, o) == 0 iff a == 0 (likewise field_addr);
// type_info constants are pairwise distinct and non-null; linear rational
// arithmetic with integer tightening.
SatResult check_sat(TermStore &store, const std::vector<TermId> &facts, const SolverLimits &limits = {});

// True iff the facts entail `goal`.
bool entails(TermStore &store, const std::vector<TermId> &facts, TermId goal,
             const SolverLimits &limits = {});

}  // namespace mcv
