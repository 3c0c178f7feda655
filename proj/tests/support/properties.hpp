#pragma once

#include <cstdint>
#include <string>

namespace mcv::props {

struct Outcome {
  int cases = 0;
  int failures = 0;
  int interesting = 0;  // cases where the property was non-vacuous
  std::string first_failure;

  bool ok() const { return failures == 0; }
  std::string summary() const;
};

// Entailment soundness against a finite model over {-2..2}: whenever the
// solver claims `facts |= goal` (or `facts` unsat), no assignment may
// satisfy the facts and falsify the goal.
Outcome entailment_soundness(int cases, std::uint64_t seed);

// Producing then consuming the same assertion leaves the heap as it was.
Outcome produce_consume_roundtrip(int cases, std::uint64_t seed);

// ClassTable::upcast_path agrees with brute-force enumeration of base paths
// on random inheritance DAGs.
Outcome upcast_agreement(int cases, std::uint64_t seed);

// Under every model of the path condition, chunks of a single-resource
// family at the same address never sum above 1.
Outcome coefficient_accounting(int cases, std::uint64_t seed);

// Parse, print, reparse gives the same tree.
Outcome print_roundtrip(int cases, std::uint64_t seed);

}  // namespace mcv::props
