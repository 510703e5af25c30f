// reduce.hpp -- the order-reduction pipeline: the simulator construction
// (order n to order n-1 with tests), test removal by character annotation,
// and the full diagonal decision procedure.
//
// reduce_once lowers the order by one while preserving the diagonal
// property for the tracked characters; decide_diagonal iterates this to
// order 0 and finishes on the linearized NFA.

#pragma once

#include <string>
#include <vector>

#include "base0.hpp"
#include "machine.hpp"
#include "saturate.hpp"

namespace hopda {

// Per-level pipeline statistics (part of the decision certificate).
struct LevelStats {
  int order = 0;           // order of the machine at this level
  size_t controls = 0;
  size_t rules = 0;
  size_t canpop_keys = 0;  // canpop automata materialized for this level
  double wall_ms = 0.0;
};

struct ReduceBudgets {
  uint64_t saturation = 2'000'000;  // canpop saturation state/pair budget
  uint64_t annotation = 1'000'000;  // annotated-character cap (test removal)
};

// The simulator: an order-(n-1) machine with tests that walks selected
// branches of the tree decomposition of an order-n run.  Main controls are
// quadruples <q|q_1..q_m|O|B>: simulated control q, pop obligations
// q_1..q_m (the controls the subtree must empty the stack into), owed
// single-output set O, and the responsibility set B of tracked characters
// (the rank of the control is max(|B|,1)).  Skipped branches are asserted
// with canpop tests drawn from `family`; O and B are distributed among
// children and tests canonically, so the construction is reproducible.
// Requires M normalized, test-free, of order >= 1.
Machine build_simulator(const Machine& M, CanpopFamily& family);

// Equivalent test-free machine: every stack character is annotated, per
// registered test automaton, with one state-transformer per stack level
// summarizing the automaton's run over the part of the linearization below
// the top character.  Tests become guard lookups; push/pop rewrite the
// transformer vectors.  Annotations are interned lazily; exceeding
// `annotation_cap` distinct annotated characters throws
// BudgetError("annotate").
Machine remove_tests(const Machine& M, uint64_t annotation_cap = 1'000'000);

// canpop family -> build_simulator -> remove_tests -> normal form.
// The diagonal property for the tracked characters is preserved.
Machine reduce_once(const Machine& M, const ReduceBudgets& budgets = {},
                    LevelStats* stats = nullptr);

// Restricts the tracked characters to `chars` (by name, order kept); other
// outputs become silent.  Throws InputError on unknown or duplicate names.
Machine restrict_outputs(const Machine& M,
                         const std::vector<std::string>& chars);

struct DecideResult {
  bool unbounded = false;
  std::vector<std::string> chars;   // queried characters
  std::vector<LevelStats> levels;   // strictly decreasing order, ending at 0
  Nfa nfa;                          // the order-0 linearization
  NfaWitness witness;               // cycle-cover certificate when unbounded
};

// Decides the diagonal problem for `chars`: restrict outputs, reduce to
// order 0, linearize, decide on the NFA.  Budget exhaustion rethrows the
// BudgetError with the failing level named.
DecideResult decide_diagonal(const Machine& M,
                             const std::vector<std::string>& chars,
                             const ReduceBudgets& budgets = {});

}  // namespace hopda
