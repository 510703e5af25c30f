// saturate.hpp -- alternating higher-order pushdown systems, backward
// reachability (pre*), and the canpop test-automata family.
//
// pre* is computed exactly, for target sets of the form "control at the
// empty order-n stack", by a demand-driven fixpoint over phase summaries:
// derivability of (control, frontier-allowance) pairs, one pairing per
// stack level, evaluated per character at the innermost level.  The result
// is materialized as a deterministic bottom-up automaton over composite
// suffix-summary states, i.e. a ConfigSet.

#pragma once

#include <functional>
#include <map>
#include <vector>

#include "machine.hpp"
#include "stackaut.hpp"

namespace hopda {

struct AltOrdRule {
  Ctrl q = 0;
  Sym a = 0;  // top-character guard
  StackOp op = StackOp::rew(0);
  Ctrl q2 = 0;
};

// Alternating rule: all targets must be derivable with the same stack.  An
// empty target set is an axiom (derivable whenever the guard matches).
struct AltAltRule {
  Ctrl q = 0;
  Sym a = 0;
  std::vector<Ctrl> targets;
};

struct AlternatingSystem {
  int order = 1;
  SymTab controls;
  SymTab chars;
  std::vector<AltOrdRule> ord;
  std::vector<AltAltRule> alt;
};

struct AltConfig {
  Ctrl q = 0;
  StackPtr stack;
};

// A canpop query: can the machine, from control q with some order-(n-1)
// stack u as the single outer element, pop everything away leaving exactly
// the leaves (q_1..q_m) at the empty order-n stack, with output-tree
// character set exactly O?
struct CanpopKey {
  Ctrl q = 0;
  std::vector<Ctrl> targets;  // tuple (q_1..q_m), 1 <= m <= k
  std::vector<bool> O;        // indexed by tracked character

  auto operator<=>(const CanpopKey&) const = default;
};

// The paper's alternating system over triples (q, O, q_1..q_m): ordinary
// rules strip emitted characters from O; branching rules become alternating
// rules over all permutation-distributions of the tuple and all
// O-partitions.  Eager; meant for small machines and for tests -- the
// canpop pipeline generates the same rules lazily.
AlternatingSystem build_alternating(const Machine& M);

// The triple's control id in S (as produced by build_alternating), if
// present.
std::optional<Ctrl> alt_control(const AlternatingSystem& S, const Machine& M,
                                Ctrl q, const std::vector<bool>& O,
                                const std::vector<Ctrl>& targets);

// The target configurations of the canpop lemma: ((q_i, {}, q_i), empty
// order-n stack) for each tuple component.
std::vector<AltConfig> target_set(const AlternatingSystem& S, const Machine& M,
                                  const CanpopKey& key);

// Exact pre*: all configurations from which an alternating run tree exists
// whose every leaf is one of the targets.  Targets must carry empty stacks.
// Throws BudgetError("saturate") when the state/pair budget is exhausted.
ConfigSet prestar(const AlternatingSystem& S, const std::vector<AltConfig>& A,
                  uint64_t budget = 2'000'000);

// Bounded forward search: Yes iff an alternating run tree of depth <= bound
// from c reaches a target at every leaf; Unknown otherwise.
enum class OracleAnswer { Yes, Unknown };
OracleAnswer member_oracle(const AlternatingSystem& S,
                           const std::vector<AltConfig>& A, const AltConfig& c,
                           int bound);

// On-demand canpop family for a normalized, test-free machine of order
// n >= 1.  get() returns the exact-output-set automaton of order n-1 for a
// key; exactness is obtained by also threading the key's full output set
// through the alternating controls (rules may only emit inside it).  Keys
// must satisfy the rank condition.  One saturation is shared by all keys.
class CanpopFamily {
 public:
  explicit CanpopFamily(const Machine& M, uint64_t budget = 2'000'000);
  ~CanpopFamily();
  CanpopFamily(CanpopFamily&&) noexcept;

  bool key_valid(const CanpopKey& key) const;
  const StackAutomaton& get(const CanpopKey& key);  // cached
  size_t keys_built() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Eagerly computes the automata of every rank-valid key (small machines /
// tests only).
std::map<CanpopKey, StackAutomaton> canpop_family(const Machine& M,
                                                  uint64_t budget = 2'000'000);

}  // namespace hopda
