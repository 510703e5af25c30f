// machine.hpp -- the generalized automaton model: order-n, k-branch
// pushdown automata with optional regular tests on rules, their
// normalization, small-step semantics, and bounded run enumeration.
//
// Runs are trees (at most k maximal branches, enforced by the rank
// function); each rule application emits one output symbol, and the Parikh
// vector of a run counts the tracked characters in its output tree.
// Bounded enumeration of these vectors is the universal oracle against
// which every later construction is tested.

#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <vector>

#include "errors.hpp"
#include "hostack.hpp"
#include "stackaut.hpp"

namespace hopda {

using Ctrl = uint32_t;

// Output symbol: EPS is silent and never counted; otherwise an index into
// Machine::outputs (the tracked characters c_1..c_k).
using Out = int32_t;
constexpr Out EPS = -1;

struct Rule {
  Ctrl q = 0;                   // source control
  Sym guard = 0;                // required top character
  std::vector<uint32_t> tests;  // indices into Machine::tests, conjunctive
  Out out = EPS;
  StackOp op = StackOp::rew(0);
  std::vector<Ctrl> targets;    // 1..k controls
};

struct Machine {
  int order = 1;
  int branches = 1;  // k
  SymTab controls;
  SymTab outputs;    // tracked characters only; EPS is implicit
  SymTab stackalpha;
  Ctrl initial = 0;
  Sym initial_char = 0;
  std::vector<Ctrl> finals;   // exactly one after normalization
  std::vector<int> rank;      // per control, in 1..k
  std::vector<Rule> rules;
  std::vector<StackAutomaton> tests;
  std::vector<std::string> test_names;
  bool normalized = false;

  bool is_final(Ctrl q) const {
    for (Ctrl f : finals)
      if (f == q) return true;
    return false;
  }
  StackPtr initial_stack() const {
    return order == 0 ? Stack::character(initial_char)
                      : Stack::unit(order, initial_char);
  }
  std::set<Sym> gamma() const {
    std::set<Sym> g;
    for (Sym a = 0; a < stackalpha.size(); ++a) g.insert(a);
    return g;
  }
  std::string describe_rule(size_t i) const;
};

struct Config {
  Ctrl q = 0;
  StackPtr stack;
};

// One enabled transition at a configuration: the rule, its output, and the
// op-applied stack shared by all child controls.
struct Step {
  uint32_t rule = 0;
  Out out = EPS;
  StackPtr stack;  // the single stack all children share
};

// Accepting leaf: final control with empty order-n stack (at order 0 the
// stack is a single character and can never be empty, so the control alone
// decides).
bool leaf_accepting(const Machine& M, const Config& c);

// All enabled rules at c: matching guard, all tests accepting, op defined.
std::vector<Step> step(const Machine& M, const Config& c);

// Checks well-formedness and returns an equivalent normal-form machine:
// unique final control (empty-stack acceptance), silent push_n/pop_n rules,
// branching rules silent and stack-preserving.  Throws InputError on rank
// violations or dangling references.
Machine validate_and_normalize(const Machine& M);

// Parikh vector over the tracked characters, componentwise capped.
using ParikhVec = std::vector<uint32_t>;

// The set of (capped) Parikh vectors of accepting runs of depth at most
// depth_bound.  Deterministic: the result is canonically ordered.
// Throws BudgetError("enumerate") when node_budget recursion steps are spent.
std::set<ParikhVec> enumerate_parikh(const Machine& M, int depth_bound,
                                     uint32_t count_cap,
                                     uint64_t node_budget = 50'000'000);

// A concrete run tree (for the decomposition/scores machinery and for
// witness checks).  rule < 0 marks a leaf.
struct RunTree {
  Ctrl q = 0;
  StackPtr stack;
  int rule = -1;
  Out out = EPS;
  std::vector<std::unique_ptr<RunTree>> children;
};
using RunTreePtr = std::unique_ptr<RunTree>;

// Up to max_count accepting run trees of depth <= depth_bound, found by a
// deterministic depth-first search.
std::vector<RunTreePtr> enumerate_runs(const Machine& M, int depth_bound,
                                       size_t max_count,
                                       uint64_t node_budget = 50'000'000);

ParikhVec run_parikh(const Machine& M, const RunTree& t, uint32_t cap);

// Drops controls that are not forward-reachable from the initial control or
// cannot reach the final control over the rule graph, the rules touching
// them, and stack characters no surviving rule or the initial stack
// mentions.  Both graph criteria over-approximate real runs, so the set of
// accepting runs -- and hence the Parikh language -- is preserved exactly.
// The initial and final controls are always kept.
Machine prune_machine(const Machine& M);

// Renders the machine in the text file format (parseable by parse_machine).
std::string render_machine(const Machine& M);

}  // namespace hopda
