// stackaut.hpp -- deterministic bottom-up stack automata.
//
// A stack automaton of order m reads the bracketed linearization of an
// order-m stack from the right (the bottom of the stack) to the left,
// starting in `init`; the stack is accepted when the state reached at the
// leftmost position is final.  The transition function is total: letters
// with no explicit entry go to a default (sink) state, which makes
// complementation a matter of flipping the final set.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hostack.hpp"

namespace hopda {

using SAState = uint32_t;

struct StackAutomaton {
  int order = 1;                 // order of the stacks it reads
  std::set<Sym> alphabet;        // stack characters (brackets are implicit)
  uint32_t n_states = 1;
  SAState init = 0;
  std::vector<bool> finals;      // indexed by state
  // Explicit transitions; anything absent goes to `def`.
  std::map<std::pair<SAState, Letter>, SAState> delta;
  SAState def = 0;

  SAState next(SAState s, Letter x) const {
    auto it = delta.find({s, x});
    return it == delta.end() ? def : it->second;
  }
  bool is_final(SAState s) const { return s < finals.size() && finals[s]; }
};

// Runs A on the linearization of s (right to left).  Requires matching order.
bool sa_run(const StackAutomaton& A, const StackPtr& s);
// Same, on an explicit letter sequence.
SAState sa_fold(const StackAutomaton& A, const std::vector<Letter>& w);

// Accepts every order-m stack / no stack at all.
StackAutomaton sa_true(int order, const std::set<Sym>& alphabet);
StackAutomaton sa_false(int order, const std::set<Sym>& alphabet);

enum class CombineMode { And, Or };

// Product construction; alphabets are unioned (both operands are total).
// Orders must agree.
StackAutomaton sa_combine(CombineMode mode, const StackAutomaton& A,
                          const StackAutomaton& B);
StackAutomaton sa_complement(const StackAutomaton& A);

// Accepts exactly the order-m stacks whose outermost sequence has length 1.
StackAutomaton single_outer_filter(int m, const std::set<Sym>& alphabet);

// For A of order m (m >= 2) whose language is contained in the single-outer
// stacks: the order-(m-1) automaton B with  B accepts u  iff  A accepts [m u].
StackAutomaton strip_order(const StackAutomaton& A);

// A configuration set: one shared automaton body plus per-control final sets.
// (q, w) is a member iff running the body on w ends in a state of finals[q].
struct ConfigSet {
  StackAutomaton body;                       // finals field unused here
  std::map<Sym, std::vector<bool>> finals;   // control -> final-state set

  bool contains(Sym control, const StackPtr& stack) const;
};

// Text rendering of an automaton in the machine-file block syntax.
std::string render_stackaut(const StackAutomaton& A, const SymTab& chars);

}  // namespace hopda
