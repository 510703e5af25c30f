// base0.hpp -- order-0 linearization and the NFA-level diagonal decision.
//
// The bottom of the reduction pipeline: an order-0 machine (single-character
// stacks) is turned into an NFA whose word language has the same Parikh
// vectors as the machine's output-tree language; simultaneous unboundedness
// is then decided on the NFA twice, by independent algorithms that are
// checked against each other.

#pragma once

#include <set>
#include <string>
#include <vector>

#include "machine.hpp"

namespace hopda {

struct NfaTrans {
  uint32_t from = 0;
  Out sym = EPS;  // EPS or an index into Nfa::chars
  uint32_t to = 0;
};

struct Nfa {
  SymTab states;  // state names (dense ids)
  SymTab chars;   // tracked characters; epsilon is implicit
  uint32_t init = 0;
  std::vector<bool> finals;
  std::vector<NfaTrans> trans;

  uint32_t n_states() const { return static_cast<uint32_t>(states.size()); }
};

// NFA membership (subset simulation with epsilon closure).
bool nfa_accepts(const Nfa& N, const std::vector<Out>& word);

// Linearization of an order-0 machine: NFA states are the machine control
// plus the list of sibling branches still to be explored (at most k-1 of
// them); branching rules enqueue siblings, reaching the final control
// dequeues.  Requires order 0 and normalized.
Nfa linearize0(const Machine& M);

// A certificate for simultaneous unboundedness: an accepting path skeleton
// segments[0] cycles[0] segments[1] cycles[1] ... segments[m], where cycle i
// passes through a transition labelled cycle_chars[i] and can be pumped in
// place.  Words are stored as sequences of char indices (EPS letters elided).
struct NfaWitness {
  std::vector<std::vector<Out>> segments;  // size m+1
  std::vector<std::vector<Out>> cycles;    // size m
  std::vector<Out> cycle_chars;            // size m
};

// Pumps every cycle t times: segments[0] cycles[0]^t ... segments[m].
std::vector<Out> pump_witness(const NfaWitness& w, int t);

// True iff some accepting path visits, for every c in chars, a state lying
// on a cycle with a c-transition.  Per-SCC marking of c-pumpable states,
// then BFS over (state, covered-subset) pairs; deterministic witness.
bool nfa_diagonal(const Nfa& N, const std::vector<Out>& chars,
                  NfaWitness* witness = nullptr);

// Independent oracle: reachability over (state, componentwise-capped count
// vector) with cap = |states|+1; true iff an accepting word has every
// tracked character at least cap times.
bool nfa_diagonal_oracle(const Nfa& N, const std::vector<Out>& chars);

// Exact set of componentwise-capped Parikh vectors of (a) all accepting runs
// of an order-0 machine and (b) all accepted words of an NFA, computed as
// backward Kleene fixpoints over the finite configuration space.
std::set<ParikhVec> machine0_parikh(const Machine& M, uint32_t cap);
std::set<ParikhVec> nfa_parikh_capped(const Nfa& N, uint32_t cap);

// Text format (see parse.hpp for the grammar).
std::string render_nfa(const Nfa& N);

}  // namespace hopda
