// scores.hpp -- tree decompositions of accepting runs and the score
// function.  This is proof machinery: it is used by lemma-level tests as an
// independent oracle, never by the decision procedure itself.

#pragma once

#include <memory>
#include <vector>

#include "machine.hpp"

namespace hopda {

// Finite tree with output labels; only unary nodes may carry a non-EPS
// label, and the out-degree is at most k+1.
struct DecompTree {
  Out label = EPS;
  std::vector<std::unique_ptr<DecompTree>> children;
};
using DecompTreePtr = std::unique_ptr<DecompTree>;

// The inductive decomposition of an accepting run: at each push(n) node the
// subtrees rooted at the matching pop(n) nodes are re-hung as siblings of
// the enclosed segment; pops that end a branch become epsilon leaves.
// Throws InputError("UnmatchedPush...") if some push(n) has a branch with no
// matching pop (the run is not accepting or is malformed).
DecompTreePtr treedecomp(const Machine& M, const RunTree& run);

// Recursive score: leaf -> 0; unary -> child score + [label = c];
// branching -> max over children of (child score + [sum of the other
// children's scores > 0]).
int treescore(const DecompTree& t, Out c);

// Occurrences of character c among the labels.
uint64_t decomp_count(const DecompTree& t, Out c);

size_t decomp_nodes(const DecompTree& t);
size_t decomp_maxdeg(const DecompTree& t);

}  // namespace hopda
