#include "scores.hpp"

#include <algorithm>
#include <set>

namespace hopda {

namespace {

DecompTreePtr leaf() { return std::make_unique<DecompTree>(); }

bool is_push_n(const Machine& M, const RunTree& v) {
  return v.rule >= 0 && M.rules[v.rule].op.kind == StackOp::Push &&
         M.rules[v.rule].op.level == M.order;
}
bool is_pop_n(const Machine& M, const RunTree& v) {
  return v.rule >= 0 && M.rules[v.rule].op.kind == StackOp::Pop &&
         M.rules[v.rule].op.level == M.order;
}

// The pop(n) nodes matching the push(n) at `from` (balance returns to zero),
// in depth-first order; descent stops at cut nodes of enclosing pushes.
void matching_pops(const Machine& M, const RunTree& v, int balance,
                   const std::set<const RunTree*>& cuts,
                   std::vector<const RunTree*>& out) {
  if (cuts.count(&v))
    throw InputError("UnmatchedPush: enclosing pop reached first");
  if (is_pop_n(M, v)) {
    if (balance == 1) {
      out.push_back(&v);
      return;
    }
    --balance;
  } else if (is_push_n(M, v)) {
    ++balance;
  }
  if (v.children.empty()) {
    if (balance > 0) throw InputError("UnmatchedPush: branch ends in a leaf");
    return;
  }
  for (const auto& c : v.children) matching_pops(M, *c, balance, cuts, out);
}

DecompTreePtr build(const Machine& M, const RunTree& v,
                    std::set<const RunTree*>& cuts) {
  if (cuts.count(&v)) return leaf();  // re-hung elsewhere
  if (v.rule < 0) return leaf();
  if (is_push_n(M, v)) {
    std::vector<const RunTree*> pops;
    for (const auto& c : v.children) matching_pops(M, *c, 1, cuts, pops);
    auto node = std::make_unique<DecompTree>();
    for (const RunTree* p : pops) cuts.insert(p);
    for (const auto& c : v.children) node->children.push_back(build(M, *c, cuts));
    for (const RunTree* p : pops) {
      cuts.erase(p);
      // The pop itself is silent; its continuation (if any) is the sibling.
      if (p->children.empty() ||
          (p->children.size() == 1 && p->children[0]->rule < 0)) {
        node->children.push_back(leaf());
      } else {
        auto sib = std::make_unique<DecompTree>();
        for (const auto& c : p->children)
          sib->children.push_back(build(M, *c, cuts));
        if (sib->children.size() == 1)
          node->children.push_back(std::move(sib->children[0]));
        else
          node->children.push_back(std::move(sib));
      }
    }
    return node;
  }
  auto node = std::make_unique<DecompTree>();
  if (v.children.size() <= 1) node->label = v.out;
  if (v.children.empty()) {
    node->children.push_back(leaf());
  } else {
    for (const auto& c : v.children) node->children.push_back(build(M, *c, cuts));
  }
  return node;
}

}  // namespace

DecompTreePtr treedecomp(const Machine& M, const RunTree& run) {
  std::set<const RunTree*> cuts;
  return build(M, run, cuts);
}

int treescore(const DecompTree& t, Out c) {
  if (t.children.empty()) return 0;
  if (t.children.size() == 1)
    return treescore(*t.children[0], c) + (t.label == c ? 1 : 0);
  int best = 0;
  std::vector<int> sub;
  sub.reserve(t.children.size());
  for (const auto& ch : t.children) sub.push_back(treescore(*ch, c));
  for (size_t i = 0; i < sub.size(); ++i) {
    int others = 0;
    for (size_t j = 0; j < sub.size(); ++j)
      if (j != i) others += sub[j];
    best = std::max(best, sub[i] + (others > 0 ? 1 : 0));
  }
  return best;
}

uint64_t decomp_count(const DecompTree& t, Out c) {
  uint64_t n = (t.label == c && t.children.size() == 1) ? 1 : 0;
  for (const auto& ch : t.children) n += decomp_count(*ch, c);
  return n;
}

size_t decomp_nodes(const DecompTree& t) {
  size_t n = 1;
  for (const auto& ch : t.children) n += decomp_nodes(*ch);
  return n;
}

size_t decomp_maxdeg(const DecompTree& t) {
  size_t d = t.children.size();
  for (const auto& ch : t.children) d = std::max(d, decomp_maxdeg(*ch));
  return d;
}

}  // namespace hopda
