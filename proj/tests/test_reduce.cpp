#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "errors.hpp"
#include "parse.hpp"
#include "reduce.hpp"

using namespace hopda;

namespace {

std::set<ParikhVec> parikh(const Machine& M, int depth,
                           uint32_t cap = 1000) {
  Machine N = M.normalized ? M : validate_and_normalize(M);
  return enumerate_parikh(N, depth, cap);
}

// Componentwise order.
bool dominated(const ParikhVec& v, const ParikhVec& w) {
  for (size_t i = 0; i < v.size(); ++i)
    if (v[i] > w[i]) return false;
  return true;
}

bool dominated_by_some(const ParikhVec& v, const std::set<ParikhVec>& W) {
  return std::any_of(W.begin(), W.end(),
                     [&](const ParikhVec& w) { return dominated(v, w); });
}

// Language equivalence for test removal: annotation inserts at most two
// intermediate steps per source rule (one around each push/pop, one more if
// normalization re-splits), so runs of the source of depth d map to runs of
// the rewritten machine of depth <= 3d + 3, and every rewritten run
// collapses to a source run of no greater depth.
void check_test_removal(const Machine& M, const Machine& R, int depth) {
  auto before = parikh(M, depth);
  auto after = parikh(R, depth);
  for (const ParikhVec& v : after) CHECK(before.count(v) == 1);
  auto wide = parikh(R, 3 * depth + 3);
  for (const ParikhVec& v : before) CHECK(wide.count(v) == 1);
}

// a^m b^(m+1) over outputs (c1, c2): push m times, then pop everything.
const char* kCounter =
    "order 1; branches 1; controls q0 q1 qf; initial q0 a; final qf;"
    "outputs c1 c2; stackalpha a;"
    "rule q0, a -> c1, push(1), q0;"
    "rule q0, a -> eps, rew(a), q1;"
    "rule q1, a -> c2, pop(1), q1;"
    "rule q1, a -> c2, pop(1), qf;";

// c1^(2^m): the top order-1 stack f^m g is consumed by a depth-first walk,
// push(2) saving the subtree still owed at each f.
const char* kDoubling =
    "order 2; branches 1; controls qb qc e e2 e3 qf; initial qb g; final qf;"
    "outputs c1; stackalpha f f1 g;"
    // build f^m g below the top character
    "rule qb, g -> eps, push(1), qc;"
    "rule qc, g -> eps, rew(f), qb;"
    "rule qb, f -> eps, push(1), qc;"
    "rule qc, f -> eps, rew(f), qb;"
    "rule qb, g -> eps, rew(g), e;"
    "rule qb, f -> eps, rew(f), e;"
    // count(f w) = 2 count(w): mark, save a copy, do the left half
    "rule e, f -> eps, rew(f1), e2;"
    "rule e2, f1 -> eps, push(2), e3;"  // copy keeps the f1 mark
    "rule e3, f1 -> eps, pop(1), e;"    // descend into the copy
    // the mark resurfaces when the copy is used up: do the right half
    "rule e, f1 -> eps, pop(1), e;"
    "rule e, g -> c1, pop(2), e;"
    "rule e, g -> c1, pop(2), qf;";

Machine counter() { return validate_and_normalize(parse_machine(kCounter)); }

// ---------------------------------------------------------------------------
// Random machines (order <= 2, optionally with one nontrivial test).

StackAutomaton random_test(std::mt19937& rng, int order, size_t nchars) {
  StackAutomaton A;
  A.order = order;
  for (Sym a = 0; a < nchars; ++a) A.alphabet.insert(a);
  A.n_states = 2 + rng() % 2;
  A.init = static_cast<SAState>(rng() % A.n_states);
  A.def = static_cast<SAState>(rng() % A.n_states);
  A.finals.assign(A.n_states, false);
  A.finals[rng() % A.n_states] = true;
  std::vector<Letter> letters;
  for (Sym a = 0; a < nchars; ++a) letters.push_back(letter_char(a));
  for (int l = 1; l < order; ++l) {
    letters.push_back(letter_open(l));
    letters.push_back(letter_close(l));
  }
  for (SAState s = 0; s < A.n_states; ++s)
    for (Letter w : letters)
      if (rng() % 3) A.delta[{s, w}] = static_cast<SAState>(rng() % A.n_states);
  return A;
}

Machine random_machine(std::mt19937& rng, int order, int k, bool with_test) {
  Machine M;
  M.order = order;
  M.branches = k;
  size_t nq = 2 + rng() % 3;
  for (size_t i = 0; i < nq; ++i) M.controls.intern("q" + std::to_string(i));
  Ctrl qf = M.controls.intern("qf");
  size_t na = 1 + rng() % 2;
  for (size_t i = 0; i < na; ++i) M.stackalpha.intern("a" + std::to_string(i));
  size_t no = 1 + rng() % 2;
  for (size_t i = 0; i < no; ++i) M.outputs.intern("c" + std::to_string(i));
  M.initial = 0;
  M.initial_char = static_cast<Sym>(rng() % na);
  M.finals = {qf};
  M.rank.assign(M.controls.size(), 1);
  for (size_t i = 0; i < nq; ++i) M.rank[i] = 1 + rng() % k;
  if (with_test) {
    M.tests.push_back(random_test(rng, order, na));
    M.test_names.push_back("t0");
  }
  size_t nrules = 4 + rng() % 5;
  for (size_t i = 0; i < nrules; ++i) {
    Rule r;
    r.q = static_cast<Ctrl>(rng() % nq);  // never from qf
    r.guard = static_cast<Sym>(rng() % na);
    r.out = rng() % 2 ? EPS : static_cast<Out>(rng() % no);
    if (with_test && rng() % 2 == 0) r.tests.push_back(0);
    if (k > 1 && rng() % 4 == 0 && M.rank[r.q] >= 2) {
      // silent stack-preserving branching rule
      r.out = EPS;
      r.op = StackOp::rew(r.guard);
      int budget = M.rank[r.q];
      while (budget > 0) {
        Ctrl t = static_cast<Ctrl>(rng() % M.controls.size());
        if (M.rank[t] > budget) continue;
        r.targets.push_back(t);
        budget -= M.rank[t];
        if (r.targets.size() >= 2 && rng() % 2) break;
      }
      if (r.targets.size() < 2) continue;
    } else {
      switch (rng() % 4) {
        case 0:
          r.op = StackOp::rew(static_cast<Sym>(rng() % na));
          break;
        case 1:
          r.op = StackOp::push(1 + static_cast<int>(rng() % order));
          break;
        default:
          r.op = StackOp::pop(1 + static_cast<int>(rng() % order));
          break;
      }
      Ctrl t;
      do {
        t = static_cast<Ctrl>(rng() % M.controls.size());
      } while (M.rank[t] > M.rank[r.q]);
      r.targets = {t};
    }
    M.rules.push_back(std::move(r));
  }
  // Make acceptance reachable more often than not.
  Rule fin;
  fin.q = static_cast<Ctrl>(rng() % nq);
  fin.guard = static_cast<Sym>(rng() % na);
  fin.out = EPS;
  fin.op = order == 0 ? StackOp::rew(fin.guard) : StackOp::pop(order);
  fin.targets = {qf};
  M.rules.push_back(std::move(fin));
  return M;
}

}  // namespace

TEST_CASE("restrict_outputs projects the tracked characters") {
  Machine M = counter();
  Machine R = validate_and_normalize(restrict_outputs(M, {"c2"}));
  CHECK(R.outputs.size() == 1);
  auto full = parikh(M, 8);
  auto proj = parikh(R, 8);
  std::set<ParikhVec> expect;
  for (const ParikhVec& v : full) expect.insert({v[1]});
  CHECK(proj == expect);
  CHECK_THROWS_AS(restrict_outputs(M, {"nope"}), InputError);
  CHECK_THROWS_AS(restrict_outputs(M, {"c1", "c1"}), InputError);
  CHECK_THROWS_AS(restrict_outputs(M, {}), InputError);
}

TEST_CASE("remove_tests: order-0 machines filter rules by the guard") {
  Machine M = validate_and_normalize(parse_machine(
      "order 0; branches 1; controls q0 qf; initial q0 a; final qf;"
      "outputs c1; stackalpha a b;"
      "test is_b = states s0 s1; init s0; finals s1;"
      "delta s0 b -> s1; default -> s0;"
      "rule q0, a, test is_b -> c1, rew(a), qf;"  // never fires
      "rule q0, a -> eps, rew(b), q0;"
      "rule q0, b, test is_b -> c1, rew(b), qf;"));
  Machine R = remove_tests(M);
  CHECK(R.tests.empty());
  CHECK(parikh(R, 6) == parikh(M, 6));
  CHECK(parikh(M, 6) == std::set<ParikhVec>{{1}});
}

TEST_CASE("remove_tests: trivial test leaves the language unchanged") {
  Machine M = validate_and_normalize(parse_machine(
      "order 1; branches 1; controls q0 q1 qf; initial q0 a; final qf;"
      "outputs c1 c2; stackalpha a;"
      "test yes = states s0; init s0; finals s0; default -> s0;"
      "rule q0, a, test yes -> c1, push(1), q0;"
      "rule q0, a -> eps, rew(a), q1;"
      "rule q1, a, test yes -> c2, pop(1), q1;"
      "rule q1, a, test yes -> c2, pop(1), qf;"));
  Machine R = remove_tests(M);
  CHECK(R.tests.empty());
  check_test_removal(M, R, 8);
}

TEST_CASE("remove_tests: a height test gates the emitting phase") {
  // The pop phase may only start when at least two characters are stacked:
  // the test reads the linearization right-to-left and needs one character
  // strictly below the top one.
  Machine M = validate_and_normalize(parse_machine(
      "order 1; branches 1; controls q0 q1 qf; initial q0 a; final qf;"
      "outputs c1; stackalpha a;"
      "test tall = states s0 s1 s2; init s0; finals s2;"
      "delta s0 a -> s1; delta s1 a -> s2; delta s2 a -> s2;"
      "default -> s0;"
      "rule q0, a -> eps, push(1), q0;"
      "rule q0, a, test tall -> eps, rew(a), q1;"
      "rule q1, a -> c1, pop(1), q1;"
      "rule q1, a -> c1, pop(1), qf;"));
  auto before = parikh(M, 9);
  // Sanity of the oracle itself: one c1 per character, at least two.
  CHECK(before.count({2}) == 1);
  CHECK(before.count({1}) == 0);
  CHECK(before.count({0}) == 0);
  Machine R = remove_tests(M);
  check_test_removal(M, R, 9);
}

TEST_CASE("remove_tests: random order-1 and order-2 machines, one test") {
  std::mt19937 rng(20260823);
  int checked = 0;
  for (int i = 0; i < 40; ++i) {
    int order = 1 + static_cast<int>(rng() % 2);
    Machine raw = random_machine(rng, order, 1 + rng() % 2, true);
    Machine M;
    try {
      M = validate_and_normalize(raw);
    } catch (const InputError&) {
      continue;  // rank-invalid draw
    }
    Machine R = remove_tests(M);
    INFO("machine ", i, "\n", render_machine(M));
    check_test_removal(M, R, 8);
    ++checked;
  }
  CHECK(checked >= 25);
}

TEST_CASE("build_simulator: shape and the fin rules of the counter machine") {
  Machine M = counter();
  CanpopFamily fam(M);
  Machine S = build_simulator(M, fam);
  CHECK(S.order == 0);
  CHECK(S.branches == 2);
  CHECK(S.finals.size() == 1);
  CHECK(!S.tests.empty());
  // Init guesses a single branch (k = 1): exactly one init rule.
  size_t init_rules = 0;
  for (const Rule& r : S.rules)
    if (r.q == S.initial) ++init_rules;
  CHECK(init_rules == 1);
  // Some rule enters the final control (from the pop(1) rule into qf).
  bool fin_rule = false;
  for (const Rule& r : S.rules)
    for (Ctrl t : r.targets)
      if (t == S.finals[0]) fin_rule = true;
  CHECK(fin_rule);
}

TEST_CASE("reduce_once: the counter machine keeps its diagonal") {
  Machine M = counter();
  LevelStats st;
  Machine R = reduce_once(M, {}, &st);
  CHECK(R.order == 0);
  CHECK(st.order == 0);
  CHECK(st.canpop_keys > 0);
  auto red = parikh(R, 12, 100);
  auto big = parikh(M, 40, 100);
  for (const ParikhVec& v : red) CHECK(dominated_by_some(v, big));
  // Survival: a vector with both coordinates >= 2 must remain reachable.
  bool survive = false;
  for (const ParikhVec& v : red)
    if (v[0] >= 2 && v[1] >= 2) survive = true;
  CHECK(survive);
}

TEST_CASE("reduce_once: random order-1 machines are dominated by the source") {
  std::mt19937 rng(7);
  int checked = 0;
  for (int i = 0; i < 25 && checked < 12; ++i) {
    Machine M;
    try {
      M = validate_and_normalize(random_machine(rng, 1, 1 + rng() % 2, false));
    } catch (const InputError&) {
      continue;
    }
    Machine R;
    try {
      R = reduce_once(M);
    } catch (const BudgetError&) {
      continue;
    }
    auto red = parikh(R, 10, 50);
    auto big = parikh(M, 40, 50);
    INFO("machine ", i, "\n", render_machine(M));
    for (const ParikhVec& v : red) CHECK(dominated_by_some(v, big));
    ++checked;
  }
  CHECK(checked >= 8);
}

TEST_CASE("reduce_once: empty language stays empty") {
  Machine M = validate_and_normalize(parse_machine(
      "order 1; branches 1; controls q0 qf; initial q0 a; final qf;"
      "outputs c1; stackalpha a;"
      "rule q0, a -> c1, push(1), q0;"));  // never reaches qf
  Machine R = reduce_once(M);
  CHECK(parikh(R, 20).empty());
}

TEST_CASE("decide_diagonal: order-1 verdicts") {
  Machine M = counter();
  SUBCASE("a^m b^(m+1) is diagonally unbounded in {c1, c2}") {
    DecideResult r = decide_diagonal(M, {"c1", "c2"});
    CHECK(r.unbounded);
    CHECK(r.levels.size() == 1);
    CHECK(r.levels[0].order == 0);
    CHECK(!r.witness.cycles.empty());
  }
  SUBCASE("each character alone is unbounded") {
    CHECK(decide_diagonal(M, {"c1"}).unbounded);
    CHECK(decide_diagonal(M, {"c2"}).unbounded);
  }
  SUBCASE("a bounded character breaks the diagonal") {
    Machine B = validate_and_normalize(parse_machine(
        "order 1; branches 1; controls q0 qf; initial q0 a; final qf;"
        "outputs c1 c2; stackalpha a;"
        "rule q0, a -> c1, rew(a), q0;"
        "rule q0, a -> c2, pop(1), qf;"));  // c2 exactly once
    CHECK(decide_diagonal(B, {"c1"}).unbounded);
    CHECK_FALSE(decide_diagonal(B, {"c2"}).unbounded);
    CHECK_FALSE(decide_diagonal(B, {"c1", "c2"}).unbounded);
  }
  SUBCASE("finite language is bounded") {
    Machine F = validate_and_normalize(parse_machine(
        "order 1; branches 1; controls q0 qf; initial q0 a; final qf;"
        "outputs c1; stackalpha a;"
        "rule q0, a -> c1, pop(1), qf;"));
    CHECK_FALSE(decide_diagonal(F, {"c1"}).unbounded);
  }
}

TEST_CASE("decide_diagonal: order-2 doubling machine") {
  Machine M = validate_and_normalize(parse_machine(kDoubling));
  // Oracle sanity: the language is { c1^(2^m) }.
  auto vs = parikh(M, 32, 100);
  CHECK(vs.count({1}) == 1);
  CHECK(vs.count({2}) == 1);
  CHECK(vs.count({4}) == 1);
  CHECK(vs.count({3}) == 0);
  DecideResult r = decide_diagonal(M, {"c1"});
  CHECK(r.unbounded);
  CHECK(r.levels.size() == 2);
  CHECK(r.levels[0].order == 1);
  CHECK(r.levels[1].order == 0);
}
