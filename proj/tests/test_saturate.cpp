#include "doctest.h"

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "parse.hpp"
#include "saturate.hpp"

using namespace hopda;

namespace {

// Independent bounded oracle for alternating backward reachability: true iff
// an alternating run tree of depth <= d from (q, s) ends in targets (or
// axioms) at every leaf.
bool alt_reach(const AlternatingSystem& S, const std::vector<AltConfig>& A,
               Ctrl q, const StackPtr& s, int d) {
  for (const AltConfig& t : A)
    if (t.q == q && stack_equal(*t.stack, *s)) return true;
  if (d == 0) return false;
  auto tc = top_char(s);
  if (!tc) return false;
  for (const AltOrdRule& r : S.ord) {
    if (r.q != q || r.a != *tc) continue;
    auto s2 = apply_op(r.op, s);
    if (s2 && alt_reach(S, A, r.q2, *s2, d - 1)) return true;
  }
  for (const AltAltRule& r : S.alt) {
    if (r.q != q || r.a != *tc) continue;
    bool all = true;
    for (Ctrl t : r.targets)
      if (!alt_reach(S, A, t, s, d - 1)) {
        all = false;
        break;
      }
    if (all) return true;
  }
  return false;
}

std::vector<StackPtr> order1_stacks(const std::vector<Sym>& chars, int maxlen) {
  std::vector<StackPtr> out;
  std::vector<std::vector<Sym>> words{{}};
  for (int l = 0; l <= maxlen; ++l) {
    std::vector<std::vector<Sym>> nxt;
    for (auto& w : words) {
      std::vector<StackPtr> elems;
      for (Sym a : w) elems.push_back(Stack::character(a));
      out.push_back(Stack::sequence(1, elems));
      for (Sym a : chars) {
        auto w2 = w;
        w2.push_back(a);
        nxt.push_back(std::move(w2));
      }
    }
    words = std::move(nxt);
  }
  return out;
}

std::vector<StackPtr> order2_stacks(const std::vector<Sym>& chars, int maxlen,
                                    int maxelems) {
  std::vector<StackPtr> elems = order1_stacks(chars, maxlen);
  std::vector<StackPtr> out;
  std::vector<std::vector<StackPtr>> seqs{{}};
  for (int n = 0; n <= maxelems; ++n) {
    std::vector<std::vector<StackPtr>> nxt;
    for (auto& sq : seqs) {
      out.push_back(Stack::sequence(2, sq));
      for (const StackPtr& e : elems) {
        auto sq2 = sq;
        sq2.push_back(e);
        nxt.push_back(std::move(sq2));
      }
    }
    seqs = std::move(nxt);
  }
  return out;
}

// Exhaustive check of a ConfigSet against the bounded oracle.  Sound only
// when `depth` decides every sampled configuration of the system at hand.
void check_against_oracle(const AlternatingSystem& S,
                          const std::vector<AltConfig>& A, const ConfigSet& cs,
                          const std::vector<StackPtr>& stacks, int depth) {
  for (Ctrl q = 0; q < S.controls.size(); ++q)
    for (const StackPtr& s : stacks) {
      bool expect = alt_reach(S, A, q, s, depth);
      bool got = cs.contains(q, s);
      INFO("control ", S.controls.name(q), " stack ",
           render_stack(s, const_cast<SymTab&>(S.chars)));
      CHECK(got == expect);
    }
}

// Independent oracle for canpop: the set of (sorted leaf controls, emitted
// character bitset) over run trees from (q, s) whose leaves all sit at the
// empty order-n stack.
using LeafFact = std::pair<std::vector<Ctrl>, uint32_t>;
std::set<LeafFact> canpop_search(const Machine& M, Ctrl q, const StackPtr& s,
                                 int depth) {
  std::set<LeafFact> out;
  if (s->order >= 1 && s->elems.empty()) {
    out.insert({{q}, 0});
    return out;
  }
  if (depth == 0) return out;
  for (const Step& st : step(M, Config{q, s})) {
    const Rule& r = M.rules[st.rule];
    uint32_t ob = st.out == EPS ? 0 : (1u << st.out);
    std::vector<LeafFact> acc{{{}, ob}};
    bool dead = false;
    for (Ctrl t : r.targets) {
      auto sub = canpop_search(M, t, st.stack, depth - 1);
      if (sub.empty()) {
        dead = true;
        break;
      }
      std::vector<LeafFact> nxt;
      for (const LeafFact& a : acc)
        for (const LeafFact& b : sub) {
          std::vector<Ctrl> leaves = a.first;
          leaves.insert(leaves.end(), b.first.begin(), b.first.end());
          nxt.push_back({std::move(leaves), a.second | b.second});
        }
      acc = std::move(nxt);
    }
    if (dead) continue;
    for (LeafFact f : acc) {
      std::sort(f.first.begin(), f.first.end());
      out.insert(std::move(f));
    }
  }
  return out;
}

uint32_t obits(const std::vector<bool>& O) {
  uint32_t b = 0;
  for (size_t i = 0; i < O.size(); ++i)
    if (O[i]) b |= 1u << i;
  return b;
}

}  // namespace

TEST_CASE("prestar matches the bounded oracle on an order-1 ordinary system") {
  AlternatingSystem S;
  S.order = 1;
  Sym a = S.chars.intern("a"), b = S.chars.intern("b");
  Ctrl p = S.controls.intern("p"), q = S.controls.intern("q");
  Ctrl r = S.controls.intern("r"), f = S.controls.intern("f");
  S.ord.push_back({p, a, StackOp::pop(1), f});
  S.ord.push_back({p, a, StackOp::rew(b), q});
  S.ord.push_back({q, b, StackOp::pop(1), p});
  S.ord.push_back({r, a, StackOp::push(1), p});
  std::vector<AltConfig> A{{f, Stack::sequence(1, {})}};
  ConfigSet cs = prestar(S, A);
  check_against_oracle(S, A, cs, order1_stacks({a, b}, 4), 24);
}

TEST_CASE("prestar handles alternation and axioms") {
  AlternatingSystem S;
  S.order = 1;
  Sym a = S.chars.intern("a"), b = S.chars.intern("b");
  Ctrl p = S.controls.intern("p"), q = S.controls.intern("q");
  Ctrl r = S.controls.intern("r"), f = S.controls.intern("f");
  Ctrl z = S.controls.intern("z");
  S.alt.push_back({p, a, {q, r}});
  S.ord.push_back({q, a, StackOp::pop(1), f});
  S.ord.push_back({r, a, StackOp::rew(a), q});
  S.alt.push_back({z, b, {}});  // axiom: accept any stack topped by b
  std::vector<AltConfig> A{{f, Stack::sequence(1, {})}};
  ConfigSet cs = prestar(S, A);
  auto stacks = order1_stacks({a, b}, 4);
  check_against_oracle(S, A, cs, stacks, 24);
  CHECK(cs.contains(p, Stack::sequence(1, {Stack::character(a)})));
  CHECK(cs.contains(
      z, Stack::sequence(1, {Stack::character(b), Stack::character(a)})));
  CHECK_FALSE(cs.contains(z, Stack::sequence(1, {Stack::character(a)})));
}

TEST_CASE("prestar matches the bounded oracle at order 2") {
  AlternatingSystem S;
  S.order = 2;
  Sym a = S.chars.intern("a"), b = S.chars.intern("b");
  Ctrl p = S.controls.intern("p"), q = S.controls.intern("q");
  Ctrl r = S.controls.intern("r"), f = S.controls.intern("f");
  Ctrl g = S.controls.intern("g"), h = S.controls.intern("h");
  S.ord.push_back({p, a, StackOp::push(2), q});
  S.ord.push_back({q, a, StackOp::pop(1), r});
  S.ord.push_back({r, b, StackOp::pop(2), f});
  S.ord.push_back({f, a, StackOp::pop(1), g});
  S.ord.push_back({g, b, StackOp::pop(2), h});
  S.ord.push_back({f, b, StackOp::push(1), g});
  std::vector<AltConfig> A{{h, Stack::sequence(2, {})}};
  ConfigSet cs = prestar(S, A);
  auto ab = Stack::sequence(1, {Stack::character(a), Stack::character(b)});
  CHECK(cs.contains(p, Stack::sequence(2, {ab})));
  check_against_oracle(S, A, cs, order2_stacks({a, b}, 2, 2), 20);
}

TEST_CASE("prestar rejects non-empty target stacks and tiny budgets abort") {
  AlternatingSystem S;
  S.order = 1;
  Sym a = S.chars.intern("a");
  Ctrl p = S.controls.intern("p");
  S.ord.push_back({p, a, StackOp::push(1), p});
  CHECK_THROWS_AS(
      prestar(S, {{p, Stack::sequence(1, {Stack::character(a)})}}),
      InputError);
  CHECK_THROWS_AS(prestar(S, {{p, Stack::sequence(1, {})}}, 3), BudgetError);
}

TEST_CASE("member_oracle agrees with prestar where it answers Yes") {
  AlternatingSystem S;
  S.order = 1;
  Sym a = S.chars.intern("a"), b = S.chars.intern("b");
  Ctrl p = S.controls.intern("p"), q = S.controls.intern("q");
  Ctrl f = S.controls.intern("f");
  S.ord.push_back({p, a, StackOp::pop(1), q});
  S.ord.push_back({q, b, StackOp::pop(1), f});
  S.ord.push_back({q, a, StackOp::rew(b), q});
  std::vector<AltConfig> A{{f, Stack::sequence(1, {})}};
  ConfigSet cs = prestar(S, A);
  for (Ctrl c = 0; c < S.controls.size(); ++c)
    for (const StackPtr& s : order1_stacks({a, b}, 3)) {
      OracleAnswer ans = member_oracle(S, A, {c, s}, 12);
      if (ans == OracleAnswer::Yes) CHECK(cs.contains(c, s));
      if (cs.contains(c, s)) CHECK(ans == OracleAnswer::Yes);
    }
}

TEST_CASE("build_alternating: triple counts and output stripping") {
  Machine M = validate_and_normalize(parse_machine(
      "order 1; branches 1; controls q0 q1 qf; initial q0 a; final qf;"
      "outputs c1; stackalpha a b;"
      "rule q0, a -> c1, rew(b), q1;"
      "rule q1, b -> eps, pop(1), qf;"));
  AlternatingSystem S = build_alternating(M);
  CHECK(S.order == 1);
  // |Q| controls, 2^1 owed sets, |Q| singleton tuples (k = 1).
  size_t nq = M.controls.size();
  CHECK(S.controls.size() == nq * 2 * nq);
  Ctrl qf = *M.controls.find("qf");
  auto c = alt_control(S, M, *M.controls.find("q0"), {true}, {qf});
  auto t = alt_control(S, M, *M.controls.find("q1"), {false}, {qf});
  REQUIRE(c.has_value());
  REQUIRE(t.has_value());
  // The rule emits c1, so from owed {c1} it steps to owed {}.
  bool found = false;
  for (const AltOrdRule& r : S.ord)
    if (r.q == *c && r.q2 == *t && r.op.kind == StackOp::Rew) found = true;
  CHECK(found);
}

namespace {

void check_canpop_against_oracle(const Machine& M,
                                 const std::vector<StackPtr>& tops,
                                 int depth) {
  auto fam = canpop_family(M);
  REQUIRE(!fam.empty());
  for (const StackPtr& u : tops) {
    StackPtr s = Stack::sequence(M.order, {u});
    std::map<Ctrl, std::set<LeafFact>> by_ctrl;
    for (Ctrl q = 0; q < M.controls.size(); ++q)
      by_ctrl.emplace(q, canpop_search(M, q, s, depth));
    for (const auto& [key, aut] : fam) {
      const auto& kf = by_ctrl.at(key.q);
      std::vector<Ctrl> sorted = key.targets;
      std::sort(sorted.begin(), sorted.end());
      bool expect = kf.count({sorted, obits(key.O)}) > 0;
      bool got = sa_run(aut, u);
      INFO("control ", M.controls.name(key.q), " top ",
           render_stack(u, const_cast<SymTab&>(M.stackalpha)));
      CHECK(got == expect);
    }
  }
}

}  // namespace

TEST_CASE("canpop at order 1 matches the run-tree oracle") {
  Machine M = validate_and_normalize(parse_machine(
      "order 1; branches 1; controls q0 qf; initial q0 a; final qf;"
      "outputs c1; stackalpha a b;"
      "rule q0, a -> c1, pop(1), qf;"));
  std::vector<StackPtr> tops;
  for (Sym c = 0; c < M.stackalpha.size(); ++c)
    tops.push_back(Stack::character(c));
  check_canpop_against_oracle(M, tops, 8);
}

TEST_CASE("canpop at order 2 distinguishes exact output sets") {
  Machine M = validate_and_normalize(parse_machine(
      "order 2; branches 1; controls q0 qf; initial q0 a; final qf;"
      "outputs c1; stackalpha a;"
      "rule q0, a -> c1, pop(1), q0;"
      "rule q0, a -> eps, pop(2), qf;"));
  auto fam = canpop_family(M);
  CanpopKey k_exact;
  k_exact.q = *M.controls.find("q0");
  k_exact.targets = {*M.controls.find("qf")};
  k_exact.O = {true};
  CanpopKey k_silent = k_exact;
  k_silent.O = {false};
  REQUIRE(fam.count(k_exact));
  REQUIRE(fam.count(k_silent));
  Sym a = *M.stackalpha.find("a");
  auto elem = [&](int m) {
    std::vector<StackPtr> cs(m, Stack::character(a));
    return Stack::sequence(1, cs);
  };
  // One character: the pop(2) fires immediately, emitting nothing.
  CHECK(sa_run(fam.at(k_silent), elem(1)));
  CHECK_FALSE(sa_run(fam.at(k_exact), elem(1)));
  // Two or more characters: an emitting run pops some characters first, and
  // a silent run still exists (pop(2) discards the element whole).
  for (int m = 2; m <= 5; ++m) {
    CHECK(sa_run(fam.at(k_exact), elem(m)));
    CHECK(sa_run(fam.at(k_silent), elem(m)));
  }
  CHECK_FALSE(sa_run(fam.at(k_exact), elem(0)));
  std::vector<StackPtr> tops;
  for (int m = 0; m <= 4; ++m) tops.push_back(elem(m));
  check_canpop_against_oracle(M, tops, 12);
}

TEST_CASE("canpop with branching partitions obligations and outputs") {
  Machine M = validate_and_normalize(parse_machine(
      "order 1; branches 2; controls q0 l r qf; initial q0 a; final qf;"
      "rank q0=2 l=1 r=1 qf=1;"
      "outputs c1 c2; stackalpha a b;"
      "rule q0, a -> eps, rew(a), l r;"
      "rule l, a -> c1, pop(1), qf;"
      "rule r, a -> c2, pop(1), qf;"));
  std::vector<StackPtr> tops;
  for (Sym c = 0; c < M.stackalpha.size(); ++c)
    tops.push_back(Stack::character(c));
  check_canpop_against_oracle(M, tops, 8);
  auto fam = canpop_family(M);
  CanpopKey k;
  k.q = *M.controls.find("q0");
  k.targets = {*M.controls.find("qf"), *M.controls.find("qf")};
  k.O = {true, true};
  REQUIRE(fam.count(k));
  CHECK(sa_run(fam.at(k), Stack::character(*M.stackalpha.find("a"))));
  k.O = {true, false};  // both branches emit, so {c1} alone is not exact
  REQUIRE(fam.count(k));
  CHECK_FALSE(sa_run(fam.at(k), Stack::character(*M.stackalpha.find("a"))));
}

TEST_CASE("CanpopFamily validates keys and caches") {
  Machine M = validate_and_normalize(parse_machine(
      "order 1; branches 1; controls q0 qf; initial q0 a; final qf;"
      "outputs c1; stackalpha a;"
      "rule q0, a -> c1, pop(1), qf;"));
  CanpopFamily fam(M);
  CanpopKey bad;
  bad.q = 0;
  bad.targets = {0, 0};  // two leaves but k = 1
  bad.O = {false};
  CHECK_FALSE(fam.key_valid(bad));
  CHECK_THROWS_AS(fam.get(bad), InputError);
  CanpopKey good;
  good.q = *M.controls.find("q0");
  good.targets = {*M.controls.find("qf")};
  good.O = {true};
  const StackAutomaton& a1 = fam.get(good);
  const StackAutomaton& a2 = fam.get(good);
  CHECK(&a1 == &a2);
  CHECK(fam.keys_built() == 1);
}
