#include "reduce.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "errors.hpp"

namespace hopda {

namespace {

int rank_sum(const Machine& M, const std::vector<Ctrl>& ts) {
  int s = 0;
  for (Ctrl t : ts) s += M.rank[t];
  return s;
}

// All assignments of `items` indexed things onto `parts` slots such that
// every slot receives at least one thing, in lexicographic order.
std::vector<std::vector<int>> surjections(int items, int parts) {
  std::vector<std::vector<int>> out;
  if (parts > items || parts < 1) return out;
  std::vector<int> asg(items, 0);
  while (true) {
    uint32_t hit = 0;
    for (int v : asg) hit |= 1u << v;
    if (hit == (1u << parts) - 1) out.push_back(asg);
    int i = items - 1;
    while (i >= 0 && asg[i] == parts - 1) asg[i--] = 0;
    if (i < 0) break;
    ++asg[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// build_simulator

struct SimBuilder {
  const Machine& M;
  CanpopFamily& fam;
  const int n;         // order of M
  const uint32_t nch;  // tracked characters
  const uint32_t full;
  Machine S;

  struct Quad {
    Ctrl q;
    std::vector<Ctrl> ts;  // sorted, 1..k
    uint32_t ob, bb;       // owed set / responsibility set, disjoint
  };
  std::map<std::tuple<Ctrl, std::vector<Ctrl>, uint32_t, uint32_t>, Ctrl>
      quad_ids;
  std::vector<std::pair<Ctrl, Quad>> worklist;
  size_t done = 0;

  Ctrl init_c = 0, fin_c = 0;
  std::map<CanpopKey, uint32_t> test_ids;

  using OpKey = std::tuple<int, Sym, int>;
  using CRule = std::tuple<Ctrl, Sym, std::vector<uint32_t>, uint32_t, OpKey,
                           std::vector<Ctrl>>;
  std::set<CRule> crules;

  // Obligation tuples only ever contain controls entered by a pop at the
  // outermost level (every leaf of a stack-emptying subtree arrives by one),
  // so the guessed pop controls range over these.
  std::vector<Ctrl> pop_targets;
  std::map<Sym, std::vector<size_t>> rules_by_source;

  SimBuilder(const Machine& m, CanpopFamily& f)
      : M(m),
        fam(f),
        n(m.order),
        nch(static_cast<uint32_t>(m.outputs.size())),
        full(nch ? (1u << nch) - 1 : 0) {}

  std::string charset_name(uint32_t bits) const {
    std::string s;
    for (uint32_t c = 0; c < nch; ++c)
      if (bits & (1u << c)) {
        if (!s.empty()) s += '.';
        s += M.outputs.name(c);
      }
    return s;
  }

  Ctrl intern_quad(Ctrl q, std::vector<Ctrl> ts, uint32_t ob, uint32_t bb) {
    std::sort(ts.begin(), ts.end());
    auto key = std::make_tuple(q, ts, ob, bb);
    auto it = quad_ids.find(key);
    if (it != quad_ids.end()) return it->second;
    std::string name = "<" + M.controls.name(q) + "|";
    for (size_t i = 0; i < ts.size(); ++i)
      name += (i ? "." : "") + M.controls.name(ts[i]);
    name += "|" + charset_name(ob) + "|" + charset_name(bb) + ">";
    Ctrl id = S.controls.intern(name);
    S.rank.push_back(std::max(1, std::popcount(bb)));
    quad_ids.emplace(key, id);
    worklist.push_back({id, Quad{q, std::move(ts), ob, bb}});
    return id;
  }

  // Registers the canpop automaton for (q, ts, obits); ts sorted by caller.
  uint32_t test_id(Ctrl q, const std::vector<Ctrl>& ts, uint32_t obits) {
    CanpopKey key;
    key.q = q;
    key.targets = ts;
    key.O.assign(nch, false);
    for (uint32_t c = 0; c < nch; ++c)
      if (obits & (1u << c)) key.O[c] = true;
    auto it = test_ids.find(key);
    if (it != test_ids.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(S.tests.size());
    S.tests.push_back(fam.get(key));
    std::string tn = "cp_" + M.controls.name(q);
    for (Ctrl t : ts) tn += "_" + M.controls.name(t);
    tn += "_" + charset_name(obits);
    S.test_names.push_back(tn);
    test_ids.emplace(std::move(key), id);
    return id;
  }

  bool key_ok(Ctrl q, const std::vector<Ctrl>& ts, uint32_t obits) {
    CanpopKey key;
    key.q = q;
    key.targets = ts;
    key.O.assign(nch, false);
    for (uint32_t c = 0; c < nch; ++c)
      if (obits & (1u << c)) key.O[c] = true;
    return fam.key_valid(key);
  }

  void add_crule(Ctrl src, Sym guard, std::vector<uint32_t> tests,
                 uint32_t outbits, const StackOp& op,
                 std::vector<Ctrl> targets) {
    std::sort(tests.begin(), tests.end());
    tests.erase(std::unique(tests.begin(), tests.end()), tests.end());
    std::sort(targets.begin(), targets.end());
    crules.insert({src, guard, std::move(tests), outbits,
                   OpKey{op.kind, op.ch, op.level}, std::move(targets)});
  }

  // Shared expansion of branching situations.  `roots` are the controls at
  // the roots of the sibling branches; obligations are distributed over
  // them, each branch is either explored (a child control) or delegated to
  // a canpop test.  mode: 0 = branching rule, 1 = push(n) (an extra child
  // simulates the pushed copy), 2 = pop(n) view of a push rule (the pushed
  // copy is delegated to an extra test).  `pq` is the control after the
  // push for modes 1 and 2.
  void expand_branching(Ctrl sid, const Quad& src, Sym a,
                        const std::vector<Ctrl>& roots, int mode, Ctrl pq) {
    const int m = static_cast<int>(src.ts.size());
    const int alpha = static_cast<int>(roots.size());
    if (alpha > m || alpha < 1) return;
    std::vector<Ctrl> sroots = roots;
    std::sort(sroots.begin(), sroots.end());
    if (mode == 2 && !key_ok(pq, sroots, 0) && !key_ok(pq, sroots, full))
      return;  // no rank-valid test for the pushed copy at all

    const int oslots = alpha + (mode != 0 ? 1 : 0);
    if (nch > 0 && oslots * static_cast<int>(nch) > 24)
      throw BudgetError("simulate",
                        "output-set distribution space too large");
    std::vector<uint32_t> bbits;
    for (uint32_t c = 0; c < nch; ++c)
      if (src.bb & (1u << c)) bbits.push_back(1u << c);

    for (const auto& asg : surjections(m, alpha)) {
      std::vector<std::vector<Ctrl>> parts(alpha);
      for (int i = 0; i < m; ++i) parts[asg[i]].push_back(src.ts[i]);
      for (auto& p : parts) std::sort(p.begin(), p.end());

      for (uint32_t emask = 0; emask < (1u << alpha); ++emask) {
        std::vector<int> xs, ys;
        for (int t = 0; t < alpha; ++t)
          (emask & (1u << t) ? xs : ys).push_back(t);
        if (mode != 1 && xs.empty()) continue;  // need at least one target
        const int bslots = static_cast<int>(xs.size()) + (mode == 1 ? 1 : 0);

        // Responsibility distributions: disjoint, all slots nonempty
        // (forced by the rank condition), except the all-empty case.
        std::vector<std::vector<uint32_t>> bdists;
        if (src.bb == 0) {
          if (bslots == 1) bdists.push_back({0});
        } else {
          for (const auto& ba :
               surjections(static_cast<int>(bbits.size()), bslots)) {
            std::vector<uint32_t> slots(bslots, 0);
            for (size_t i = 0; i < bbits.size(); ++i) slots[ba[i]] |= bbits[i];
            bdists.push_back(std::move(slots));
          }
        }
        if (bdists.empty()) continue;

        const uint64_t olim = nch ? (1ull << (oslots * nch)) : 1;
        for (uint64_t om = 0; om < olim; ++om) {
          auto oset = [&](int slot) -> uint32_t {
            return nch ? static_cast<uint32_t>(om >> (slot * nch)) & full : 0;
          };
          uint32_t uni = 0;
          for (int t = 0; t < oslots; ++t) uni |= oset(t);
          if ((uni & src.ob) != src.ob) continue;  // owed set must be covered

          // Tests for the delegated branches (independent of B-split).
          std::vector<uint32_t> tests;
          bool ok = true;
          if (mode == 2) {
            if (!key_ok(pq, sroots, oset(alpha))) continue;
            tests.push_back(test_id(pq, sroots, oset(alpha)));
          }
          for (int y : ys) {
            if (!key_ok(roots[y], parts[y], oset(y))) {
              ok = false;
              break;
            }
            tests.push_back(test_id(roots[y], parts[y], oset(y)));
          }
          if (!ok) continue;

          for (const auto& bd : bdists) {
            std::vector<Ctrl> targets;
            bool good = true;
            size_t bi = 0;
            if (mode == 1) {
              uint32_t b0 = bd[bi++];
              uint32_t o0 = oset(alpha);
              if (o0 & b0) continue;
              targets.push_back(intern_quad(pq, sroots, o0, b0));
            }
            for (int x : xs) {
              uint32_t bx = bd[bi++];
              uint32_t ox = oset(x);
              if (ox & bx) {
                good = false;
                break;
              }
              targets.push_back(intern_quad(roots[x], parts[x], ox, bx));
            }
            if (!good) continue;
            add_crule(sid, a, tests, uni & src.bb, StackOp::rew(a),
                      std::move(targets));
          }
        }
      }
    }
  }

  void process(Ctrl sid, const Quad& src) {
    auto it = rules_by_source.find(src.q);
    if (it == rules_by_source.end()) return;
    for (size_t ri : it->second) {
      const Rule& r = M.rules[ri];
      const bool outermost = r.op.kind != StackOp::Rew && r.op.level == n;
      if (outermost && r.op.kind == StackOp::Pop) {
        // fin: the run of the simulated branch can be finished here.
        if (src.ts.size() == 1 && src.ts[0] == r.targets[0] && src.ob == 0)
          add_crule(sid, r.guard, {}, 0, StackOp::rew(r.guard), {fin_c});
        continue;
      }
      if (outermost) {  // push(n): explore the copy, or delegate it
        const int m = static_cast<int>(src.ts.size());
        std::vector<Ctrl> roots;
        std::function<void(size_t, Ctrl)> rec = [&](size_t need, Ctrl lo) {
          if (need == 0) {
            expand_branching(sid, src, r.guard, roots, 1, r.targets[0]);
            expand_branching(sid, src, r.guard, roots, 2, r.targets[0]);
            return;
          }
          for (size_t i = lo; i < pop_targets.size(); ++i) {
            roots.push_back(pop_targets[i]);
            rec(need - 1, static_cast<Ctrl>(i));
            roots.pop_back();
          }
        };
        for (int alpha = 1; alpha <= m; ++alpha) rec(alpha, 0);
        continue;
      }
      if (r.targets.size() >= 2) {  // branching (silent, stack-preserving)
        expand_branching(sid, src, r.guard, r.targets, 0, 0);
        continue;
      }
      // sim: faithful simulation of an inner operation.
      uint32_t obit =
          r.out == EPS ? 0 : (1u << static_cast<uint32_t>(r.out));
      Ctrl tq = intern_quad(r.targets[0], src.ts, src.ob & ~obit, src.bb);
      add_crule(sid, r.guard, {}, obit & src.bb, r.op, {tq});
    }
  }

  Machine build() {
    S.order = n - 1;
    S.branches = std::max(1u, nch);
    S.outputs = M.outputs;
    S.stackalpha = M.stackalpha;
    S.initial_char = M.initial_char;
    S.normalized = false;

    for (size_t i = 0; i < M.rules.size(); ++i) {
      rules_by_source[M.rules[i].q].push_back(i);
      const Rule& r = M.rules[i];
      if (r.op.kind == StackOp::Pop && r.op.level == n)
        pop_targets.push_back(r.targets[0]);
    }
    std::sort(pop_targets.begin(), pop_targets.end());
    pop_targets.erase(std::unique(pop_targets.begin(), pop_targets.end()),
                      pop_targets.end());

    init_c = S.controls.intern("__si");
    S.rank.push_back(std::max(1u, nch));
    fin_c = S.controls.intern("__sf");
    S.rank.push_back(1);
    S.initial = init_c;
    S.finals = {fin_c};

    // init: guess how many branches the run needs.
    const Ctrl qf = M.finals.at(0);
    for (int len = 1; len <= M.branches; ++len) {
      std::vector<Ctrl> ts(len, qf);
      Ctrl tq = intern_quad(M.initial, ts, 0, full);
      add_crule(init_c, M.initial_char, {}, 0, StackOp::rew(M.initial_char),
                {tq});
    }
    // The final control silently empties whatever stack is left.
    if (S.order >= 1)
      for (Sym a = 0; a < M.stackalpha.size(); ++a)
        add_crule(fin_c, a, {}, 0, StackOp::pop(S.order), {fin_c});

    while (done < worklist.size()) {
      auto [sid, q] = worklist[done++];
      process(sid, q);
    }

    // Materialize: output sets become chains of single-output rules.
    int chain = 0;
    for (const CRule& c : crules) {
      const auto& [src, guard, tests, outbits, opk, targets] = c;
      StackOp op{static_cast<StackOp::Kind>(std::get<0>(opk)),
                 std::get<1>(opk), std::get<2>(opk)};
      std::vector<Out> outs;
      for (uint32_t ch = 0; ch < nch; ++ch)
        if (outbits & (1u << ch)) outs.push_back(static_cast<Out>(ch));
      if (outs.size() <= 1) {
        S.rules.push_back(Rule{src, guard, tests,
                               outs.empty() ? EPS : outs[0], op, targets});
        continue;
      }
      int tr = 0;
      for (Ctrl t : targets) tr += S.rank[t];
      Ctrl prev = src;
      std::vector<uint32_t> first_tests = tests;
      for (size_t i = 0; i + 1 < outs.size(); ++i) {
        Ctrl next = S.controls.intern("__so" + std::to_string(chain++));
        S.rank.push_back(std::max(1, tr));
        S.rules.push_back(Rule{prev, guard, i == 0 ? first_tests
                                                   : std::vector<uint32_t>{},
                               outs[i], StackOp::rew(guard), {next}});
        prev = next;
      }
      S.rules.push_back(Rule{prev, guard, {}, outs.back(), op, targets});
    }
    return std::move(S);
  }
};

}  // namespace

Machine build_simulator(const Machine& M, CanpopFamily& family) {
  if (!M.normalized)
    throw InputError("build_simulator: machine must be normalized");
  if (M.order < 1) throw InputError("build_simulator: order must be >= 1");
  if (!M.tests.empty())
    throw InputError("build_simulator: machine must be test-free");
  SimBuilder b(M, family);
  return b.build();
}

// ---------------------------------------------------------------------------
// remove_tests

namespace {

// Annotation layout: for each registered test i, for each level l in 1..N,
// one function S_i -> S_i, flattened into a single vector.  f_l summarizes
// the automaton's run over the level-l segment of the linearization lying
// below the top character (the wrapped constituents below the top order-l
// part, brackets of enclosing levels excluded).
struct TestRemover {
  const Machine& M;
  const int N;
  const size_t T;
  const uint64_t cap;
  Machine R;

  std::vector<size_t> off, sz;  // per test: offset into flat vector, |S_i|
  size_t flat_len = 0;

  std::vector<std::pair<Sym, std::vector<SAState>>> chars;  // new Sym -> def
  std::map<std::pair<Sym, std::vector<SAState>>, Sym> char_ids;
  size_t processed = 0;

  struct PopInter {
    Ctrl ctrl;
    int level;
    std::vector<SAState> suffix;  // levels level+1..N of the popped char
    std::vector<Ctrl> targets;
  };
  std::vector<PopInter> inters;
  std::map<std::tuple<int, std::vector<SAState>, std::vector<Ctrl>>, size_t>
      inter_ids;

  std::map<Sym, std::vector<size_t>> rules_by_guard;

  TestRemover(const Machine& m, uint64_t cap_)
      : M(m), N(m.order), T(m.tests.size()), cap(cap_) {}

  SAState fn(const std::vector<SAState>& F, size_t i, int l, SAState s) const {
    return F[off[i] + static_cast<size_t>(l - 1) * sz[i] + s];
  }
  SAState& fn(std::vector<SAState>& F, size_t i, int l, SAState s) const {
    return F[off[i] + static_cast<size_t>(l - 1) * sz[i] + s];
  }

  bool test_accepts(size_t i, Sym a, const std::vector<SAState>& F) const {
    const StackAutomaton& A = M.tests[i];
    SAState t = A.init;
    for (int l = N; l >= 2; --l) {
      t = fn(F, i, l, t);
      t = A.next(t, letter_close(l - 1));
    }
    t = fn(F, i, 1, t);
    t = A.next(t, letter_char(a));
    for (int l = 1; l <= N - 1; ++l) t = A.next(t, letter_open(l));
    return A.is_final(t);
  }

  // push(j) duplicates the top order-(j-1) part: the level-j segment of the
  // copy's top character additionally covers the original part, read in
  // full below the old segment.
  std::vector<SAState> push_update(const std::vector<SAState>& F, Sym a,
                                   int j) const {
    std::vector<SAState> G = F;
    for (size_t i = 0; i < T; ++i) {
      const StackAutomaton& A = M.tests[i];
      for (SAState s = 0; s < sz[i]; ++s) {
        SAState t = fn(F, i, j, s);
        for (int l = j - 1; l >= 1; --l) {
          t = A.next(t, letter_close(l));
          t = fn(F, i, l, t);
        }
        t = A.next(t, letter_char(a));
        for (int l = 1; l <= j - 1; ++l) t = A.next(t, letter_open(l));
        fn(G, i, j, s) = t;
      }
    }
    return G;
  }

  Sym intern_char(Sym base, std::vector<SAState> F) {
    auto key = std::make_pair(base, std::move(F));
    auto it = char_ids.find(key);
    if (it != char_ids.end()) return it->second;
    if (chars.size() >= cap)
      throw BudgetError("annotate", "annotated-character cap exhausted");
    Sym id = R.stackalpha.intern(M.stackalpha.name(base) + "@" +
                                 std::to_string(chars.size()));
    chars.push_back(key);
    char_ids.emplace(std::move(key), id);
    // Every pop intermediate needs a merge rule for the new character.
    for (size_t p = 0; p < inters.size(); ++p) add_merge(p, id);
    return id;
  }

  void add_merge(size_t p, Sym cid) {
    const PopInter& pi = inters[p];
    const auto& [base, G] = chars[cid];
    std::vector<SAState> merged = G;
    for (size_t i = 0; i < T; ++i)
      for (int l = pi.level + 1; l <= N; ++l)
        for (SAState s = 0; s < sz[i]; ++s)
          fn(merged, i, l, s) = fn(pi.suffix, i, l, s);
    Sym m = intern_char(base, std::move(merged));
    R.rules.push_back(
        Rule{pi.ctrl, cid, {}, EPS, StackOp::rew(m), pi.targets});
  }

  size_t intern_inter(int level, std::vector<SAState> suffix,
                      const std::vector<Ctrl>& targets) {
    auto key = std::make_tuple(level, suffix, targets);
    auto it = inter_ids.find(key);
    if (it != inter_ids.end()) return it->second;
    size_t p = inters.size();
    Ctrl c = R.controls.intern("__tp" + std::to_string(p));
    R.rank.push_back(std::max(1, rank_sum(M, targets)));
    inters.push_back(PopInter{c, level, std::move(suffix), targets});
    inter_ids.emplace(std::move(key), p);
    for (size_t cid = 0; cid < chars.size(); ++cid)
      add_merge(p, static_cast<Sym>(cid));
    return p;
  }

  void process(Sym cid) {
    const auto [base, F] = chars[cid];  // copy: chars may reallocate
    auto it = rules_by_guard.find(base);
    if (it == rules_by_guard.end()) return;
    for (size_t ri : it->second) {
      const Rule& r = M.rules[ri];
      bool ok = true;
      for (uint32_t t : r.tests)
        if (!test_accepts(t, base, F)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      switch (r.op.kind) {
        case StackOp::Rew: {
          Sym b = intern_char(r.op.ch, F);
          R.rules.push_back(
              Rule{r.q, cid, {}, r.out, StackOp::rew(b), r.targets});
          break;
        }
        case StackOp::Push: {
          Sym c2 = intern_char(base, push_update(F, base, r.op.level));
          Ctrl p = R.controls.intern("__tq" + std::to_string(R.rules.size()));
          R.rank.push_back(std::max(1, rank_sum(M, r.targets)));
          R.rules.push_back(Rule{r.q, cid, {}, r.out, r.op, {p}});
          R.rules.push_back(
              Rule{p, cid, {}, EPS, StackOp::rew(c2), r.targets});
          break;
        }
        case StackOp::Pop: {
          if (r.op.level == N) {
            // The exposed character's own annotation is already correct.
            R.rules.push_back(Rule{r.q, cid, {}, r.out, r.op, r.targets});
            break;
          }
          std::vector<SAState> suffix(flat_len, 0);
          for (size_t i = 0; i < T; ++i)
            for (int l = r.op.level + 1; l <= N; ++l)
              for (SAState s = 0; s < sz[i]; ++s)
                fn(suffix, i, l, s) = fn(F, i, l, s);
          size_t p = intern_inter(r.op.level, std::move(suffix), r.targets);
          R.rules.push_back(
              Rule{r.q, cid, {}, r.out, r.op, {inters[p].ctrl}});
          break;
        }
      }
    }
  }

  Machine run() {
    R.order = M.order;
    R.branches = M.branches;
    R.controls = M.controls;
    R.outputs = M.outputs;
    R.initial = M.initial;
    R.finals = M.finals;
    R.rank = M.rank;
    R.normalized = false;

    for (size_t i = 0; i < M.rules.size(); ++i)
      rules_by_guard[M.rules[i].guard].push_back(i);

    off.resize(T);
    sz.resize(T);
    for (size_t i = 0; i < T; ++i) {
      off[i] = flat_len;
      sz[i] = M.tests[i].n_states;
      flat_len += static_cast<size_t>(N) * sz[i];
    }
    // Initial character: all segments below the top character are empty,
    // every transformer is the identity.
    std::vector<SAState> id0(flat_len, 0);
    for (size_t i = 0; i < T; ++i)
      for (int l = 1; l <= N; ++l)
        for (SAState s = 0; s < sz[i]; ++s) fn(id0, i, l, s) = s;
    R.initial_char = intern_char(M.initial_char, std::move(id0));

    while (processed < chars.size()) process(static_cast<Sym>(processed++));
    return std::move(R);
  }
};

}  // namespace

Machine remove_tests(const Machine& M, uint64_t annotation_cap) {
  if (M.tests.empty()) {
    Machine R = M;
    R.normalized = false;
    return R;
  }
  if (M.order == 0) {
    // The whole stack is the guard character: evaluate tests directly.
    Machine R = M;
    R.rules.clear();
    for (const Rule& r : M.rules) {
      bool ok = true;
      StackPtr s = Stack::character(r.guard);
      for (uint32_t t : r.tests)
        if (!sa_run(M.tests[t], s)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      Rule r2 = r;
      r2.tests.clear();
      R.rules.push_back(std::move(r2));
    }
    R.tests.clear();
    R.test_names.clear();
    R.normalized = false;
    return R;
  }
  TestRemover tr(M, annotation_cap);
  return tr.run();
}

// ---------------------------------------------------------------------------
// reduce_once / decide_diagonal

Machine reduce_once(const Machine& Min, const ReduceBudgets& budgets,
                    LevelStats* stats) {
  auto t0 = std::chrono::steady_clock::now();
  Machine M = Min.normalized ? Min : validate_and_normalize(Min);
  if (M.order < 1) throw InputError("reduce_once: machine has order 0");
  if (!M.tests.empty())
    throw InputError("reduce_once: machine must be test-free");
  CanpopFamily fam(M, budgets.saturation);
  // Pruning between the stages is a pure size optimization: the simulator
  // enumerates its control tuples combinatorially and annotation multiplies
  // what is left, so dead controls compound.
  Machine S = prune_machine(build_simulator(M, fam));
  Machine T = remove_tests(S, budgets.annotation);
  Machine R = prune_machine(validate_and_normalize(T));
  if (stats) {
    stats->order = R.order;
    stats->controls = R.controls.size();
    stats->rules = R.rules.size();
    stats->canpop_keys = fam.keys_built();
    stats->wall_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - t0)
            .count();
  }
  return R;
}

Machine restrict_outputs(const Machine& M,
                         const std::vector<std::string>& chars) {
  if (chars.empty()) throw InputError("no tracked characters given");
  Machine R = M;
  R.outputs = SymTab{};
  std::vector<Out> remap(M.outputs.size(), EPS);
  for (const std::string& name : chars) {
    auto id = M.outputs.find(name);
    if (!id) throw InputError("unknown output character: " + name);
    if (R.outputs.find(name))
      throw InputError("duplicate output character: " + name);
    remap[*id] = static_cast<Out>(R.outputs.intern(name));
  }
  for (Rule& r : R.rules)
    r.out = r.out == EPS ? EPS : remap[static_cast<size_t>(r.out)];
  R.normalized = false;
  return R;
}

DecideResult decide_diagonal(const Machine& M,
                             const std::vector<std::string>& chars,
                             const ReduceBudgets& budgets) {
  DecideResult res;
  res.chars = chars;
  Machine cur = validate_and_normalize(restrict_outputs(M, chars));
  while (cur.order > 0) {
    LevelStats st;
    try {
      cur = reduce_once(cur, budgets, &st);
    } catch (const BudgetError& e) {
      throw BudgetError(e.where, std::string(e.what()) +
                                     " (while reducing from order " +
                                     std::to_string(cur.order) + ")");
    }
    res.levels.push_back(st);
  }
  if (res.levels.empty()) {
    // Order-0 input: no reduction ran, but the report still carries the
    // level-0 statistics.
    LevelStats st;
    st.order = 0;
    st.controls = cur.controls.size();
    st.rules = cur.rules.size();
    res.levels.push_back(st);
  }
  res.nfa = linearize0(cur);
  std::vector<Out> all;
  for (size_t c = 0; c < cur.outputs.size(); ++c)
    all.push_back(static_cast<Out>(c));
  res.unbounded = nfa_diagonal(res.nfa, all, &res.witness);
  return res;
}

}  // namespace hopda
