#include "machine.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

namespace hopda {

std::string Machine::describe_rule(size_t i) const {
  const Rule& r = rules[i];
  std::ostringstream os;
  os << "rule #" << i << " (" << controls.name(r.q) << ", "
     << stackalpha.name(r.guard) << " -> ";
  os << (r.out == EPS ? std::string("eps") : outputs.name(r.out)) << ", ";
  switch (r.op.kind) {
    case StackOp::Rew: os << "rew(" << stackalpha.name(r.op.ch) << ")"; break;
    case StackOp::Push: os << "push(" << r.op.level << ")"; break;
    case StackOp::Pop: os << "pop(" << r.op.level << ")"; break;
  }
  os << ",";
  for (Ctrl t : r.targets) os << " " << controls.name(t);
  os << ")";
  return os.str();
}

bool leaf_accepting(const Machine& M, const Config& c) {
  if (!M.is_final(c.q)) return false;
  if (M.order == 0) return true;
  return c.stack->elems.empty();
}

std::vector<Step> step(const Machine& M, const Config& c) {
  std::vector<Step> out;
  auto a = top_char(c.stack);
  if (!a) return out;
  for (uint32_t i = 0; i < M.rules.size(); ++i) {
    const Rule& r = M.rules[i];
    if (r.q != c.q || r.guard != *a) continue;
    bool tests_ok = true;
    for (uint32_t t : r.tests)
      if (!sa_run(M.tests[t], c.stack)) {
        tests_ok = false;
        break;
      }
    if (!tests_ok) continue;
    auto next = apply_op(r.op, c.stack);
    if (!next) continue;  // blocked
    out.push_back(Step{i, r.out, *next});
  }
  return out;
}

namespace {

Ctrl fresh_control(Machine& M, const std::string& base, int rk) {
  std::string name = base;
  int suffix = 0;
  while (M.controls.find(name)) name = base + "_" + std::to_string(suffix++);
  Ctrl c = M.controls.intern(name);
  M.rank.resize(M.controls.size(), 1);
  M.rank[c] = rk;
  return c;
}

int rank_sum(const Machine& M, const std::vector<Ctrl>& ts) {
  int s = 0;
  for (Ctrl t : ts) s += M.rank[t];
  return s;
}

}  // namespace

Machine validate_and_normalize(const Machine& in) {
  Machine M = in;
  // -- structural checks -------------------------------------------------
  if (M.order < 0) throw InputError("negative order");
  if (M.branches < 1) throw InputError("branch bound must be >= 1");
  if (M.rank.size() != M.controls.size())
    throw InputError("rank map does not cover all controls");
  for (size_t q = 0; q < M.rank.size(); ++q)
    if (M.rank[q] < 1 || M.rank[q] > M.branches)
      throw InputError("rank of control " + M.controls.name(q) +
                       " outside 1.." + std::to_string(M.branches));
  if (M.finals.empty()) throw InputError("no final control");
  for (const auto& A : M.tests)
    if (A.order != M.order)
      throw InputError("test automaton order differs from machine order");
  for (size_t i = 0; i < M.rules.size(); ++i) {
    const Rule& r = M.rules[i];
    if (r.targets.empty() ||
        static_cast<int>(r.targets.size()) > M.branches)
      throw InputError(M.describe_rule(i) + ": target count outside 1..k");
    for (uint32_t t : r.tests)
      if (t >= M.tests.size())
        throw InputError(M.describe_rule(i) + ": dangling test reference");
    if (r.op.kind != StackOp::Rew &&
        (r.op.level < 1 || r.op.level > M.order))
      throw InputError(M.describe_rule(i) + ": op level outside 1..order");
    if (M.rank[r.q] < rank_sum(M, r.targets))
      throw InputError("RankViolation: " + M.describe_rule(i));
  }

  // -- normal form: branching rules are silent and stack-preserving ------
  std::vector<Rule> rules;
  for (const Rule& r : M.rules) {
    bool branching_ok = r.targets.size() == 1 ||
                        (r.out == EPS && r.op.kind == StackOp::Rew &&
                         r.op.ch == r.guard);
    if (branching_ok) {
      rules.push_back(r);
      continue;
    }
    // Split: first perform output+op into a fresh control, then branch
    // silently (guard depends on what the op exposed).
    Ctrl p = fresh_control(M, "__br", rank_sum(M, r.targets));
    Rule first = r;
    first.targets = {p};
    rules.push_back(first);
    std::vector<Sym> guards;
    if (r.op.kind == StackOp::Rew)
      guards = {r.op.ch};
    else if (r.op.kind == StackOp::Push)
      guards = {r.guard};
    else  // pop exposes an unknown character
      for (Sym b = 0; b < M.stackalpha.size(); ++b) guards.push_back(b);
    for (Sym b : guards)
      rules.push_back(Rule{p, b, {}, EPS, StackOp::rew(b), r.targets});
  }
  M.rules = std::move(rules);

  // -- normal form: push_n / pop_n rules are silent ----------------------
  rules.clear();
  for (const Rule& r : M.rules) {
    bool outermost = r.op.kind != StackOp::Rew && r.op.level == M.order;
    if (!outermost || r.out == EPS) {
      rules.push_back(r);
      continue;
    }
    Ctrl p = fresh_control(M, "__op", rank_sum(M, r.targets));
    rules.push_back(Rule{r.q, r.guard, r.tests, r.out, StackOp::rew(r.guard),
                         {p}});
    rules.push_back(Rule{p, r.guard, {}, EPS, r.op, r.targets});
  }
  M.rules = std::move(rules);

  // -- unique final control with no outgoing rules -----------------------
  bool final_ok = M.finals.size() == 1;
  if (final_ok)
    for (const Rule& r : M.rules)
      if (r.q == M.finals[0]) final_ok = false;
  if (!final_ok) {
    Ctrl qf = fresh_control(M, "__qf", 1);
    // Any rule that may end a branch at an old final gets copies with those
    // target positions redirected to the fresh final; this preserves the
    // accepting runs exactly.
    size_t n = M.rules.size();
    for (size_t i = 0; i < n; ++i) {
      const Rule r = M.rules[i];
      std::vector<size_t> fpos;
      for (size_t j = 0; j < r.targets.size(); ++j)
        if (M.is_final(r.targets[j])) fpos.push_back(j);
      if (fpos.empty()) continue;
      for (uint32_t mask = 1; mask < (1u << fpos.size()); ++mask) {
        Rule copy = r;
        for (size_t b = 0; b < fpos.size(); ++b)
          if (mask & (1u << b)) copy.targets[fpos[b]] = qf;
        M.rules.push_back(std::move(copy));
      }
    }
    if (M.is_final(M.initial)) {
      // An immediately-accepting initial configuration stays accepting:
      // make the fresh final the initial control's alias via a silent rule.
      // (Only possible at order 0, where the initial stack can be a leaf.)
      if (M.order == 0)
        throw InputError(
            "order-0 machine whose initial control is final and has "
            "outgoing rules is not supported by normalization");
    }
    M.finals = {qf};
  }

  // -- re-check the rank condition on the final rule set -----------------
  for (size_t i = 0; i < M.rules.size(); ++i)
    if (M.rank[M.rules[i].q] < rank_sum(M, M.rules[i].targets))
      throw InputError("RankViolation after normalization: " +
                       M.describe_rule(i));
  M.normalized = true;
  return M;
}

// ---------------------------------------------------------------------------
// Bounded enumeration.

namespace {

struct Enumerator {
  const Machine& M;
  uint32_t cap;
  uint64_t budget;
  std::unordered_map<StackPtr, uint32_t, StackPtrHash, StackPtrEq> stack_ids;
  std::vector<StackPtr> stacks;
  std::map<std::pair<Ctrl, uint32_t>, std::vector<Step>> steps_memo;
  std::map<std::tuple<Ctrl, uint32_t, int>, std::set<ParikhVec>> memo;

  uint32_t intern(const StackPtr& s) {
    auto [it, fresh] = stack_ids.try_emplace(s, stacks.size());
    if (fresh) stacks.push_back(s);
    return it->second;
  }
  void spend() {
    if (budget == 0)
      throw BudgetError("enumerate", "enumeration node budget exhausted");
    --budget;
  }
  const std::vector<Step>& steps_at(Ctrl q, uint32_t sid) {
    auto it = steps_memo.find({q, sid});
    if (it != steps_memo.end()) return it->second;
    auto v = step(M, Config{q, stacks[sid]});
    return steps_memo.emplace(std::make_pair(q, sid), std::move(v))
        .first->second;
  }
  ParikhVec add(const ParikhVec& a, const ParikhVec& b) const {
    ParikhVec r(a.size());
    for (size_t i = 0; i < a.size(); ++i)
      r[i] = std::min<uint64_t>(cap, uint64_t(a[i]) + b[i]);
    return r;
  }
  const std::set<ParikhVec>& vectors(Ctrl q, uint32_t sid, int depth) {
    auto key = std::make_tuple(q, sid, depth);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    spend();
    std::set<ParikhVec> out;
    size_t nouts = M.outputs.size();
    if (leaf_accepting(M, Config{q, stacks[sid]}))
      out.insert(ParikhVec(nouts, 0));
    if (depth > 0) {
      for (const Step& st : steps_at(q, sid)) {
        const Rule& r = M.rules[st.rule];
        uint32_t child_sid = intern(st.stack);
        // Cross-product of the children's vector sets, then add the output.
        std::set<ParikhVec> acc;
        acc.insert(ParikhVec(nouts, 0));
        bool dead = false;
        for (Ctrl t : r.targets) {
          const auto& child = vectors(t, child_sid, depth - 1);
          if (child.empty()) {
            dead = true;
            break;
          }
          std::set<ParikhVec> next;
          for (const auto& a : acc)
            for (const auto& b : child) next.insert(add(a, b));
          acc = std::move(next);
        }
        if (dead) continue;
        ParikhVec emitted(nouts, 0);
        if (st.out != EPS) emitted[st.out] = 1;
        for (const auto& v : acc) out.insert(add(v, emitted));
      }
    }
    return memo.emplace(key, std::move(out)).first->second;
  }
};

}  // namespace

std::set<ParikhVec> enumerate_parikh(const Machine& M, int depth_bound,
                                     uint32_t count_cap,
                                     uint64_t node_budget) {
  Enumerator e{M, count_cap, node_budget, {}, {}, {}, {}};
  uint32_t sid = e.intern(M.initial_stack());
  return e.vectors(M.initial, sid, depth_bound);
}

// ---------------------------------------------------------------------------
// Concrete run trees.

namespace {

RunTreePtr clone_tree(const RunTree& t) {
  auto c = std::make_unique<RunTree>();
  c->q = t.q;
  c->stack = t.stack;
  c->rule = t.rule;
  c->out = t.out;
  for (const auto& ch : t.children) c->children.push_back(clone_tree(*ch));
  return c;
}

struct RunSearch {
  const Machine& M;
  size_t limit;  // per-configuration cap on collected subtrees
  uint64_t budget;

  void spend() {
    if (budget == 0)
      throw BudgetError("enumerate", "run search node budget exhausted");
    --budget;
  }

  std::vector<RunTreePtr> search(Ctrl q, const StackPtr& s, int depth) {
    spend();
    std::vector<RunTreePtr> out;
    if (leaf_accepting(M, Config{q, s})) {
      auto leaf = std::make_unique<RunTree>();
      leaf->q = q;
      leaf->stack = s;
      out.push_back(std::move(leaf));
    }
    if (depth == 0) return out;
    for (const Step& st : step(M, Config{q, s})) {
      if (out.size() >= limit) break;
      const Rule& r = M.rules[st.rule];
      // Subtree lists per child, combined as a cross product.
      std::vector<std::vector<RunTreePtr>> per_child;
      bool dead = false;
      for (Ctrl t : r.targets) {
        auto sub = search(t, st.stack, depth - 1);
        if (sub.empty()) {
          dead = true;
          break;
        }
        per_child.push_back(std::move(sub));
      }
      if (dead) continue;
      std::vector<size_t> idx(per_child.size(), 0);
      for (;;) {
        auto node = std::make_unique<RunTree>();
        node->q = q;
        node->stack = s;
        node->rule = static_cast<int>(st.rule);
        node->out = st.out;
        for (size_t i = 0; i < per_child.size(); ++i)
          node->children.push_back(clone_tree(*per_child[i][idx[i]]));
        out.push_back(std::move(node));
        if (out.size() >= limit) break;
        size_t i = 0;
        while (i < idx.size() && ++idx[i] == per_child[i].size())
          idx[i++] = 0;
        if (i == idx.size()) break;
      }
    }
    return out;
  }
};

}  // namespace

std::vector<RunTreePtr> enumerate_runs(const Machine& M, int depth_bound,
                                       size_t max_count,
                                       uint64_t node_budget) {
  RunSearch rs{M, max_count, node_budget};
  return rs.search(M.initial, M.initial_stack(), depth_bound);
}

ParikhVec run_parikh(const Machine& M, const RunTree& t, uint32_t cap) {
  ParikhVec v(M.outputs.size(), 0);
  std::vector<const RunTree*> todo{&t};
  while (!todo.empty()) {
    const RunTree* n = todo.back();
    todo.pop_back();
    if (n->rule >= 0 && n->out != EPS)
      v[n->out] = std::min<uint32_t>(cap, v[n->out] + 1);
    for (const auto& c : n->children) todo.push_back(c.get());
  }
  return v;
}

Machine prune_machine(const Machine& M) {
  size_t nq = M.controls.size();
  size_t na = M.stackalpha.size();
  std::vector<char> keep_rule(M.rules.size(), 1);

  std::vector<char> fwd, bwd, creatable, keep_q;
  for (bool changed = true; changed;) {
    changed = false;
    // Characters a run could ever place on the stack.
    creatable.assign(na, 0);
    creatable[M.initial_char] = 1;
    for (size_t i = 0; i < M.rules.size(); ++i)
      if (keep_rule[i] && M.rules[i].op.kind == StackOp::Rew)
        creatable[M.rules[i].op.ch] = 1;
    // Forward reachability from the initial control.
    fwd.assign(nq, 0);
    fwd[M.initial] = 1;
    for (bool grow = true; grow;) {
      grow = false;
      for (size_t i = 0; i < M.rules.size(); ++i) {
        if (!keep_rule[i] || !fwd[M.rules[i].q]) continue;
        for (Ctrl t : M.rules[i].targets)
          if (!fwd[t]) fwd[t] = grow = true;
      }
    }
    // Backward reachability of a final control (accepting-run leaves).
    bwd.assign(nq, 0);
    for (Ctrl f : M.finals) bwd[f] = 1;
    for (bool grow = true; grow;) {
      grow = false;
      for (size_t i = 0; i < M.rules.size(); ++i) {
        if (!keep_rule[i] || bwd[M.rules[i].q]) continue;
        for (Ctrl t : M.rules[i].targets)
          if (bwd[t]) {
            bwd[M.rules[i].q] = grow = true;
            break;
          }
      }
    }
    keep_q.assign(nq, 0);
    for (Ctrl q = 0; q < nq; ++q) keep_q[q] = fwd[q] && bwd[q];
    keep_q[M.initial] = 1;
    for (Ctrl f : M.finals) keep_q[f] = 1;
    for (size_t i = 0; i < M.rules.size(); ++i) {
      if (!keep_rule[i]) continue;
      const Rule& r = M.rules[i];
      bool ok = keep_q[r.q] && creatable[r.guard];
      for (Ctrl t : r.targets) ok = ok && keep_q[t];
      if (!ok) {
        keep_rule[i] = 0;
        changed = true;
      }
    }
  }

  // Characters can only be renumbered when no test automaton reads them.
  bool drop_chars = M.tests.empty();
  std::vector<Sym> amap(na);
  Machine R;
  R.order = M.order;
  R.branches = M.branches;
  R.outputs = M.outputs;
  R.normalized = M.normalized;
  for (Sym a = 0; a < na; ++a)
    if (!drop_chars || creatable[a])
      amap[a] = R.stackalpha.intern(M.stackalpha.name(a));
  std::vector<Ctrl> qmap(nq, 0);
  for (Ctrl q = 0; q < nq; ++q)
    if (keep_q[q]) {
      qmap[q] = R.controls.intern(M.controls.name(q));
      R.rank.push_back(M.rank[q]);
    }
  R.initial = qmap[M.initial];
  R.initial_char = amap[M.initial_char];
  for (Ctrl f : M.finals) R.finals.push_back(qmap[f]);
  R.tests = M.tests;
  R.test_names = M.test_names;
  for (size_t i = 0; i < M.rules.size(); ++i) {
    if (!keep_rule[i]) continue;
    Rule r = M.rules[i];
    r.q = qmap[r.q];
    r.guard = amap[r.guard];
    if (r.op.kind == StackOp::Rew) r.op.ch = amap[r.op.ch];
    for (Ctrl& t : r.targets) t = qmap[t];
    R.rules.push_back(std::move(r));
  }
  return R;
}

// ---------------------------------------------------------------------------
// Text rendering (mirrors the parser in parse.cpp).

std::string render_machine(const Machine& M) {
  std::ostringstream os;
  os << "order " << M.order << "; branches " << M.branches << ";\n";
  os << "controls";
  for (Ctrl q = 0; q < M.controls.size(); ++q)
    os << " " << M.controls.name(q);
  os << ";\n";
  os << "initial " << M.controls.name(M.initial) << " "
     << M.stackalpha.name(M.initial_char) << ";\n";
  os << "final";
  for (Ctrl f : M.finals) os << " " << M.controls.name(f);
  os << ";\n";
  os << "rank";
  for (Ctrl q = 0; q < M.controls.size(); ++q)
    os << " " << M.controls.name(q) << "=" << M.rank[q];
  os << ";\n";
  os << "outputs";
  for (Sym c = 0; c < M.outputs.size(); ++c) os << " " << M.outputs.name(c);
  os << ";\n";
  os << "stackalpha";
  for (Sym a = 0; a < M.stackalpha.size(); ++a)
    os << " " << M.stackalpha.name(a);
  os << ";\n";
  for (size_t i = 0; i < M.tests.size(); ++i)
    os << "test " << M.test_names[i] << " = "
       << render_stackaut(M.tests[i], M.stackalpha) << "\n";
  for (const Rule& r : M.rules) {
    os << "rule " << M.controls.name(r.q) << ", "
       << M.stackalpha.name(r.guard);
    if (!r.tests.empty()) {
      os << ", test ";
      for (size_t j = 0; j < r.tests.size(); ++j)
        os << (j ? " & " : "") << M.test_names[r.tests[j]];
    }
    os << " -> " << (r.out == EPS ? std::string("eps") : M.outputs.name(r.out))
       << ", ";
    switch (r.op.kind) {
      case StackOp::Rew:
        os << "rew(" << M.stackalpha.name(r.op.ch) << ")";
        break;
      case StackOp::Push: os << "push(" << r.op.level << ")"; break;
      case StackOp::Pop: os << "pop(" << r.op.level << ")"; break;
    }
    os << ",";
    for (Ctrl t : r.targets) os << " " << M.controls.name(t);
    os << ";\n";
  }
  return os.str();
}

}  // namespace hopda
