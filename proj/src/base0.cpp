#include "base0.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <sstream>

namespace hopda {

namespace {

std::vector<std::vector<std::pair<Out, uint32_t>>> adjacency(const Nfa& N) {
  std::vector<std::vector<std::pair<Out, uint32_t>>> adj(N.n_states());
  for (const NfaTrans& t : N.trans) adj[t.from].push_back({t.sym, t.to});
  return adj;
}

void eps_close(const std::vector<std::vector<std::pair<Out, uint32_t>>>& adj,
               std::vector<bool>& in) {
  std::deque<uint32_t> work;
  for (uint32_t s = 0; s < in.size(); ++s)
    if (in[s]) work.push_back(s);
  while (!work.empty()) {
    uint32_t s = work.front();
    work.pop_front();
    for (auto [sym, t] : adj[s])
      if (sym == EPS && !in[t]) {
        in[t] = true;
        work.push_back(t);
      }
  }
}

}  // namespace

bool nfa_accepts(const Nfa& N, const std::vector<Out>& word) {
  if (N.n_states() == 0) return false;
  auto adj = adjacency(N);
  std::vector<bool> cur(N.n_states(), false);
  cur[N.init] = true;
  eps_close(adj, cur);
  for (Out c : word) {
    if (c == EPS) continue;
    std::vector<bool> nxt(N.n_states(), false);
    for (uint32_t s = 0; s < cur.size(); ++s)
      if (cur[s])
        for (auto [sym, t] : adj[s])
          if (sym == c) nxt[t] = true;
    eps_close(adj, nxt);
    cur = std::move(nxt);
  }
  for (uint32_t s = 0; s < cur.size(); ++s)
    if (cur[s] && N.finals[s]) return true;
  return false;
}

Nfa linearize0(const Machine& M) {
  if (M.order != 0) throw InputError("linearize0: machine order is not 0");
  if (!M.normalized) throw InputError("linearize0: machine not normalized");
  Nfa N;
  for (Sym c = 0; c < M.outputs.size(); ++c)
    N.chars.intern(M.outputs.name(c));

  // NFA state: current control and character plus the pending sibling
  // branches (control, character), most recently enqueued last.
  using Pending = std::vector<std::pair<Ctrl, Sym>>;
  using Key = std::pair<std::pair<Ctrl, Sym>, Pending>;
  std::map<Key, uint32_t> ids;
  std::deque<Key> work;

  auto name_of = [&](const Key& k) {
    std::ostringstream os;
    os << "(" << M.controls.name(k.first.first) << ":"
       << M.stackalpha.name(k.first.second);
    for (const auto& [q, a] : k.second)
      os << "|" << M.controls.name(q) << ":" << M.stackalpha.name(a);
    os << ")";
    return os.str();
  };
  auto state_id = [&](const Key& k) {
    auto it = ids.find(k);
    if (it != ids.end()) return it->second;
    uint32_t id = N.states.intern(name_of(k));
    N.finals.push_back(false);
    ids.emplace(k, id);
    work.push_back(k);
    return id;
  };

  Key init{{M.initial, M.initial_char}, {}};
  N.init = state_id(init);

  size_t max_pending = M.branches > 0 ? static_cast<size_t>(M.branches - 1) : 0;

  while (!work.empty()) {
    Key k = work.front();
    work.pop_front();
    uint32_t sid = ids.at(k);
    auto [q, a] = k.first;
    const Pending& pend = k.second;

    if (M.is_final(q)) {
      if (pend.empty()) {
        N.finals[sid] = true;
      } else {
        Key next{pend.back(), Pending(pend.begin(), pend.end() - 1)};
        N.trans.push_back({sid, EPS, state_id(next)});
      }
    }
    for (const Rule& r : M.rules) {
      if (r.q != q || r.guard != a) continue;
      if (r.op.kind != StackOp::Rew) continue;  // push/pop undefined at order 0
      if (!r.tests.empty()) {
        StackPtr s = Stack::character(a);
        bool ok = true;
        for (uint32_t ti : r.tests)
          if (!sa_run(M.tests[ti], s)) {
            ok = false;
            break;
          }
        if (!ok) continue;
      }
      Sym b = r.op.ch;
      Pending pend2 = pend;
      for (size_t i = 1; i < r.targets.size(); ++i)
        pend2.push_back({r.targets[i], b});
      if (pend2.size() > max_pending) continue;  // more leaves than k allows
      Key next{{r.targets[0], b}, std::move(pend2)};
      N.trans.push_back({sid, r.out, state_id(next)});
    }
  }
  return N;
}

std::vector<Out> pump_witness(const NfaWitness& w, int t) {
  std::vector<Out> word;
  for (size_t i = 0; i < w.segments.size(); ++i) {
    word.insert(word.end(), w.segments[i].begin(), w.segments[i].end());
    if (i < w.cycles.size())
      for (int j = 0; j < t; ++j)
        word.insert(word.end(), w.cycles[i].begin(), w.cycles[i].end());
  }
  return word;
}

namespace {

// Iterative Tarjan SCC; returns component index per state.
std::vector<uint32_t> scc_of(
    const std::vector<std::vector<std::pair<Out, uint32_t>>>& adj) {
  uint32_t n = static_cast<uint32_t>(adj.size());
  std::vector<uint32_t> comp(n, UINT32_MAX), low(n), idx(n, UINT32_MAX);
  std::vector<uint32_t> stk;
  std::vector<bool> on(n, false);
  uint32_t counter = 0, ncomp = 0;
  struct Frame {
    uint32_t v;
    size_t ei;
  };
  for (uint32_t root = 0; root < n; ++root) {
    if (idx[root] != UINT32_MAX) continue;
    std::vector<Frame> frames{{root, 0}};
    idx[root] = low[root] = counter++;
    stk.push_back(root);
    on[root] = true;
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.ei < adj[f.v].size()) {
        uint32_t w = adj[f.v][f.ei++].second;
        if (idx[w] == UINT32_MAX) {
          idx[w] = low[w] = counter++;
          stk.push_back(w);
          on[w] = true;
          frames.push_back({w, 0});
        } else if (on[w]) {
          low[f.v] = std::min(low[f.v], idx[w]);
        }
      } else {
        if (low[f.v] == idx[f.v]) {
          while (true) {
            uint32_t w = stk.back();
            stk.pop_back();
            on[w] = false;
            comp[w] = ncomp;
            if (w == f.v) break;
          }
          ++ncomp;
        }
        uint32_t v = f.v;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
      }
    }
  }
  return comp;
}

// Shortest in-SCC path src -> dst as a word (BFS over states of one SCC).
std::vector<Out> scc_path(
    const std::vector<std::vector<std::pair<Out, uint32_t>>>& adj,
    const std::vector<uint32_t>& comp, uint32_t src, uint32_t dst) {
  std::vector<int64_t> parent(adj.size(), -1);
  std::vector<Out> via(adj.size(), EPS);
  std::deque<uint32_t> work{src};
  std::vector<bool> seen(adj.size(), false);
  seen[src] = true;
  while (!work.empty()) {
    uint32_t s = work.front();
    work.pop_front();
    if (s == dst) break;
    for (auto [sym, t] : adj[s]) {
      if (comp[t] != comp[src] || seen[t]) continue;
      seen[t] = true;
      parent[t] = s;
      via[t] = sym;
      work.push_back(t);
    }
  }
  std::vector<Out> word;
  for (uint32_t s = dst; s != src; s = static_cast<uint32_t>(parent[s])) {
    if (via[s] != EPS) word.push_back(via[s]);
  }
  std::reverse(word.begin(), word.end());
  return word;
}

}  // namespace

bool nfa_diagonal(const Nfa& N, const std::vector<Out>& chars,
                  NfaWitness* witness) {
  if (N.n_states() == 0) return false;
  auto adj = adjacency(N);
  auto comp = scc_of(adj);
  size_t K = chars.size();

  // pumpable[i][s]: state s lies in an SCC with an internal chars[i] edge.
  std::vector<std::vector<bool>> pumpable(K,
                                          std::vector<bool>(N.n_states(), false));
  for (size_t i = 0; i < K; ++i) {
    std::vector<bool> comp_has(N.n_states(), false);  // indexed by component
    for (const NfaTrans& t : N.trans)
      if (t.sym == chars[i] && comp[t.from] == comp[t.to])
        comp_has[comp[t.from]] = true;
    for (uint32_t s = 0; s < N.n_states(); ++s)
      pumpable[i][s] = comp_has[comp[s]];
  }

  // BFS over (state, covered subset).
  uint32_t masks = 1u << K;
  auto node = [&](uint32_t s, uint32_t m) { return s * masks + m; };
  std::vector<int64_t> par(static_cast<size_t>(N.n_states()) * masks, -2);
  // action: -1..: pump char index -(i+1); >= 0: index into N.trans
  std::vector<int64_t> act(par.size(), 0);
  std::deque<uint32_t> work;
  par[node(N.init, 0)] = -1;
  work.push_back(node(N.init, 0));
  int64_t goal = -1;
  while (!work.empty() && goal < 0) {
    uint32_t nd = work.front();
    work.pop_front();
    uint32_t s = nd / masks, m = nd % masks;
    if (m == masks - 1 && N.finals[s]) {
      goal = nd;
      break;
    }
    for (size_t i = 0; i < K; ++i) {
      if ((m >> i & 1) || !pumpable[i][s]) continue;
      uint32_t nx = node(s, m | (1u << i));
      if (par[nx] == -2) {
        par[nx] = nd;
        act[nx] = -static_cast<int64_t>(i) - 1;
        work.push_back(nx);
      }
    }
    // Transition indices in file order keep the witness deterministic.
    for (size_t ti = 0; ti < N.trans.size(); ++ti) {
      const NfaTrans& t = N.trans[ti];
      if (t.from != s) continue;
      uint32_t nx = node(t.to, m);
      if (par[nx] == -2) {
        par[nx] = nd;
        act[nx] = static_cast<int64_t>(ti);
        work.push_back(nx);
      }
    }
  }
  if (goal < 0) return false;
  if (!witness) return true;

  // Reconstruct: segments of edge outputs split at pump actions.
  std::vector<std::pair<int, int64_t>> actions;  // (0 edge, 1 pump), payload
  for (uint32_t nd = static_cast<uint32_t>(goal); par[nd] != -1;
       nd = static_cast<uint32_t>(par[nd])) {
    if (act[nd] < 0)
      actions.push_back({1, -act[nd] - 1});
    else
      actions.push_back({0, act[nd]});
  }
  std::reverse(actions.begin(), actions.end());
  witness->segments.assign(1, {});
  witness->cycles.clear();
  witness->cycle_chars.clear();
  uint32_t here = N.init;
  for (auto [kind, payload] : actions) {
    if (kind == 0) {
      const NfaTrans& t = N.trans[payload];
      if (t.sym != EPS) witness->segments.back().push_back(t.sym);
      here = t.to;
    } else {
      size_t i = static_cast<size_t>(payload);
      Out c = chars[i];
      // A cycle through `here` with a c-edge, entirely inside its SCC.
      std::vector<Out> cyc;
      bool found = false;
      for (const NfaTrans& t : N.trans) {
        if (t.sym != c || comp[t.from] != comp[here] ||
            comp[t.to] != comp[here])
          continue;
        std::vector<Out> a = scc_path(adj, comp, here, t.from);
        std::vector<Out> b = scc_path(adj, comp, t.to, here);
        cyc = std::move(a);
        cyc.push_back(c);
        cyc.insert(cyc.end(), b.begin(), b.end());
        found = true;
        break;
      }
      if (!found) cyc = {c};  // unreachable if pumpable[] is consistent
      witness->cycles.push_back(std::move(cyc));
      witness->cycle_chars.push_back(c);
      witness->segments.push_back({});
    }
  }
  return true;
}

bool nfa_diagonal_oracle(const Nfa& N, const std::vector<Out>& chars) {
  if (N.n_states() == 0) return false;
  uint32_t cap = N.n_states() + 1;
  size_t K = chars.size();
  uint64_t span = 1;
  for (size_t i = 0; i < K; ++i) span *= (cap + 1);
  std::vector<bool> seen(static_cast<size_t>(N.n_states()) * span, false);
  auto encode = [&](uint32_t s, const std::vector<uint32_t>& cnt) {
    uint64_t e = s;
    for (size_t i = 0; i < K; ++i) e = e * (cap + 1) + cnt[i];
    return e;
  };
  std::deque<std::pair<uint32_t, std::vector<uint32_t>>> work;
  work.push_back({N.init, std::vector<uint32_t>(K, 0)});
  seen[encode(N.init, work.front().second)] = true;
  while (!work.empty()) {
    auto [s, cnt] = work.front();
    work.pop_front();
    if (N.finals[s]) {
      bool full = true;
      for (uint32_t c : cnt)
        if (c < cap) full = false;
      if (full) return true;
    }
    for (const NfaTrans& t : N.trans) {
      if (t.from != s) continue;
      std::vector<uint32_t> cnt2 = cnt;
      for (size_t i = 0; i < K; ++i)
        if (t.sym == chars[i] && cnt2[i] < cap) ++cnt2[i];
      uint64_t e = encode(t.to, cnt2);
      if (!seen[e]) {
        seen[e] = true;
        work.push_back({t.to, std::move(cnt2)});
      }
    }
  }
  return false;
}

namespace {

// Componentwise-capped sum.
ParikhVec vec_add(const ParikhVec& a, const ParikhVec& b, uint32_t cap) {
  ParikhVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = std::min(cap, a[i] + b[i]);
  return r;
}

}  // namespace

std::set<ParikhVec> machine0_parikh(const Machine& M, uint32_t cap) {
  if (M.order != 0) throw InputError("machine0_parikh: order is not 0");
  size_t k = M.outputs.size();
  size_t nq = M.controls.size(), na = M.stackalpha.size();
  std::vector<std::set<ParikhVec>> V(nq * na);
  auto at = [&](Ctrl q, Sym a) -> std::set<ParikhVec>& { return V[q * na + a]; };
  for (Ctrl q = 0; q < nq; ++q)
    if (M.is_final(q))
      for (Sym a = 0; a < na; ++a) at(q, a).insert(ParikhVec(k, 0));
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Rule& r : M.rules) {
      if (r.op.kind != StackOp::Rew) continue;
      for (Sym a = 0; a < na; ++a) {
        if (r.guard != a) continue;
        bool tests_ok = true;
        for (uint32_t ti : r.tests)
          if (!sa_run(M.tests[ti], Stack::character(a))) tests_ok = false;
        if (!tests_ok) continue;
        ParikhVec emit(k, 0);
        if (r.out != EPS) emit[r.out] = 1;
        std::set<ParikhVec> acc{emit};
        for (Ctrl t : r.targets) {
          std::set<ParikhVec> nxt;
          for (const ParikhVec& u : acc)
            for (const ParikhVec& v : at(t, r.op.ch)) nxt.insert(vec_add(u, v, cap));
          acc = std::move(nxt);
          if (acc.empty()) break;
        }
        for (const ParikhVec& u : acc)
          if (at(r.q, a).insert(u).second) changed = true;
      }
    }
  }
  return at(M.initial, M.initial_char);
}

std::set<ParikhVec> nfa_parikh_capped(const Nfa& N, uint32_t cap) {
  size_t k = N.chars.size();
  std::vector<std::set<ParikhVec>> W(N.n_states());
  for (uint32_t s = 0; s < N.n_states(); ++s)
    if (N.finals[s]) W[s].insert(ParikhVec(k, 0));
  bool changed = true;
  while (changed) {
    changed = false;
    for (const NfaTrans& t : N.trans) {
      ParikhVec emit(k, 0);
      if (t.sym != EPS) emit[t.sym] = 1;
      for (const ParikhVec& v : W[t.to])
        if (W[t.from].insert(vec_add(emit, v, cap)).second) changed = true;
    }
  }
  if (N.n_states() == 0) return {};
  return W[N.init];
}

std::string render_nfa(const Nfa& N) {
  std::ostringstream os;
  os << "states";
  for (Sym s = 0; s < N.states.size(); ++s) os << " " << N.states.name(s);
  os << "; initial " << N.states.name(N.init) << "; finals";
  for (uint32_t s = 0; s < N.n_states(); ++s)
    if (N.finals[s]) os << " " << N.states.name(s);
  os << ";\n";
  if (N.chars.size() > 0) {
    os << "chars";
    for (Sym c = 0; c < N.chars.size(); ++c) os << " " << N.chars.name(c);
    os << ";\n";
  }
  for (const NfaTrans& t : N.trans)
    os << "trans " << N.states.name(t.from) << " "
       << (t.sym == EPS ? std::string("eps") : N.chars.name(t.sym)) << " "
       << N.states.name(t.to) << ";\n";
  return os.str();
}

}  // namespace hopda
