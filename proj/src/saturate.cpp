#include "saturate.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace hopda {

namespace {

// ---------------------------------------------------------------------------
// The pre* engine.
//
// Terminology: "level l" handles order-l suffixes.  Level n controls are the
// system's own controls; a level-l control (l < n) is an interned pair
// (c, P) of a level-(l+1) control and a set of level-(l+1) controls, read
// as: "c is derivable at v . w whenever the phase on the element v can leave
// every frontier control inside P = mu(w)".  Sets can be explicit or
// symbolic (the frontier sets produced by push-composition, whose members
// are found by querying derivability rather than by enumeration).
// ---------------------------------------------------------------------------

class Engine {
 public:
  // expand(q, a) must append the guarded rules of top control q: ordinary
  // rules as (op, target) and alternating rules as target lists (an empty
  // list is an axiom).  It may intern fresh top controls (top_count grows).
  using ExpandFn = std::function<void(
      Ctrl, Sym, std::vector<std::pair<StackOp, uint32_t>>&,
      std::vector<std::vector<uint32_t>>&)>;

  Engine(int order, size_t nchars, std::function<size_t()> top_count,
         ExpandFn expand, uint64_t budget)
      : n_(order),
        nchars_(nchars),
        top_count_(std::move(top_count)),
        expand_(std::move(expand)),
        budget_(budget) {
    levels_.resize(n_ + 1);
    pop_relevant_.resize(n_ + 1);
  }

  // Saturates with the given empty-stack-accepting top controls; callable
  // repeatedly (e.g. after new top controls were seeded).
  void run(const std::vector<uint32_t>& E);

  // Declares a top control whose acceptance will be queried (finals_for).
  // Only relevant controls -- observed ones and pop-rule targets -- are
  // enumerated into frontier and automaton state sets: they are the only
  // controls whose set membership is ever consulted.
  void observe(uint32_t top) {
    if (!relevant(n_, top)) observed_.insert(top);
  }

  StackAutomaton automaton(const std::set<Sym>& alphabet) const;
  std::vector<bool> finals_for(uint32_t top) const;

 private:
  // Sets are always extensional (sorted id vectors).  Frontier sets produced
  // by push-composition are snapshots over the currently interned controls;
  // the outer restart loop re-takes them until the whole structure is stable,
  // which keeps the vocabulary inside a finite tower and guarantees
  // termination.
  struct Level {
    std::vector<std::pair<uint32_t, uint32_t>> pairs;
    std::map<std::pair<uint32_t, uint32_t>, uint32_t> pair_ids;
    std::vector<std::vector<uint32_t>> sets;
    std::map<std::vector<uint32_t>, uint32_t> expl_ids;
  };
  struct LRules {
    std::vector<std::pair<StackOp, uint32_t>> ord;  // op.level <= this level
    std::vector<std::vector<uint32_t>> alt;         // empty list = axiom
    struct PopAx {
      int level;
      uint32_t setid;
      uint32_t tc;
    };
    std::vector<PopAx> popax;
    struct Comp {
      uint32_t base;  // control at level 2+layer
      int layer;
    };
    std::vector<Comp> comps;
  };

  size_t n_ctrls(int l) const {
    return l == n_ ? top_count_() : levels_[l].pairs.size();
  }
  uint32_t pair_intern(int l, uint32_t pc, uint32_t pset) {
    Level& L = levels_[l];
    auto it = L.pair_ids.find({pc, pset});
    if (it != L.pair_ids.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(L.pairs.size());
    L.pairs.push_back({pc, pset});
    L.pair_ids.emplace(std::make_pair(pc, pset), id);
    spend(1);
    return id;
  }
  uint32_t set_explicit(int l, std::vector<uint32_t> elems) {
    std::sort(elems.begin(), elems.end());
    elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
    Level& L = levels_[l];
    auto it = L.expl_ids.find(elems);
    if (it != L.expl_ids.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(L.sets.size());
    L.expl_ids.emplace(elems, id);
    L.sets.push_back(std::move(elems));
    spend(1);
    return id;
  }

  uint64_t vocab() const {
    uint64_t v = top_count_();
    for (const Level& L : levels_) v += L.pairs.size();
    return v;
  }
  const LRules& rules(int l, uint32_t u, Sym a);
  bool eval(Sym a, uint32_t u, uint32_t P);
  bool member(int l, uint32_t sid, uint32_t c);
  // Is membership of the level-l control u ever consulted?  Pop targets at
  // its own level, or a wrapper of a relevant higher-level control.
  bool relevant(int l, uint32_t u) const {
    while (l < n_) {
      if (pop_relevant_[l].count(u)) return true;
      u = levels_[l].pairs[u].first;
      ++l;
    }
    return pop_relevant_[n_].count(u) || observed_.count(u);
  }
  bool d_true(Sym a, uint32_t u, uint32_t P);
  void kleene();
  void build_automaton();
  uint64_t footprint() const;
  void spend(uint64_t units) {
    spent_ += units;
    if (spent_ > budget_)
      throw BudgetError("saturate",
                        "saturation budget exhausted (" +
                            std::to_string(budget_) + " units)");
  }

  int n_;
  size_t nchars_;
  std::function<size_t()> top_count_;
  ExpandFn expand_;
  uint64_t budget_;
  uint64_t spent_ = 0;

  std::vector<Level> levels_;  // [1..n]; levels_[n].pairs unused
  std::map<std::tuple<int, uint32_t, Sym>, LRules> rules_memo_;

  // Controls whose set membership may be tested: pop-rule targets (per
  // level, recorded when level-1 rule stores materialize) and externally
  // observed query tops.
  std::vector<std::unordered_set<uint32_t>> pop_relevant_;
  std::unordered_set<uint32_t> observed_;
  uint64_t built_fp_ = ~uint64_t(0);  // footprint at last automaton build

  // Demand keys (a, u, P) at level 1, packed: a | u | P (16/24/24 bits).
  using DKey = uint64_t;
  static DKey dkey(Sym a, uint32_t u, uint32_t P) {
    return (static_cast<uint64_t>(a) << 48) | (static_cast<uint64_t>(u) << 24) |
           P;
  }
  std::unordered_set<DKey> memo_;  // established facts
  std::unordered_set<DKey> demanded_;
  std::vector<DKey> demand_list_;

  // Worklist machinery: a pending key is re-evaluated when a fact it queried
  // (and found unproven) flips to true, or -- if its evaluation took a
  // frontier snapshot -- when an outer round changed the control vocabulary.
  std::unordered_map<DKey, std::unordered_set<DKey>> deps_;
  std::unordered_set<DKey> queued_;
  std::vector<DKey> queue_;
  std::unordered_set<DKey> snapshot_users_;
  DKey cur_eval_ = 0;
  bool tracking_ = false;

  // Frontier snapshots are shared: the level-1 push frontier depends only on
  // (a, P), the composed-push frontier on (a, P, layer, wrappers, inner
  // allowance).  Each is re-taken at most once per outer round (staleness
  // within a round is sound: frontiers grow monotonically and the rounds
  // repeat until stable).
  uint64_t round_ = 1;
  struct Frontier {
    uint32_t setid = 0;
    uint64_t stamp = 0;
  };
  std::map<std::pair<Sym, uint32_t>, Frontier> push_frontiers_;
  std::map<std::tuple<Sym, uint32_t, int, uint32_t, std::vector<uint32_t>>,
           Frontier>
      comp_frontiers_;
  void enqueue(DKey k) {
    if (memo_.count(k)) return;
    if (queued_.insert(k).second) queue_.push_back(k);
  }

  // --- order-1 fast path ---------------------------------------------------
  // For n_ == 1 the summary tower degenerates and the allowance-set encoding
  // churns badly; pre* is computed instead as a classical alternating-
  // automaton saturation: afa_[(q,a)] is an antichain of minimal control
  // sets S with "q accepts a.w whenever every member of S accepts w" (an
  // empty S accepts unconditionally).  Reading the stack bottom-up, the
  // deterministic state is R(w) = {q : q accepts w}, with R(eps) = E and
  // R(a.w) = {q : some S is contained in R(w)}.
  using AfaKey = std::pair<uint32_t, Sym>;
  std::map<AfaKey, std::vector<std::vector<uint32_t>>> afa_;
  std::map<AfaKey, std::set<AfaKey>> afa_deps_;
  std::set<AfaKey> afa_demanded_;
  std::set<AfaKey> afa_queued_;
  std::vector<AfaKey> afa_queue_;
  void afa_demand(AfaKey k, const AfaKey* consumer) {
    if (consumer) afa_deps_[k].insert(*consumer);
    if (afa_demanded_.insert(k).second) {
      spend(1);
      if (afa_queued_.insert(k).second) afa_queue_.push_back(k);
    }
  }
  bool afa_insert(AfaKey k, std::vector<uint32_t> S);
  void afa_process(AfaKey k);
  void run_afa();
  bool afa_accepts(uint32_t q, Sym a, const std::vector<uint32_t>& R) const {
    auto it = afa_.find({q, a});
    if (it == afa_.end()) return false;
    for (const auto& S : it->second)
      if (std::includes(R.begin(), R.end(), S.begin(), S.end())) return true;
    return false;
  }

  uint32_t e_set_ = 0;  // explicit set id at level n
  // Automaton: composite states (suffix summaries per active level).
  std::vector<std::vector<uint32_t>> states_;  // [0] = sink (empty)
  std::map<std::vector<uint32_t>, SAState> state_ids_;
  std::map<std::pair<SAState, Letter>, SAState> delta_;
};

const Engine::LRules& Engine::rules(int l, uint32_t u, Sym a) {
  auto key = std::make_tuple(l, u, a);
  auto it = rules_memo_.find(key);
  if (it != rules_memo_.end()) return it->second;
  LRules R;
  if (l == n_) {
    expand_(u, a, R.ord, R.alt);
  } else {
    auto [pc, pset] = levels_[l].pairs[u];
    const LRules& par = rules(l + 1, pc, a);
    for (const auto& [op, tc] : par.ord) {
      int lev = op.kind == StackOp::Rew ? 0 : op.level;
      if (lev <= l) {
        R.ord.push_back({op, pair_intern(l, tc, pset)});
      } else {
        // lev == l+1 by construction of the parent store.
        if (op.kind == StackOp::Pop)
          R.popax.push_back({l + 1, pset, tc});
        else
          R.comps.push_back({tc, 0});
      }
    }
    for (const auto& ch : par.alt) {
      std::vector<uint32_t> lifted;
      lifted.reserve(ch.size());
      for (uint32_t t : ch) lifted.push_back(pair_intern(l, t, pset));
      R.alt.push_back(std::move(lifted));
    }
    R.popax.insert(R.popax.end(), par.popax.begin(), par.popax.end());
    for (const auto& c : par.comps) R.comps.push_back({c.base, c.layer + 1});
  }
  if (l == 1) {
    // Everything eval() will member-test from this store becomes relevant.
    for (const auto& [op, tc] : R.ord)
      if (op.kind == StackOp::Pop) pop_relevant_[1].insert(tc);
    for (const auto& px : R.popax) pop_relevant_[px.level].insert(px.tc);
  }
  spend(1);
  return rules_memo_.emplace(key, std::move(R)).first->second;
}

bool Engine::d_true(Sym a, uint32_t u, uint32_t P) {
  DKey k = dkey(a, u, P);
  if (memo_.count(k)) return true;
  if (demanded_.insert(k).second) {
    demand_list_.push_back(k);
    enqueue(k);
    spend(1);
  }
  if (tracking_) deps_[k].insert(cur_eval_);
  return false;
}

bool Engine::member(int l, uint32_t sid, uint32_t c) {
  const std::vector<uint32_t>& s = levels_[l].sets[sid];
  return std::binary_search(s.begin(), s.end(), c);
}

bool Engine::eval(Sym a, uint32_t u, uint32_t P) {
  const LRules& R = rules(1, u, a);
  for (const auto& ch : R.alt) {
    bool all = true;
    for (uint32_t t : ch)
      if (!d_true(a, t, P)) all = false;
    if (all) return true;
  }
  for (const auto& [op, tc] : R.ord) {
    switch (op.kind) {
      case StackOp::Rew:
        if (d_true(op.ch, tc, P)) return true;
        break;
      case StackOp::Push: {
        // Frontier of the inner push: a snapshot of the controls derivable
        // on the copied character under the same allowance.  Monotone: the
        // restart loop re-takes it until stable.
        if (tracking_) snapshot_users_.insert(cur_eval_);
        Frontier& fc = push_frontiers_[{a, P}];
        if (fc.stamp != round_) {
          bool t = tracking_;
          tracking_ = false;  // round requeues cover frontier staleness
          std::vector<uint32_t> ext;
          for (uint32_t c = 0; c < n_ctrls(1); ++c)
            if (relevant(1, c) && d_true(a, c, P)) ext.push_back(c);
          tracking_ = t;
          fc.setid = set_explicit(1, std::move(ext));
          fc.stamp = round_;
        }
        if (d_true(a, tc, fc.setid)) return true;
        break;
      }
      case StackOp::Pop:
        if (member(1, P, tc)) return true;
        break;
    }
  }
  for (const auto& px : R.popax)
    if (member(px.level, px.setid, px.tc)) return true;
  for (const auto& cm : R.comps) {
    if (tracking_) snapshot_users_.insert(cur_eval_);
    // push at level 1+layer: the copied element is the one u lives in.
    // Unwrap u's layers to find the wrappers and the inner allowance.
    uint32_t cur = u;
    std::vector<uint32_t> qs;
    for (int i = 0; i < cm.layer; ++i) {
      auto [pc, q] = levels_[1 + i].pairs[cur];
      qs.push_back(q);
      cur = pc;
    }
    auto [x, pin] = levels_[1 + cm.layer].pairs[cur];
    (void)x;
    // Frontier at level 2+layer: controls derivable on the copy, i.e. with
    // the same wrappers and inner allowance, under allowance P.
    Frontier& fc = comp_frontiers_[{a, P, cm.layer, pin, qs}];
    if (fc.stamp != round_) {
      bool t = tracking_;
      tracking_ = false;
      std::vector<uint32_t> ext;
      for (uint32_t c = 0; c < n_ctrls(2 + cm.layer); ++c) {
        if (!relevant(2 + cm.layer, c)) continue;
        uint32_t v = pair_intern(1 + cm.layer, c, pin);
        for (int i = cm.layer - 1; i >= 0; --i)
          v = pair_intern(1 + i, v, qs[i]);
        if (d_true(a, v, P)) ext.push_back(c);
      }
      tracking_ = t;
      fc.setid = set_explicit(2 + cm.layer, std::move(ext));
      fc.stamp = round_;
    }
    uint32_t w = pair_intern(1 + cm.layer, cm.base, fc.setid);
    for (int i = cm.layer - 1; i >= 0; --i) w = pair_intern(1 + i, w, qs[i]);
    if (d_true(a, w, P)) return true;
  }
  return false;
}

bool Engine::afa_insert(AfaKey k, std::vector<uint32_t> S) {
  std::sort(S.begin(), S.end());
  S.erase(std::unique(S.begin(), S.end()), S.end());
  auto& anti = afa_[k];
  for (const auto& T : anti)
    if (std::includes(S.begin(), S.end(), T.begin(), T.end()))
      return false;  // subsumed by an existing smaller set
  anti.erase(std::remove_if(anti.begin(), anti.end(),
                            [&](const std::vector<uint32_t>& T) {
                              return std::includes(T.begin(), T.end(),
                                                   S.begin(), S.end());
                            }),
             anti.end());
  anti.push_back(std::move(S));
  spend(1);
  auto it = afa_deps_.find(k);
  if (it != afa_deps_.end())
    for (const AfaKey& c : it->second)
      if (afa_queued_.insert(c).second) afa_queue_.push_back(c);
  return true;
}

void Engine::afa_process(AfaKey k) {
  auto [q, a] = k;
  const LRules& R = rules(1, q, a);
  // All unions of one choice per slot, where slot i draws from the antichain
  // of keys[i]; every union is a candidate transition target.  Partial
  // unions already subsumed by an existing transition of k are pruned
  // (unions only grow), and duplicates are merged per stage.
  auto subsumed = [&](const std::vector<uint32_t>& u) {
    auto it = afa_.find(k);
    if (it == afa_.end()) return false;
    for (const auto& T : it->second)
      if (std::includes(u.begin(), u.end(), T.begin(), T.end())) return true;
    return false;
  };
  auto combine = [&](const std::vector<AfaKey>& keys) {
    for (const AfaKey& dep : keys) afa_demand(dep, &k);
    std::set<std::vector<uint32_t>> acc{{}};
    for (const AfaKey& dep : keys) {
      auto it = afa_.find(dep);
      if (it == afa_.end() || it->second.empty()) return;  // no choice yet
      auto choices = it->second;  // copy: self-loops may grow afa_[dep]
      std::set<std::vector<uint32_t>> nxt;
      for (const auto& partial : acc)
        for (const auto& S : choices) {
          spend(1);
          std::vector<uint32_t> u = partial;
          u.insert(u.end(), S.begin(), S.end());
          std::sort(u.begin(), u.end());
          u.erase(std::unique(u.begin(), u.end()), u.end());
          if (!subsumed(u)) nxt.insert(std::move(u));
        }
      acc = std::move(nxt);
    }
    for (const auto& u : acc) afa_insert(k, u);
  };

  for (const auto& ch : R.alt) {
    // Every branch reads the same stack, a included.
    std::vector<AfaKey> keys;
    for (uint32_t t : ch) keys.push_back({t, a});
    combine(keys);
  }
  for (const auto& [op, tc] : R.ord) {
    switch (op.kind) {
      case StackOp::Rew: {
        AfaKey dep{tc, op.ch};
        afa_demand(dep, &k);
        auto it = afa_.find(dep);
        if (it != afa_.end())
          for (const auto& S : it->second) afa_insert(k, S);
        break;
      }
      case StackOp::Push: {
        // tc must read a.a.w: one transition on the copy, then one per
        // resulting obligation on the original a.
        AfaKey dep{tc, a};
        afa_demand(dep, &k);
        auto it = afa_.find(dep);
        if (it != afa_.end()) {
          auto sets = it->second;  // copy: afa_ may rehash during combine
          for (const auto& S : sets) {
            std::vector<AfaKey> keys;
            for (uint32_t s : S) keys.push_back({s, a});
            combine(keys);
          }
        }
        break;
      }
      case StackOp::Pop:
        afa_insert(k, {tc});
        break;
    }
  }
}

void Engine::run_afa() {
  while (true) {
    uint64_t before = footprint();
    // Transitions are needed for every control whose membership in a state
    // set may be consulted; the saturation demands its own dependencies, so
    // this loop only seeds the externally consulted pairs.
    for (uint32_t u = 0; u < n_ctrls(1); ++u)
      if (relevant(1, u))
        for (Sym a = 0; a < nchars_; ++a) afa_demand({u, a}, nullptr);
    while (!afa_queue_.empty()) {
      AfaKey k = afa_queue_.back();
      afa_queue_.pop_back();
      afa_queued_.erase(k);
      afa_process(k);
    }
#ifdef HOPDA_SATURATE_DEBUG
    size_t nsets = 0, maxanti = 0;
    for (const auto& [k, anti] : afa_) {
      nsets += anti.size();
      maxanti = std::max(maxanti, anti.size());
    }
    fprintf(stderr,
            "afa round: fp=%llu spent=%llu demanded=%zu trans=%zu maxanti=%zu "
            "states=%zu tops=%zu\n",
            (unsigned long long)footprint(), (unsigned long long)spent_,
            afa_demanded_.size(), nsets, maxanti, states_.size(),
            n_ctrls(1));
#endif
    if (footprint() == before) break;
  }
  // The automaton only changes when new facts were learned since the last
  // build; repeated queries against a converged engine reuse it as-is.
  if (footprint() != built_fp_) {
    build_automaton();
    built_fp_ = footprint();
  }
}

void Engine::kleene() {
  while (!queue_.empty()) {
    DKey k = queue_.back();
    queue_.pop_back();
    queued_.erase(k);
    if (memo_.count(k)) continue;
    Sym a = static_cast<Sym>(k >> 48);
    uint32_t u = static_cast<uint32_t>(k >> 24) & 0xffffffu;
    uint32_t P = static_cast<uint32_t>(k) & 0xffffffu;
    cur_eval_ = k;
    tracking_ = true;
    bool v = eval(a, u, P);
    tracking_ = false;
    if (!v) continue;
    memo_.insert(k);
    spend(1);
    auto it = deps_.find(k);
    if (it != deps_.end()) {
      for (DKey d : it->second) enqueue(d);
      deps_.erase(it);
    }
  }
}

void Engine::build_automaton() {
  states_.clear();
  state_ids_.clear();
  delta_.clear();
  states_.push_back({});  // sink
  state_ids_.emplace(std::vector<uint32_t>{}, 0);
  auto intern_state = [&](const std::vector<uint32_t>& comp) -> SAState {
    auto it = state_ids_.find(comp);
    if (it != state_ids_.end()) return it->second;
    SAState id = static_cast<SAState>(states_.size());
    states_.push_back(comp);
    state_ids_.emplace(comp, id);
    spend(1);
    return id;
  };
  intern_state({e_set_});

  std::vector<Letter> letters;
  for (Sym a = 0; a < nchars_; ++a) letters.push_back(letter_char(a));
  for (int l = 1; l <= n_ - 1; ++l) {
    letters.push_back(letter_close(l));
    letters.push_back(letter_open(l));
  }

  // Order-1 fast path: per-character index of the relevant AFA antichains,
  // probed against a bitset of the current state set.
  std::vector<std::vector<
      std::pair<uint32_t, const std::vector<std::vector<uint32_t>>*>>>
      bychar(nchars_);
  if (n_ == 1)
    for (const auto& [k2, anti] : afa_)
      if (!anti.empty() && relevant(1, k2.first))
        bychar[k2.second].push_back({k2.first, &anti});
  std::vector<uint64_t> bits;

  for (SAState sid = 1; sid < states_.size(); ++sid) {
    const std::vector<uint32_t> comp = states_[sid];  // copy: states_ grows
    int d = n_ - static_cast<int>(comp.size()) + 1;   // deepest active level
    if (n_ == 1) {
      bits.assign(n_ctrls(1) / 64 + 1, 0);
      for (uint32_t u : levels_[1].sets[comp.back()])
        bits[u >> 6] |= uint64_t(1) << (u & 63);
    }
    for (Letter x : letters) {
      SAState to = 0;
      if (letter_is_char(x)) {
        if (d == 1) {
          Sym a = static_cast<Sym>(x);
          uint32_t T = comp.back();
          std::vector<uint32_t> out;
          if (n_ == 1) {
            for (const auto& [u, anti] : bychar[a]) {
              for (const auto& S : *anti) {
                bool all = true;
                for (uint32_t s : S)
                  if (!(bits[s >> 6] >> (s & 63) & 1)) {
                    all = false;
                    break;
                  }
                if (all) {
                  out.push_back(u);
                  break;
                }
              }
            }
          } else {
            for (uint32_t u = 0; u < n_ctrls(1); ++u)
              if (relevant(1, u) && d_true(a, u, T)) out.push_back(u);
          }
          std::vector<uint32_t> nxt = comp;
          nxt.back() = set_explicit(1, std::move(out));
          to = intern_state(nxt);
        }
      } else if (x == letter_close(d - 1) && d - 1 >= 1) {
        std::vector<uint32_t> nxt = comp;
        nxt.push_back(set_explicit(d - 1, {}));
        to = intern_state(nxt);
      } else if (d <= n_ - 1 && x == letter_open(d) && comp.size() >= 2) {
        uint32_t sigma = comp.back();
        uint32_t tpar = comp[comp.size() - 2];
        // Demand the candidate pairs so later rounds can derive them.
        for (uint32_t c = 0; c < n_ctrls(d + 1); ++c)
          if (relevant(d + 1, c)) pair_intern(d, c, tpar);
        const std::vector<uint32_t>& sv = levels_[d].sets[sigma];
        std::vector<uint32_t> out;
        for (uint32_t e : sv) {
          auto [pc, pset] = levels_[d].pairs[e];
          if (pset == tpar) out.push_back(pc);
        }
        std::vector<uint32_t> nxt = comp;
        nxt.pop_back();
        nxt.back() = set_explicit(d + 1, std::move(out));
        to = intern_state(nxt);
      }
      if (to != 0) delta_[{sid, x}] = to;
    }
  }
}

uint64_t Engine::footprint() const {
  uint64_t f = top_count_() + rules_memo_.size() + memo_.size() +
               demand_list_.size() + states_.size() + observed_.size();
  for (const Level& L : levels_) f += L.pairs.size() + L.sets.size();
  for (const auto& r : pop_relevant_) f += r.size();
  f += afa_demanded_.size();
  for (const auto& [k, anti] : afa_) f += anti.size();
  return f;
}

void Engine::run(const std::vector<uint32_t>& E) {
  e_set_ = set_explicit(n_, E);
  if (n_ == 1) {
    run_afa();
    return;
  }
  while (true) {
    uint64_t before = footprint();
    kleene();
    build_automaton();
    kleene();
#ifdef HOPDA_SATURATE_DEBUG
    fprintf(stderr, "round: fp=%llu states=%zu memo=%zu demands=%zu",
            (unsigned long long)footprint(), states_.size(), memo_.size(),
            demand_list_.size());
    for (int l = 1; l <= n_; ++l)
      fprintf(stderr, " L%d(p=%zu,s=%zu)", l, levels_[l].pairs.size(),
              levels_[l].sets.size());
    fprintf(stderr, "\n");
#endif
    if (footprint() == before) break;
    // Something changed: frontier snapshots may be stale.  Re-take them on
    // the next round and re-evaluate everything that consumed one.
    ++round_;
    for (DKey k : snapshot_users_) enqueue(k);
  }
}

StackAutomaton Engine::automaton(const std::set<Sym>& alphabet) const {
  StackAutomaton A;
  A.order = n_;
  A.alphabet = alphabet;
  A.n_states = static_cast<uint32_t>(states_.size());
  A.init = 1;
  A.def = 0;
  A.finals.assign(A.n_states, false);
  A.delta = delta_;
  return A;
}

std::vector<bool> Engine::finals_for(uint32_t top) const {
  std::vector<bool> f(states_.size(), false);
  for (SAState s = 1; s < states_.size(); ++s) {
    if (states_[s].size() != 1) continue;
    const std::vector<uint32_t>& sv = levels_[n_].sets[states_[s][0]];
    if (std::binary_search(sv.begin(), sv.end(), top)) f[s] = true;
  }
  return f;
}

// ---------------------------------------------------------------------------
// The alternating system over triples (q, O, q_1..q_m).
// ---------------------------------------------------------------------------

std::string set_name(const Machine& M, uint32_t obits) {
  std::string s = "{";
  bool first = true;
  for (Sym c = 0; c < M.outputs.size(); ++c)
    if (obits >> c & 1) {
      if (!first) s += ".";
      s += M.outputs.name(c);
      first = false;
    }
  return s + "}";
}

std::string triple_name(const Machine& M, Ctrl q, uint32_t obits,
                        const std::vector<Ctrl>& ts) {
  std::string s = "<" + M.controls.name(q) + "|" + set_name(M, obits) + "|";
  for (size_t i = 0; i < ts.size(); ++i)
    s += (i ? "." : "") + M.controls.name(ts[i]);
  return s + ">";
}

uint32_t obits_of(const std::vector<bool>& O) {
  uint32_t b = 0;
  for (size_t i = 0; i < O.size(); ++i)
    if (O[i]) b |= 1u << i;
  return b;
}

// All tuples over Q of lengths 1..k, lexicographic.
std::vector<std::vector<Ctrl>> all_tuples(size_t nq, int k) {
  std::vector<std::vector<Ctrl>> out;
  std::vector<std::vector<Ctrl>> cur{{}};
  for (int len = 1; len <= k; ++len) {
    std::vector<std::vector<Ctrl>> nxt;
    for (const auto& t : cur)
      for (Ctrl q = 0; q < nq; ++q) {
        auto t2 = t;
        t2.push_back(q);
        nxt.push_back(std::move(t2));
      }
    out.insert(out.end(), nxt.begin(), nxt.end());
    cur = std::move(nxt);
  }
  return out;
}

// The child specifications of an alternating rule: every way to split the
// tuple ts into |targets| nonempty ordered chunks (over all permutations)
// and to distribute the owed set O among the children (union = O).
struct AltSplit {
  std::vector<std::vector<Ctrl>> chunks;  // per child
  std::vector<uint32_t> obits;            // per child
};

void o_distributions(uint32_t obits, size_t nchildren, size_t bit, size_t nbits,
                     std::vector<uint32_t>& cur,
                     std::vector<std::vector<uint32_t>>& out) {
  if (bit == nbits) {
    out.push_back(cur);
    return;
  }
  if (!(obits >> bit & 1)) {
    o_distributions(obits, nchildren, bit + 1, nbits, cur, out);
    return;
  }
  // Every nonempty subset of children receives this character.
  for (uint32_t sub = 1; sub < (1u << nchildren); ++sub) {
    for (size_t i = 0; i < nchildren; ++i)
      if (sub >> i & 1) cur[i] |= 1u << bit;
    o_distributions(obits, nchildren, bit + 1, nbits, cur, out);
    for (size_t i = 0; i < nchildren; ++i)
      if (sub >> i & 1) cur[i] &= ~(1u << bit);
  }
}

std::vector<AltSplit> alt_splits(const std::vector<Ctrl>& ts, uint32_t obits,
                                 size_t nchildren, size_t nbits) {
  std::vector<AltSplit> out;
  if (ts.size() < nchildren) return out;
  std::set<std::vector<std::vector<Ctrl>>> chunkings;
  std::vector<Ctrl> perm = ts;
  std::sort(perm.begin(), perm.end());
  do {
    // Compositions of |ts| into nchildren positive parts.
    std::vector<size_t> cut(nchildren - 1);
    std::function<void(size_t, size_t)> go = [&](size_t idx, size_t prev) {
      if (idx == cut.size()) {
        std::vector<std::vector<Ctrl>> chunks;
        size_t start = 0;
        for (size_t i = 0; i <= cut.size(); ++i) {
          size_t end = i < cut.size() ? cut[i] : perm.size();
          chunks.push_back(
              std::vector<Ctrl>(perm.begin() + start, perm.begin() + end));
          start = end;
        }
        chunkings.insert(std::move(chunks));
        return;
      }
      for (size_t c = prev + 1; c + (cut.size() - idx - 1) < perm.size(); ++c) {
        cut[idx] = c;
        go(idx + 1, c);
      }
    };
    go(0, 0);
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<std::vector<uint32_t>> odists;
  std::vector<uint32_t> cur(nchildren, 0);
  o_distributions(obits, nchildren, 0, nbits, cur, odists);
  for (const auto& chunks : chunkings)
    for (const auto& od : odists) out.push_back({chunks, od});
  return out;
}

}  // namespace

AlternatingSystem build_alternating(const Machine& M) {
  if (!M.normalized)
    throw InputError("build_alternating: machine must be normalized");
  for (const Rule& r : M.rules)
    if (!r.tests.empty())
      throw InputError("build_alternating: machine must be test-free");
  if (M.outputs.size() > 16)
    throw InputError("build_alternating: too many tracked characters");

  AlternatingSystem S;
  S.order = M.order;
  for (Sym a = 0; a < M.stackalpha.size(); ++a)
    S.chars.intern(M.stackalpha.name(a));

  size_t nbits = M.outputs.size();
  uint32_t nsets = 1u << nbits;
  auto tuples = all_tuples(M.controls.size(), M.branches);
  for (Ctrl q = 0; q < M.controls.size(); ++q)
    for (uint32_t ob = 0; ob < nsets; ++ob)
      for (const auto& ts : tuples) S.controls.intern(triple_name(M, q, ob, ts));
  auto trip = [&](Ctrl q, uint32_t ob, const std::vector<Ctrl>& ts) {
    return *S.controls.find(triple_name(M, q, ob, ts));
  };

  std::set<std::tuple<Ctrl, Sym, std::vector<Ctrl>>> seen_alt;
  for (const Rule& r : M.rules) {
    if (r.targets.size() == 1) {
      for (uint32_t ob = 0; ob < nsets; ++ob) {
        uint32_t ob2 = r.out == EPS ? ob : (ob & ~(1u << r.out));
        for (const auto& ts : tuples)
          S.ord.push_back(
              {trip(r.q, ob, ts), r.guard, r.op, trip(r.targets[0], ob2, ts)});
      }
    } else {
      for (uint32_t ob = 0; ob < nsets; ++ob)
        for (const auto& ts : tuples)
          for (const AltSplit& sp :
               alt_splits(ts, ob, r.targets.size(), nbits)) {
            std::vector<Ctrl> children;
            for (size_t i = 0; i < r.targets.size(); ++i)
              children.push_back(
                  trip(r.targets[i], sp.obits[i], sp.chunks[i]));
            std::sort(children.begin(), children.end());
            children.erase(std::unique(children.begin(), children.end()),
                           children.end());
            Ctrl src = trip(r.q, ob, ts);
            if (seen_alt.insert({src, r.guard, children}).second)
              S.alt.push_back({src, r.guard, std::move(children)});
          }
    }
  }
  return S;
}

std::optional<Ctrl> alt_control(const AlternatingSystem& S, const Machine& M,
                                Ctrl q, const std::vector<bool>& O,
                                const std::vector<Ctrl>& targets) {
  return S.controls.find(triple_name(M, q, obits_of(O), targets));
}

std::vector<AltConfig> target_set(const AlternatingSystem& S, const Machine& M,
                                  const CanpopKey& key) {
  std::vector<AltConfig> out;
  std::set<Ctrl> done;
  for (Ctrl p : key.targets) {
    if (!done.insert(p).second) continue;
    auto c = alt_control(S, M, p, std::vector<bool>(M.outputs.size(), false),
                         {p});
    if (!c) throw InputError("target_set: control missing from the system");
    out.push_back({*c, Stack::sequence(S.order, {})});
  }
  return out;
}

ConfigSet prestar(const AlternatingSystem& S, const std::vector<AltConfig>& A,
                  uint64_t budget) {
  std::vector<uint32_t> E;
  for (const AltConfig& c : A) {
    if (c.stack == nullptr || c.stack->order != S.order ||
        !c.stack->elems.empty())
      throw InputError(
          "prestar: target configurations must carry the empty stack");
    E.push_back(c.q);
  }
  // Guarded-rule index.
  std::map<std::pair<Ctrl, Sym>, std::pair<std::vector<size_t>,
                                           std::vector<size_t>>>
      index;
  for (size_t i = 0; i < S.ord.size(); ++i)
    index[{S.ord[i].q, S.ord[i].a}].first.push_back(i);
  for (size_t i = 0; i < S.alt.size(); ++i)
    index[{S.alt[i].q, S.alt[i].a}].second.push_back(i);

  size_t ntop = S.controls.size();
  Engine eng(
      S.order, S.chars.size(), [ntop] { return ntop; },
      [&](Ctrl q, Sym a, std::vector<std::pair<StackOp, uint32_t>>& ord,
          std::vector<std::vector<uint32_t>>& alt) {
        auto it = index.find({q, a});
        if (it == index.end()) return;
        for (size_t i : it->second.first)
          ord.push_back({S.ord[i].op, S.ord[i].q2});
        for (size_t i : it->second.second) alt.push_back(S.alt[i].targets);
      },
      budget);
  // The resulting ConfigSet answers membership for every control.
  for (Ctrl q = 0; q < S.controls.size(); ++q) eng.observe(q);
  eng.run(E);

  std::set<Sym> alphabet;
  for (Sym a = 0; a < S.chars.size(); ++a) alphabet.insert(a);
  ConfigSet cs;
  cs.body = eng.automaton(alphabet);
  for (Ctrl q = 0; q < S.controls.size(); ++q)
    cs.finals[q] = eng.finals_for(q);
  return cs;
}

OracleAnswer member_oracle(const AlternatingSystem& S,
                           const std::vector<AltConfig>& A, const AltConfig& c,
                           int bound) {
  // Guarded-rule index (as in prestar).
  std::map<std::pair<Ctrl, Sym>, std::pair<std::vector<size_t>,
                                           std::vector<size_t>>>
      index;
  for (size_t i = 0; i < S.ord.size(); ++i)
    index[{S.ord[i].q, S.ord[i].a}].first.push_back(i);
  for (size_t i = 0; i < S.alt.size(); ++i)
    index[{S.alt[i].q, S.alt[i].a}].second.push_back(i);

  uint64_t nodes = 0;
  const uint64_t node_cap = 4'000'000;
  std::map<std::tuple<Ctrl, size_t, int>, bool> memo;
  std::vector<StackPtr> stacks;  // interned by hash+equality
  std::unordered_map<StackPtr, size_t, StackPtrHash, StackPtrEq> stack_ids;
  auto sid = [&](const StackPtr& s) {
    auto it = stack_ids.find(s);
    if (it != stack_ids.end()) return it->second;
    stacks.push_back(s);
    stack_ids.emplace(s, stacks.size() - 1);
    return stacks.size() - 1;
  };

  std::function<bool(Ctrl, const StackPtr&, int)> reach =
      [&](Ctrl q, const StackPtr& s, int depth) -> bool {
    if (++nodes > node_cap) return false;
    for (const AltConfig& t : A)
      if (t.q == q && stack_equal(*t.stack, *s)) return true;
    if (depth == 0) return false;
    auto key = std::make_tuple(q, sid(s), depth);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    memo[key] = false;
    auto tc = top_char(s);
    bool ok = false;
    if (tc) {
      auto idx = index.find({q, *tc});
      if (idx != index.end()) {
        for (size_t i : idx->second.first) {
          auto s2 = apply_op(S.ord[i].op, s);
          if (s2 && reach(S.ord[i].q2, *s2, depth - 1)) {
            ok = true;
            break;
          }
        }
        if (!ok)
          for (size_t i : idx->second.second) {
            bool all = true;
            for (Ctrl t : S.alt[i].targets)
              if (!reach(t, s, depth - 1)) {
                all = false;
                break;
              }
            if (all) {
              ok = true;
              break;
            }
          }
      }
    }
    memo[key] = ok;
    return ok;
  };
  bool r = reach(c.q, c.stack, bound);
  if (r && nodes <= node_cap) return OracleAnswer::Yes;
  return OracleAnswer::Unknown;
}

// ---------------------------------------------------------------------------
// Canpop family: one shared lazy saturation, per-key extraction.
// ---------------------------------------------------------------------------

struct CanpopFamily::Impl {
  Machine M;
  uint64_t budget;

  // Controls of the alternating system: (q, F, W, ts) where F is the full
  // output set of the key (rules may only emit inside F) and W ⊆ F the
  // still-owed characters.  Extracting (q, O, O, ts) then captures run trees
  // whose output set is exactly O.
  struct Quad {
    Ctrl q;
    uint32_t fbits;
    uint32_t obits;
    std::vector<Ctrl> ts;
  };
  std::vector<Quad> quads;
  std::map<std::tuple<Ctrl, uint32_t, uint32_t, std::vector<Ctrl>>, uint32_t>
      quad_ids;
  std::unique_ptr<Engine> engine;
  std::vector<uint32_t> E;
  std::map<CanpopKey, StackAutomaton> key_cache;

  uint32_t intern(Ctrl q, uint32_t fb, uint32_t ob,
                  const std::vector<Ctrl>& ts) {
    auto key = std::make_tuple(q, fb, ob, ts);
    auto it = quad_ids.find(key);
    if (it != quad_ids.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(quads.size());
    quads.push_back({q, fb, ob, ts});
    quad_ids.emplace(key, id);
    return id;
  }

  void expand(Ctrl t, Sym a, std::vector<std::pair<StackOp, uint32_t>>& ord,
              std::vector<std::vector<uint32_t>>& alt) {
    Quad tr = quads[t];  // copy: interning may reallocate
    size_t nbits = M.outputs.size();
    for (const Rule& r : M.rules) {
      if (r.q != tr.q || r.guard != a) continue;
      if (r.out != EPS && !(tr.fbits >> r.out & 1)) continue;
      if (r.targets.size() == 1) {
        uint32_t ob2 =
            r.out == EPS ? tr.obits : (tr.obits & ~(1u << r.out));
        ord.push_back({r.op, intern(r.targets[0], tr.fbits, ob2, tr.ts)});
      } else {
        for (const AltSplit& sp :
             alt_splits(tr.ts, tr.obits, r.targets.size(), nbits)) {
          std::vector<uint32_t> children;
          for (size_t i = 0; i < r.targets.size(); ++i)
            children.push_back(
                intern(r.targets[i], tr.fbits, sp.obits[i], sp.chunks[i]));
          std::sort(children.begin(), children.end());
          children.erase(std::unique(children.begin(), children.end()),
                         children.end());
          alt.push_back(std::move(children));
        }
      }
    }
  }
};

CanpopFamily::CanpopFamily(const Machine& M, uint64_t budget)
    : impl_(std::make_unique<Impl>()) {
  if (!M.normalized)
    throw InputError("canpop: machine must be normalized");
  if (M.order < 1) throw InputError("canpop: machine order must be >= 1");
  for (const Rule& r : M.rules)
    if (!r.tests.empty()) throw InputError("canpop: machine must be test-free");
  impl_->M = M;
  impl_->budget = budget;
  // Accepting leaves, for every full-output-set parameter: (p, F, {}, (p)).
  for (uint32_t fb = 0; fb < (1u << M.outputs.size()); ++fb)
    for (Ctrl p = 0; p < M.controls.size(); ++p)
      impl_->E.push_back(impl_->intern(p, fb, 0, {p}));
  Impl* ip = impl_.get();
  impl_->engine = std::make_unique<Engine>(
      M.order, M.stackalpha.size(), [ip] { return ip->quads.size(); },
      [ip](Ctrl t, Sym a, std::vector<std::pair<StackOp, uint32_t>>& ord,
           std::vector<std::vector<uint32_t>>& alt) {
        ip->expand(t, a, ord, alt);
      },
      budget);
}

CanpopFamily::~CanpopFamily() = default;
CanpopFamily::CanpopFamily(CanpopFamily&&) noexcept = default;

bool CanpopFamily::key_valid(const CanpopKey& key) const {
  const Machine& M = impl_->M;
  if (key.targets.empty() ||
      key.targets.size() > static_cast<size_t>(M.branches))
    return false;
  if (key.q >= M.controls.size()) return false;
  if (key.O.size() != M.outputs.size()) return false;
  int sum = 0;
  for (Ctrl t : key.targets) {
    if (t >= M.controls.size()) return false;
    sum += M.rank[t];
  }
  return sum <= M.rank[key.q];
}

const StackAutomaton& CanpopFamily::get(const CanpopKey& key) {
  auto it = impl_->key_cache.find(key);
  if (it != impl_->key_cache.end()) return it->second;
  if (!key_valid(key)) throw InputError("canpop: key violates the rank condition");
  const Machine& M = impl_->M;
  uint32_t ob = obits_of(key.O);
  // Exact output set O: full set F = O (nothing outside O may be emitted)
  // and everything in O still owed.
  uint32_t t = impl_->intern(key.q, ob, ob, key.targets);
  impl_->engine->observe(t);
  impl_->engine->run(impl_->E);
  std::set<Sym> alphabet;
  for (Sym a = 0; a < M.stackalpha.size(); ++a) alphabet.insert(a);
  StackAutomaton D = impl_->engine->automaton(alphabet);
  D.finals = impl_->engine->finals_for(t);
  D = sa_combine(CombineMode::And, D, single_outer_filter(M.order, alphabet));
  D = strip_order(D);
  return impl_->key_cache.emplace(key, std::move(D)).first->second;
}

size_t CanpopFamily::keys_built() const { return impl_->key_cache.size(); }

std::map<CanpopKey, StackAutomaton> canpop_family(const Machine& M,
                                                  uint64_t budget) {
  CanpopFamily fam(M, budget);
  std::map<CanpopKey, StackAutomaton> out;
  auto tuples = all_tuples(M.controls.size(), M.branches);
  for (Ctrl q = 0; q < M.controls.size(); ++q)
    for (uint32_t ob = 0; ob < (1u << M.outputs.size()); ++ob)
      for (const auto& ts : tuples) {
        CanpopKey key;
        key.q = q;
        key.targets = ts;
        key.O.assign(M.outputs.size(), false);
        for (Sym c = 0; c < M.outputs.size(); ++c)
          if (ob >> c & 1) key.O[c] = true;
        if (!fam.key_valid(key)) continue;
        out.emplace(key, fam.get(key));
      }
  return out;
}

}  // namespace hopda
