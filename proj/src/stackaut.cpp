#include "stackaut.hpp"

#include <sstream>
#include <stdexcept>

namespace hopda {

SAState sa_fold(const StackAutomaton& A, const std::vector<Letter>& w) {
  SAState s = A.init;
  for (auto it = w.rbegin(); it != w.rend(); ++it) s = A.next(s, *it);
  return s;
}

bool sa_run(const StackAutomaton& A, const StackPtr& s) {
  return A.is_final(sa_fold(A, linearize_stack(s)));
}

StackAutomaton sa_true(int order, const std::set<Sym>& alphabet) {
  StackAutomaton A;
  A.order = order;
  A.alphabet = alphabet;
  A.n_states = 1;
  A.init = 0;
  A.def = 0;
  A.finals = {true};
  return A;
}

StackAutomaton sa_false(int order, const std::set<Sym>& alphabet) {
  StackAutomaton A = sa_true(order, alphabet);
  A.finals = {false};
  return A;
}

StackAutomaton sa_combine(CombineMode mode, const StackAutomaton& A,
                          const StackAutomaton& B) {
  if (A.order != B.order)
    throw std::runtime_error("sa_combine: order mismatch");
  StackAutomaton P;
  P.order = A.order;
  P.alphabet = A.alphabet;
  P.alphabet.insert(B.alphabet.begin(), B.alphabet.end());
  P.n_states = A.n_states * B.n_states;
  auto enc = [&](SAState a, SAState b) { return a * B.n_states + b; };
  P.init = enc(A.init, B.init);
  P.def = enc(A.def, B.def);
  P.finals.assign(P.n_states, false);
  for (SAState a = 0; a < A.n_states; ++a)
    for (SAState b = 0; b < B.n_states; ++b) {
      bool fa = A.is_final(a), fb = B.is_final(b);
      P.finals[enc(a, b)] = mode == CombineMode::And ? (fa && fb) : (fa || fb);
    }
  // Per-state explicit letters of each operand.
  std::map<SAState, std::set<Letter>> la, lb;
  for (const auto& [key, _] : A.delta) la[key.first].insert(key.second);
  for (const auto& [key, _] : B.delta) lb[key.first].insert(key.second);
  for (SAState a = 0; a < A.n_states; ++a)
    for (SAState b = 0; b < B.n_states; ++b) {
      std::set<Letter> letters = la[a];
      letters.insert(lb[b].begin(), lb[b].end());
      for (Letter x : letters)
        P.delta[{enc(a, b), x}] = enc(A.next(a, x), B.next(b, x));
    }
  return P;
}

StackAutomaton sa_complement(const StackAutomaton& A) {
  StackAutomaton C = A;
  for (size_t i = 0; i < C.finals.size(); ++i) C.finals[i] = !C.finals[i];
  return C;
}

StackAutomaton single_outer_filter(int m, const std::set<Sym>& alphabet) {
  // States: 0 = nothing read yet, 1 = inside the single element,
  // 2 = exactly one element read (final), 3 = sink.
  StackAutomaton A;
  A.order = m;
  A.alphabet = alphabet;
  A.n_states = 4;
  A.init = 0;
  A.def = 3;
  A.finals = {false, false, true, false};
  if (m == 1) {
    // Elements are bare characters: accept exactly one of them.
    for (Sym a : alphabet) {
      A.delta[{0, letter_char(a)}] = 2;
    }
    return A;
  }
  A.delta[{0, letter_close(m - 1)}] = 1;
  for (Sym a : alphabet) A.delta[{1, letter_char(a)}] = 1;
  for (int l = 1; l <= m - 2; ++l) {
    A.delta[{1, letter_open(l)}] = 1;
    A.delta[{1, letter_close(l)}] = 1;
  }
  A.delta[{1, letter_open(m - 1)}] = 2;
  return A;
}

StackAutomaton strip_order(const StackAutomaton& A) {
  if (A.order < 1) throw std::runtime_error("strip_order: order must be >= 1");
  if (A.order == 1) {
    // [1 a] and the bare order-0 character share the linearization "a"
    // (level-0 braces do not exist), so only the order changes.
    StackAutomaton B = A;
    B.order = 0;
    return B;
  }
  StackAutomaton B;
  B.order = A.order - 1;
  B.alphabet = A.alphabet;
  B.n_states = A.n_states;
  B.def = A.def;
  // Reading [m u] bottom-up means A first sees ]_{m-1}, then the body of u,
  // then [_{m-1}; pre-/post-compose accordingly.
  B.init = A.next(A.init, letter_close(A.order - 1));
  B.finals.assign(A.n_states, false);
  for (SAState s = 0; s < A.n_states; ++s)
    B.finals[s] = A.is_final(A.next(s, letter_open(A.order - 1)));
  for (const auto& [key, to] : A.delta) {
    if (key.second == letter_open(A.order - 1) ||
        key.second == letter_close(A.order - 1))
      continue;
    B.delta[key] = to;
  }
  return B;
}

bool ConfigSet::contains(Sym control, const StackPtr& stack) const {
  auto it = finals.find(control);
  if (it == finals.end()) return false;
  SAState s = sa_fold(body, linearize_stack(stack));
  return s < it->second.size() && it->second[s];
}

namespace {

std::string letter_name(Letter x, const SymTab& chars) {
  if (letter_is_char(x)) return chars.name(static_cast<Sym>(x));
  long code = static_cast<long>(-x);
  return (code % 2 == 0 ? "[" : "]") + std::to_string(code / 2);
}

}  // namespace

std::string render_stackaut(const StackAutomaton& A, const SymTab& chars) {
  std::ostringstream os;
  os << "states";
  for (SAState s = 0; s < A.n_states; ++s) os << " s" << s;
  os << "; init s" << A.init << "; finals";
  for (SAState s = 0; s < A.n_states; ++s)
    if (A.is_final(s)) os << " s" << s;
  os << ";";
  for (const auto& [key, to] : A.delta)
    os << " delta s" << key.first << " " << letter_name(key.second, chars)
       << " -> s" << to << ";";
  os << " default -> s" << A.def << ";";
  return os.str();
}

}  // namespace hopda
