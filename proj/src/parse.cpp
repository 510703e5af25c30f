#include "parse.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace hopda {

namespace {

struct Token {
  std::string text;
  int line = 1;
  int col = 1;
};

bool ident_char(char c) {
  return !std::isspace(static_cast<unsigned char>(c)) && c != ';' && c != ',' &&
         c != '=' && c != '(' && c != ')' && c != '&' && c != '#' && c != '[' &&
         c != ']' && c != '-';
}

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t j = 0; j < n; ++j, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    Token t{"", line, col};
    if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
      t.text = "->";
      advance(2);
    } else if (c == ';' || c == ',' || c == '=' || c == '(' || c == ')' ||
               c == '&') {
      t.text = std::string(1, c);
      advance(1);
    } else if (c == '[' || c == ']') {
      size_t j = i + 1;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])))
        ++j;
      if (j == i + 1)
        throw InputError("parse error at line " + std::to_string(line) +
                         ", col " + std::to_string(col) +
                         ": bare bracket (expected a level, e.g. \"]1\")");
      t.text = text.substr(i, j - i);
      advance(j - i);
    } else if (c == '-') {
      throw InputError("parse error at line " + std::to_string(line) +
                       ", col " + std::to_string(col) + ": stray '-'");
    } else {
      size_t j = i;
      while (j < text.size() && ident_char(text[j])) ++j;
      t.text = text.substr(i, j - i);
      advance(j - i);
    }
    out.push_back(std::move(t));
  }
  return out;
}

struct Cursor {
  const std::vector<Token>& toks;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    if (pos < toks.size()) {
      const Token& t = toks[pos];
      throw InputError("parse error at line " + std::to_string(t.line) +
                       ", col " + std::to_string(t.col) + ": " + msg +
                       " (got '" + t.text + "')");
    }
    throw InputError("parse error at end of input: " + msg);
  }
  bool done() const { return pos >= toks.size(); }
  const Token& peek() const {
    if (done()) throw InputError("parse error: unexpected end of input");
    return toks[pos];
  }
  Token take() {
    Token t = peek();
    ++pos;
    return t;
  }
  bool accept(const std::string& s) {
    if (!done() && toks[pos].text == s) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(const std::string& s) {
    if (!accept(s)) fail("expected '" + s + "'");
  }
  Token ident(const std::string& what) {
    if (done()) fail("expected " + what);
    const Token& t = peek();
    if (t.text == ";" || t.text == "," || t.text == "=" || t.text == "->" ||
        t.text == "(" || t.text == ")" || t.text == "&")
      fail("expected " + what);
    return take();
  }
  int integer(const std::string& what) {
    Token t = ident(what);
    try {
      size_t used = 0;
      int v = std::stoi(t.text, &used);
      if (used != t.text.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw InputError("parse error at line " + std::to_string(t.line) +
                       ", col " + std::to_string(t.col) + ": expected " + what);
    }
  }
};

[[noreturn]] void unknown(const Token& t, const std::string& kind) {
  throw InputError("UnknownSymbol: " + kind + " '" + t.text + "' at line " +
                   std::to_string(t.line) + ", col " + std::to_string(t.col));
}

Sym resolve(const SymTab& tab, const Token& t, const std::string& kind) {
  auto id = tab.find(t.text);
  if (!id) unknown(t, kind);
  return *id;
}

// Letters: "[L" / "]L" bracket tokens or a declared stack character.
Letter resolve_letter(const SymTab& chars, const Token& t, int order) {
  if (!t.text.empty() && (t.text[0] == '[' || t.text[0] == ']')) {
    int l = std::stoi(t.text.substr(1));
    if (l < 1 || l >= order)
      throw InputError("parse error at line " + std::to_string(t.line) +
                       ", col " + std::to_string(t.col) + ": bracket level " +
                       std::to_string(l) + " out of range for order " +
                       std::to_string(order));
    return t.text[0] == '[' ? letter_open(l) : letter_close(l);
  }
  return letter_char(resolve(chars, t, "stack character"));
}

// Parses "states ...; init ...; finals ...; delta ...; default -> sX;".
// The `default` statement ends the block.
StackAutomaton parse_stackaut_block(Cursor& cur, const SymTab& chars,
                                    int order) {
  StackAutomaton A;
  A.order = order;
  for (Sym a = 0; a < chars.size(); ++a) A.alphabet.insert(a);
  SymTab states;
  std::vector<std::pair<Token, bool>> pending_finals;  // resolved after states
  std::vector<Token> pending_init;
  struct RawDelta {
    Token from, letter, to;
  };
  std::vector<RawDelta> deltas;
  Token def_tok;
  bool saw_default = false;
  while (!saw_default) {
    Token kw = cur.ident("stack-automaton statement");
    if (kw.text == "states") {
      while (!cur.accept(";")) states.intern(cur.ident("state name").text);
    } else if (kw.text == "init") {
      pending_init.push_back(cur.ident("state name"));
      cur.expect(";");
    } else if (kw.text == "finals") {
      while (!cur.accept(";"))
        pending_finals.push_back({cur.ident("state name"), true});
    } else if (kw.text == "delta") {
      RawDelta d;
      d.from = cur.ident("state name");
      d.letter = cur.take();
      cur.expect("->");
      d.to = cur.ident("state name");
      cur.expect(";");
      deltas.push_back(std::move(d));
    } else if (kw.text == "default") {
      cur.expect("->");
      def_tok = cur.ident("state name");
      cur.expect(";");
      saw_default = true;
    } else {
      throw InputError("parse error at line " + std::to_string(kw.line) +
                       ", col " + std::to_string(kw.col) +
                       ": unknown stack-automaton statement '" + kw.text + "'");
    }
  }
  A.n_states = static_cast<uint32_t>(states.size());
  if (A.n_states == 0) throw InputError("stack automaton has no states");
  A.finals.assign(A.n_states, false);
  auto state_of = [&](const Token& t) -> SAState {
    auto id = states.find(t.text);
    if (!id) unknown(t, "state");
    return *id;
  };
  if (pending_init.empty()) throw InputError("stack automaton has no init");
  A.init = state_of(pending_init.back());
  for (auto& [t, v] : pending_finals) A.finals[state_of(t)] = v;
  for (const RawDelta& d : deltas)
    A.delta[{state_of(d.from), resolve_letter(chars, d.letter, order)}] =
        state_of(d.to);
  A.def = state_of(def_tok);
  return A;
}

}  // namespace

Machine parse_machine(const std::string& text) {
  std::vector<Token> toks = tokenize(text);
  Cursor cur{toks};
  Machine M;
  struct RawRule {
    Token q, guard;
    std::vector<Token> tests;
    Token out;
    Token op_kw;
    Token op_arg;  // character (rew) or level (push/pop)
    std::vector<Token> targets;
  };
  std::vector<RawRule> raw_rules;
  std::vector<Token> raw_finals;
  Token raw_init_q, raw_init_a;
  bool saw_init = false;
  std::vector<std::pair<Token, int>> raw_ranks;
  std::vector<std::pair<Token, size_t>> raw_tests;  // name, index into M.tests
  bool saw_order = false;

  while (!cur.done()) {
    Token kw = cur.ident("statement");
    if (kw.text == "order") {
      M.order = cur.integer("order");
      saw_order = true;
      cur.expect(";");
    } else if (kw.text == "branches") {
      M.branches = cur.integer("branch bound");
      cur.expect(";");
    } else if (kw.text == "controls") {
      while (!cur.accept(";")) M.controls.intern(cur.ident("control").text);
    } else if (kw.text == "outputs") {
      while (!cur.accept(";")) {
        Token t = cur.ident("output character");
        if (t.text == "eps")
          throw InputError("parse error at line " + std::to_string(t.line) +
                           ", col " + std::to_string(t.col) +
                           ": 'eps' cannot be a tracked character");
        M.outputs.intern(t.text);
      }
    } else if (kw.text == "stackalpha") {
      while (!cur.accept(";"))
        M.stackalpha.intern(cur.ident("stack character").text);
    } else if (kw.text == "initial") {
      raw_init_q = cur.ident("control");
      raw_init_a = cur.ident("stack character");
      saw_init = true;
      cur.expect(";");
    } else if (kw.text == "final") {
      while (!cur.accept(";")) raw_finals.push_back(cur.ident("control"));
    } else if (kw.text == "rank") {
      while (!cur.accept(";")) {
        Token q = cur.ident("control");
        cur.expect("=");
        int v = cur.integer("rank value");
        raw_ranks.push_back({q, v});
      }
    } else if (kw.text == "test") {
      Token name = cur.ident("test name");
      cur.expect("=");
      if (!saw_order)
        throw InputError("parse error at line " + std::to_string(name.line) +
                         ": 'order' must precede test blocks");
      M.tests.push_back(parse_stackaut_block(cur, M.stackalpha, M.order));
      M.test_names.push_back(name.text);
      raw_tests.push_back({name, M.tests.size() - 1});
    } else if (kw.text == "rule") {
      RawRule r;
      r.q = cur.ident("control");
      cur.expect(",");
      r.guard = cur.ident("stack character");
      if (cur.accept(",")) {
        Token t = cur.ident("'test' or output");
        if (t.text != "test") cur.fail("expected 'test' before '->'");
        r.tests.push_back(cur.ident("test name"));
        while (cur.accept("&")) r.tests.push_back(cur.ident("test name"));
      }
      cur.expect("->");
      r.out = cur.ident("output");
      cur.expect(",");
      r.op_kw = cur.ident("operation");
      cur.expect("(");
      r.op_arg = cur.ident("operation argument");
      cur.expect(")");
      cur.expect(",");
      while (!cur.accept(";")) r.targets.push_back(cur.ident("target control"));
      raw_rules.push_back(std::move(r));
    } else {
      throw InputError("parse error at line " + std::to_string(kw.line) +
                       ", col " + std::to_string(kw.col) +
                       ": unknown statement '" + kw.text + "'");
    }
  }

  if (!saw_order) throw InputError("machine file missing 'order'");
  if (M.controls.size() == 0) throw InputError("machine file has no controls");
  if (M.stackalpha.size() == 0)
    throw InputError("machine file has no stack alphabet");
  if (!saw_init) throw InputError("machine file missing 'initial'");
  M.initial = resolve(M.controls, raw_init_q, "control");
  M.initial_char = resolve(M.stackalpha, raw_init_a, "stack character");
  for (const Token& t : raw_finals)
    M.finals.push_back(resolve(M.controls, t, "control"));
  M.rank.assign(M.controls.size(), 1);
  for (auto& [t, v] : raw_ranks) M.rank[resolve(M.controls, t, "control")] = v;

  SymTab test_index;
  for (size_t i = 0; i < M.test_names.size(); ++i)
    test_index.intern(M.test_names[i]);
  for (const RawRule& rr : raw_rules) {
    Rule r;
    r.q = resolve(M.controls, rr.q, "control");
    r.guard = resolve(M.stackalpha, rr.guard, "stack character");
    for (const Token& t : rr.tests) {
      auto id = test_index.find(t.text);
      if (!id) unknown(t, "test");
      r.tests.push_back(*id);
    }
    r.out = rr.out.text == "eps"
                ? EPS
                : static_cast<Out>(resolve(M.outputs, rr.out, "output"));
    if (rr.op_kw.text == "rew") {
      r.op = StackOp::rew(resolve(M.stackalpha, rr.op_arg, "stack character"));
    } else if (rr.op_kw.text == "push" || rr.op_kw.text == "pop") {
      int l = 0;
      try {
        l = std::stoi(rr.op_arg.text);
      } catch (...) {
        unknown(rr.op_arg, "operation level");
      }
      r.op = rr.op_kw.text == "push" ? StackOp::push(l) : StackOp::pop(l);
    } else {
      throw InputError("parse error at line " + std::to_string(rr.op_kw.line) +
                       ", col " + std::to_string(rr.op_kw.col) +
                       ": unknown operation '" + rr.op_kw.text + "'");
    }
    for (const Token& t : rr.targets)
      r.targets.push_back(resolve(M.controls, t, "control"));
    M.rules.push_back(std::move(r));
  }
  return M;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Machine parse_machine_file(const std::string& path) {
  return parse_machine(read_file(path));
}

Nfa parse_nfa(const std::string& text) {
  std::vector<Token> toks = tokenize(text);
  Cursor cur{toks};
  Nfa N;
  std::vector<Token> raw_finals, raw_init;
  struct RawTrans {
    Token from, sym, to;
  };
  std::vector<RawTrans> raw_trans;
  while (!cur.done()) {
    Token kw = cur.ident("statement");
    if (kw.text == "states") {
      while (!cur.accept(";")) N.states.intern(cur.ident("state").text);
    } else if (kw.text == "initial") {
      raw_init.push_back(cur.ident("state"));
      cur.expect(";");
    } else if (kw.text == "finals") {
      while (!cur.accept(";")) raw_finals.push_back(cur.ident("state"));
    } else if (kw.text == "chars") {
      while (!cur.accept(";")) {
        Token t = cur.ident("character");
        if (t.text == "eps")
          throw InputError("parse error at line " + std::to_string(t.line) +
                           ": 'eps' cannot be a tracked character");
        N.chars.intern(t.text);
      }
    } else if (kw.text == "trans") {
      RawTrans t;
      t.from = cur.ident("state");
      t.sym = cur.ident("character or eps");
      t.to = cur.ident("state");
      cur.expect(";");
      raw_trans.push_back(std::move(t));
    } else {
      throw InputError("parse error at line " + std::to_string(kw.line) +
                       ", col " + std::to_string(kw.col) +
                       ": unknown statement '" + kw.text + "'");
    }
  }
  if (N.states.size() == 0) throw InputError("NFA file has no states");
  if (raw_init.empty()) throw InputError("NFA file missing 'initial'");
  N.init = resolve(N.states, raw_init.back(), "state");
  N.finals.assign(N.states.size(), false);
  for (const Token& t : raw_finals)
    N.finals[resolve(N.states, t, "state")] = true;
  for (const RawTrans& t : raw_trans) {
    NfaTrans tr;
    tr.from = resolve(N.states, t.from, "state");
    tr.sym = t.sym.text == "eps"
                 ? EPS
                 : static_cast<Out>(resolve(N.chars, t.sym, "character"));
    tr.to = resolve(N.states, t.to, "state");
    N.trans.push_back(tr);
  }
  return N;
}

Nfa parse_nfa_file(const std::string& path) { return parse_nfa(read_file(path)); }

}  // namespace hopda
