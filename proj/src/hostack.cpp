#include "hostack.hpp"

#include <functional>
#include <sstream>

namespace hopda {

StackPtr Stack::unit(int order, Sym a) {
  StackPtr s = Stack::character(a);
  for (int l = 1; l <= order; ++l) s = Stack::sequence(l, {s});
  return s;
}

bool stack_equal(const Stack& a, const Stack& b) {
  if (a.order != b.order) return false;
  if (a.order == 0) return a.ch == b.ch;
  if (a.elems.size() != b.elems.size()) return false;
  for (size_t i = 0; i < a.elems.size(); ++i) {
    if (a.elems[i] != b.elems[i] && !stack_equal(*a.elems[i], *b.elems[i]))
      return false;
  }
  return true;
}

size_t stack_hash(const Stack& s) {
  size_t h = std::hash<int>()(s.order) * 0x9e3779b97f4a7c15ull;
  if (s.order == 0) {
    h ^= std::hash<Sym>()(s.ch) + 0x9e3779b9;
    return h;
  }
  for (const auto& e : s.elems)
    h = h * 1099511628211ull ^ stack_hash(*e);
  return h;
}

std::optional<StackPtr> top(int l, const StackPtr& s) {
  if (!s || l < 0 || l >= s->order) return std::nullopt;
  StackPtr cur = s;
  while (cur->order > l) {
    if (cur->elems.empty()) return std::nullopt;  // EmptyAlongSpine
    cur = cur->elems.front();
  }
  return cur;
}

std::optional<Sym> top_char(const StackPtr& s) {
  if (s && s->order == 0) return s->ch;
  auto t = top(0, s);
  if (!t) return std::nullopt;
  return (*t)->ch;
}

namespace {

// Rebuilds the spine above level `l` after replacing the top order-l part.
// `f` receives the order-l stack (the sequence whose front is the top
// order-(l-1) element for push/pop, or the order-0 character for rew) and
// returns its replacement, or nothing if the operation is undefined there.
std::optional<StackPtr> edit_top(
    int l, const StackPtr& s,
    const std::function<std::optional<StackPtr>(const StackPtr&)>& f) {
  if (s->order == l) return f(s);
  if (s->elems.empty()) return std::nullopt;  // EmptyAlongSpine
  auto sub = edit_top(l, s->elems.front(), f);
  if (!sub) return std::nullopt;
  std::vector<StackPtr> elems = s->elems;
  elems.front() = *sub;
  return Stack::sequence(s->order, std::move(elems));
}

}  // namespace

std::optional<StackPtr> apply_op(const StackOp& op, const StackPtr& s) {
  if (!s) return std::nullopt;
  switch (op.kind) {
    case StackOp::Rew:
      // Replace the topmost character.
      if (s->order == 0) return Stack::character(op.ch);
      return edit_top(0, s, [&](const StackPtr&) -> std::optional<StackPtr> {
        return Stack::character(op.ch);
      });
    case StackOp::Push:
      if (op.level < 1 || op.level > s->order) return std::nullopt;
      return edit_top(op.level, s,
                      [&](const StackPtr& t) -> std::optional<StackPtr> {
                        if (t->elems.empty()) return std::nullopt;
                        std::vector<StackPtr> elems;
                        elems.reserve(t->elems.size() + 1);
                        elems.push_back(t->elems.front());
                        for (const auto& e : t->elems) elems.push_back(e);
                        return Stack::sequence(t->order, std::move(elems));
                      });
    case StackOp::Pop:
      if (op.level < 1 || op.level > s->order) return std::nullopt;
      return edit_top(op.level, s,
                      [&](const StackPtr& t) -> std::optional<StackPtr> {
                        if (t->elems.empty()) return std::nullopt;
                        std::vector<StackPtr> elems(t->elems.begin() + 1,
                                                    t->elems.end());
                        return Stack::sequence(t->order, std::move(elems));
                      });
  }
  return std::nullopt;
}

namespace {

void linearize_into(const StackPtr& s, bool outermost,
                    std::vector<Letter>& out) {
  if (s->order == 0) {
    out.push_back(letter_char(s->ch));
    return;
  }
  if (!outermost) out.push_back(letter_open(s->order));
  for (const auto& e : s->elems) linearize_into(e, false, out);
  if (!outermost) out.push_back(letter_close(s->order));
}

}  // namespace

std::vector<Letter> linearize_stack(const StackPtr& s) {
  std::vector<Letter> out;
  linearize_into(s, true, out);
  return out;
}

std::string render_stack(const StackPtr& s, const SymTab& chars) {
  if (s->order == 0) return chars.name(s->ch);
  std::ostringstream os;
  os << '[' << s->order;
  for (const auto& e : s->elems) os << ' ' << render_stack(e, chars);
  os << ']';
  return os.str();
}

namespace {

struct StackParser {
  const std::string& text;
  size_t pos = 0;
  SymTab& chars;
  std::string err;

  void skip_ws() {
    while (pos < text.size() && isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }
  bool fail(const std::string& m) {
    err = m + " at offset " + std::to_string(pos);
    return false;
  }
  bool parse(StackPtr& out) {
    skip_ws();
    if (pos >= text.size()) return fail("unexpected end of input");
    if (text[pos] == '[') {
      ++pos;
      skip_ws();
      size_t start = pos;
      while (pos < text.size() && isdigit(static_cast<unsigned char>(text[pos])))
        ++pos;
      if (start == pos) return fail("expected order after '['");
      int order = std::stoi(text.substr(start, pos - start));
      if (order < 1) return fail("stack order must be >= 1");
      std::vector<StackPtr> elems;
      for (;;) {
        skip_ws();
        if (pos < text.size() && text[pos] == ']') {
          ++pos;
          break;
        }
        StackPtr e;
        if (!parse(e)) return false;
        if (e->order != order - 1)
          return fail("element of order " + std::to_string(e->order) +
                      " inside order-" + std::to_string(order) + " stack");
        elems.push_back(std::move(e));
      }
      out = Stack::sequence(order, std::move(elems));
      return true;
    }
    // Bare character (order 0).
    size_t start = pos;
    while (pos < text.size() &&
           !isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '[' && text[pos] != ']')
      ++pos;
    if (start == pos) return fail("expected character or '['");
    out = Stack::character(chars.intern(text.substr(start, pos - start)));
    return true;
  }
};

}  // namespace

StackPtr parse_stack(const std::string& text, SymTab& chars, std::string* err) {
  StackParser p{text, 0, chars, {}};
  StackPtr out;
  if (!p.parse(out)) {
    if (err) *err = p.err;
    return nullptr;
  }
  p.skip_ws();
  if (p.pos != text.size()) {
    if (err) *err = "trailing input at offset " + std::to_string(p.pos);
    return nullptr;
  }
  return out;
}

std::string render_letters(const std::vector<Letter>& w, const SymTab& chars) {
  std::ostringstream os;
  bool first = true;
  for (Letter x : w) {
    if (!first) os << ' ';
    first = false;
    if (letter_is_char(x)) {
      os << chars.name(static_cast<Sym>(x));
    } else {
      long code = static_cast<long>(-x);
      if (code % 2 == 0)
        os << "[" << code / 2;
      else
        os << "]" << code / 2;
    }
  }
  return os.str();
}

}  // namespace hopda
