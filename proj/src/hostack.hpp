// hostack.hpp -- nested higher-order stacks and the stack operation algebra.
//
// An order-0 stack is a single character; an order-l stack (l >= 1) is a
// finite sequence of order-(l-1) stacks with the top at the left.  Stacks are
// immutable values with structural sharing, so copies made by push are cheap
// and runs that branch can reuse them freely.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace hopda {

// Interned identifier for a stack character / control / output name.
using Sym = uint32_t;

// Bidirectional name <-> id table.  Ids are dense, starting at 0.
class SymTab {
public:
  Sym intern(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    Sym id = static_cast<Sym>(names_.size());
    names_.push_back(name);
    ids_.emplace(name, id);
    return id;
  }
  // Returns the id if present, otherwise nothing (never allocates).
  std::optional<Sym> find(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& name(Sym id) const { return names_.at(id); }
  size_t size() const { return names_.size(); }

private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Sym> ids_;
};

struct Stack;
using StackPtr = std::shared_ptr<const Stack>;

// Immutable ordered stack.  For order 0, `ch` is the character and `elems`
// is unused; for order >= 1, `elems` holds the constituents, top at index 0.
struct Stack {
  int order = 0;
  Sym ch = 0;
  std::vector<StackPtr> elems;

  static StackPtr character(Sym a) {
    auto s = std::make_shared<Stack>();
    s->order = 0;
    s->ch = a;
    return s;
  }
  static StackPtr sequence(int order, std::vector<StackPtr> elems) {
    auto s = std::make_shared<Stack>();
    s->order = order;
    s->elems = std::move(elems);
    return s;
  }
  // The order-n stack [n [n-1 ... [1 a] ... ]] holding a single character.
  static StackPtr unit(int order, Sym a);
};

bool stack_equal(const Stack& a, const Stack& b);
size_t stack_hash(const Stack& s);

struct StackPtrEq {
  bool operator()(const StackPtr& a, const StackPtr& b) const {
    return stack_equal(*a, *b);
  }
};
struct StackPtrHash {
  size_t operator()(const StackPtr& s) const { return stack_hash(*s); }
};

// Stack operations.  `level` is meaningful for Push/Pop; `ch` for Rew.
struct StackOp {
  enum Kind { Rew, Push, Pop } kind = Rew;
  Sym ch = 0;
  int level = 0;

  static StackOp rew(Sym a) { return StackOp{Rew, a, 0}; }
  static StackOp push(int l) { return StackOp{Push, 0, l}; }
  static StackOp pop(int l) { return StackOp{Pop, 0, l}; }
  bool operator==(const StackOp&) const = default;
};

// top(l, s): the topmost order-l constituent of s.  Empty result means some
// stack on the spine is empty (EmptyAlongSpine) and the caller is blocked.
std::optional<StackPtr> top(int l, const StackPtr& s);

// Convenience: the top character, if defined.
std::optional<Sym> top_char(const StackPtr& s);

// apply_op: the paper-faithful partial operation semantics.  Empty result
// means the operation is undefined on s (the transition is blocked).
std::optional<StackPtr> apply_op(const StackOp& op, const StackPtr& s);

// Letters of a stack linearization: characters and brackets [_l / ]_l.
// Characters are encoded as their (non-negative) Sym value; brackets as
// negative codes so one integer type carries the whole alphabet.
using Letter = int64_t;
inline Letter letter_char(Sym a) { return static_cast<Letter>(a); }
inline Letter letter_open(int l) { return -static_cast<Letter>(2 * l); }
inline Letter letter_close(int l) { return -static_cast<Letter>(2 * l + 1); }
inline bool letter_is_char(Letter x) { return x >= 0; }

// The bracketed word of the stack, outermost braces omitted (order >= 1).
std::vector<Letter> linearize_stack(const StackPtr& s);

// Canonical text syntax "[l e1 ... em]" / bare character for order 0.
std::string render_stack(const StackPtr& s, const SymTab& chars);
// Parses the canonical syntax; interns unseen characters into `chars`.
// Returns nullptr and sets `err` on malformed input.
StackPtr parse_stack(const std::string& text, SymTab& chars, std::string* err);

std::string render_letters(const std::vector<Letter>& w, const SymTab& chars);

}  // namespace hopda
