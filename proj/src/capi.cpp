// capi.cpp -- the extern-C surface of libhopda.  Thin translation layer:
// exceptions become status codes plus a thread-local error message, C++
// values live behind opaque handles.

#include "hopda/hopda.h"

#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "errors.hpp"
#include "machine.hpp"
#include "parse.hpp"
#include "reduce.hpp"

namespace {

thread_local std::string g_last_error = "no error";

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

// Runs `body`, translating exceptions into statuses.
template <typename F>
hopda_status guarded(F&& body) {
  try {
    body();
    return HOPDA_OK;
  } catch (const hopda::BudgetError& e) {
    g_last_error = std::string("budget exhausted (") + e.where + "): " + e.what();
    return HOPDA_ERR_BUDGET;
  } catch (const hopda::InputError& e) {
    g_last_error = e.what();
    return HOPDA_ERR_INPUT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HOPDA_ERR_INPUT;
  }
}

hopda_status arg_error(const char* msg) {
  g_last_error = msg;
  return HOPDA_ERR_ARGUMENT;
}

hopda::ReduceBudgets budgets_or_default(uint64_t sat, uint64_t ann) {
  hopda::ReduceBudgets b;
  if (sat) b.saturation = sat;
  if (ann) b.annotation = ann;
  return b;
}

}  // namespace

struct hopda_machine {
  hopda::Machine m;
};

extern "C" {

const char* hopda_last_error(void) { return g_last_error.c_str(); }

void hopda_string_free(char* s) { std::free(s); }

hopda_status hopda_machine_parse(const char* text, hopda_machine** out) {
  if (!text || !out) return arg_error("null argument");
  return guarded([&] {
    hopda::Machine m = hopda::validate_and_normalize(hopda::parse_machine(text));
    *out = new hopda_machine{std::move(m)};
  });
}

hopda_status hopda_machine_from_file(const char* path, hopda_machine** out) {
  if (!path || !out) return arg_error("null argument");
  return guarded([&] {
    hopda::Machine m =
        hopda::validate_and_normalize(hopda::parse_machine_file(path));
    *out = new hopda_machine{std::move(m)};
  });
}

void hopda_machine_free(hopda_machine* m) { delete m; }

int hopda_machine_order(const hopda_machine* m) { return m ? m->m.order : -1; }

int hopda_machine_branches(const hopda_machine* m) {
  return m ? m->m.branches : -1;
}

hopda_status hopda_machine_render(const hopda_machine* m, char** text_out) {
  if (!m || !text_out) return arg_error("null argument");
  return guarded([&] { *text_out = dup_string(hopda::render_machine(m->m)); });
}

hopda_status hopda_decide(const hopda_machine* m, const char* const* chars,
                          size_t n_chars, uint64_t saturation_budget,
                          uint64_t annotation_budget, int* unbounded_out,
                          char** report_out) {
  if (!m || !unbounded_out || (n_chars && !chars))
    return arg_error("null argument");
  return guarded([&] {
    std::vector<std::string> names;
    for (size_t i = 0; i < n_chars; ++i) {
      if (!chars[i]) throw hopda::InputError("null character name");
      names.emplace_back(chars[i]);
    }
    if (names.empty())
      for (hopda::Sym c = 0; c < m->m.outputs.size(); ++c)
        names.push_back(m->m.outputs.name(c));
    hopda::ReduceBudgets b =
        budgets_or_default(saturation_budget, annotation_budget);
    hopda::DecideResult r = hopda::decide_diagonal(m->m, names, b);
    *unbounded_out = r.unbounded ? 1 : 0;
    if (report_out)
      *report_out = dup_string(hopda::render_decide_report(r, b));
  });
}

hopda_status hopda_reduce_once(const hopda_machine* m,
                               uint64_t saturation_budget,
                               uint64_t annotation_budget,
                               hopda_machine** out) {
  if (!m || !out) return arg_error("null argument");
  return guarded([&] {
    hopda::Machine r = hopda::reduce_once(
        m->m, budgets_or_default(saturation_budget, annotation_budget));
    *out = new hopda_machine{std::move(r)};
  });
}

hopda_status hopda_enumerate(const hopda_machine* m, int depth, uint32_t cap,
                             uint64_t node_budget, char** text_out) {
  if (!m || !text_out) return arg_error("null argument");
  return guarded([&] {
    std::set<hopda::ParikhVec> vs = hopda::enumerate_parikh(
        m->m, depth, cap, node_budget ? node_budget : 50'000'000);
    std::string s = "chars:";
    for (hopda::Sym c = 0; c < m->m.outputs.size(); ++c)
      s += " " + m->m.outputs.name(c);
    s += "\n";
    for (const hopda::ParikhVec& v : vs) {
      for (size_t i = 0; i < v.size(); ++i)
        s += (i ? " " : "") + std::to_string(v[i]);
      s += "\n";
    }
    *text_out = dup_string(s);
  });
}

int hopda_run_command(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i] ? argv[i] : "");
  return hopda::run_command(args, std::cout, std::cerr);
}

}  // extern "C"
