#include "commands.hpp"

#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "base0.hpp"
#include "errors.hpp"
#include "json.hpp"
#include "parse.hpp"
#include "saturate.hpp"
#include "scores.hpp"

namespace hopda {
namespace {

using Json = nlohmann::ordered_json;

struct CommonOpts {
  std::string file;
  bool json = false;
  bool raw = false;
  std::string chars;  // comma-separated tracked-character names
  uint64_t budget_saturation = ReduceBudgets{}.saturation;
  uint64_t budget_annotation = ReduceBudgets{}.annotation;
  uint64_t budget_enumeration = 50'000'000;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Machine parse_model(const std::string& path, bool raw) {
  Machine M = parse_machine_file(path);
  return raw ? M : validate_and_normalize(M);
}

// Tracked characters for a query: the --chars list, or every output of the
// machine when the flag is absent.
std::vector<std::string> tracked_chars(const Machine& M,
                                       const std::string& flag) {
  std::vector<std::string> names = split_commas(flag);
  if (names.empty())
    for (Sym c = 0; c < M.outputs.size(); ++c)
      names.push_back(M.outputs.name(c));
  if (names.empty()) throw InputError("machine has no tracked characters");
  return names;
}

std::string join_word(const std::vector<Out>& word,
                      const std::vector<std::string>& names) {
  if (word.empty()) return "(empty)";
  std::string s;
  for (size_t i = 0; i < word.size(); ++i) {
    if (i) s += ' ';
    s += names.at(static_cast<size_t>(word[i]));
  }
  return s;
}

Json word_json(const std::vector<Out>& word,
               const std::vector<std::string>& names) {
  Json a = Json::array();
  for (Out c : word) a.push_back(names.at(static_cast<size_t>(c)));
  return a;
}

Json witness_json(const NfaWitness& w, const std::vector<std::string>& names) {
  Json j;
  j["segments"] = Json::array();
  for (const auto& s : w.segments) j["segments"].push_back(word_json(s, names));
  j["cycles"] = Json::array();
  for (const auto& c : w.cycles) j["cycles"].push_back(word_json(c, names));
  j["cycle_chars"] = word_json(w.cycle_chars, names);
  return j;
}

void print_witness(std::ostream& out, const NfaWitness& w,
                   const std::vector<std::string>& names) {
  for (size_t i = 0; i < w.segments.size(); ++i) {
    out << "witness segment: " << join_word(w.segments[i], names) << "\n";
    if (i < w.cycles.size())
      out << "witness cycle ("
          << names.at(static_cast<size_t>(w.cycle_chars[i]))
          << "): " << join_word(w.cycles[i], names) << "\n";
  }
}

// Wall times are reported on the human-readable path only; JSON reports are
// byte-identical across runs, so they carry no timing fields.
Json report_json(const DecideResult& r, const ReduceBudgets& budgets) {
  Json j;
  j["verdict"] = r.unbounded ? "unbounded" : "bounded";
  j["chars"] = r.chars;
  j["levels"] = Json::array();
  for (const LevelStats& st : r.levels)
    j["levels"].push_back({{"order", st.order},
                           {"controls", st.controls},
                           {"rules", st.rules},
                           {"canpop_keys", st.canpop_keys}});
  j["witness"] = r.unbounded ? witness_json(r.witness, r.chars) : Json();
  j["budgets"] = {{"saturation", budgets.saturation},
                  {"annotation", budgets.annotation}};
  return j;
}

int cmd_decide(const CommonOpts& o, std::ostream& out) {
  Machine M = parse_model(o.file, o.raw);
  ReduceBudgets budgets{o.budget_saturation, o.budget_annotation};
  std::vector<std::string> chars = tracked_chars(M, o.chars);
  DecideResult r = decide_diagonal(M, chars, budgets);
  if (o.json) {
    out << report_json(r, budgets).dump(2) << "\n";
    return 0;
  }
  out << "verdict: " << (r.unbounded ? "unbounded" : "bounded") << "\n";
  out << "chars:";
  for (const auto& c : r.chars) out << ' ' << c;
  out << "\n";
  for (const LevelStats& st : r.levels)
    out << "level: order=" << st.order << " controls=" << st.controls
        << " rules=" << st.rules << " canpop_keys=" << st.canpop_keys
        << " wall_ms=" << st.wall_ms << "\n";
  if (r.unbounded) print_witness(out, r.witness, r.chars);
  return 0;
}

int cmd_reduce(const CommonOpts& o, std::ostream& out, std::ostream& err) {
  Machine M = parse_model(o.file, o.raw);
  ReduceBudgets budgets{o.budget_saturation, o.budget_annotation};
  LevelStats st;
  Machine R = reduce_once(M, budgets, &st);
  if (o.json) {
    Json j;
    j["order"] = R.order;
    j["stats"] = {{"order", st.order},
                  {"controls", st.controls},
                  {"rules", st.rules},
                  {"canpop_keys", st.canpop_keys}};
    j["machine"] = render_machine(R);
    out << j.dump(2) << "\n";
    return 0;
  }
  // stdout carries only the machine text, so the output can be piped back in.
  out << render_machine(R);
  err << "reduced order " << M.order << " -> " << R.order
      << ": controls=" << st.controls << " rules=" << st.rules
      << " canpop_keys=" << st.canpop_keys << " wall_ms=" << st.wall_ms
      << "\n";
  return 0;
}

int cmd_enumerate(const CommonOpts& o, int depth, uint32_t cap,
                  std::ostream& out) {
  Machine M = parse_model(o.file, o.raw);
  std::set<ParikhVec> vs =
      enumerate_parikh(M, depth, cap, o.budget_enumeration);
  std::vector<std::string> names;
  for (Sym c = 0; c < M.outputs.size(); ++c) names.push_back(M.outputs.name(c));
  if (o.json) {
    Json j;
    j["chars"] = names;
    j["depth"] = depth;
    j["cap"] = cap;
    j["vectors"] = Json::array();
    for (const ParikhVec& v : vs) j["vectors"].push_back(v);
    out << j.dump(2) << "\n";
    return 0;
  }
  out << "chars:";
  for (const auto& c : names) out << ' ' << c;
  out << "\n";
  for (const ParikhVec& v : vs) {
    for (size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
    out << "\n";
  }
  return 0;
}

int cmd_prestar(const CommonOpts& o, const std::string& targets_flag,
                std::ostream& out) {
  Machine M = parse_model(o.file, o.raw);
  if (M.order < 1) throw InputError("prestar: machine must have order >= 1");
  for (const Rule& r : M.rules)
    if (!r.tests.empty())
      throw InputError("prestar: machine must be test-free");
  // The machine's rules, read as a pushdown system: branching rules (which
  // normalization made stack-preserving) become alternating rules, the rest
  // ordinary ones.  Outputs are ignored.
  AlternatingSystem S;
  S.order = M.order;
  S.controls = M.controls;
  S.chars = M.stackalpha;
  for (const Rule& r : M.rules) {
    if (r.targets.size() == 1)
      S.ord.push_back(AltOrdRule{r.q, r.guard, r.op, r.targets[0]});
    else
      S.alt.push_back(AltAltRule{r.q, r.guard, r.targets});
  }
  std::vector<std::string> tnames = split_commas(targets_flag);
  std::vector<AltConfig> targets;
  StackPtr empty = Stack::sequence(M.order, {});
  if (tnames.empty()) {
    for (Ctrl f : M.finals) targets.push_back(AltConfig{f, empty});
  } else {
    for (const std::string& n : tnames) {
      auto id = M.controls.find(n);
      if (!id) throw InputError("unknown control: " + n);
      targets.push_back(AltConfig{*id, empty});
    }
  }
  ConfigSet cs = prestar(S, targets, o.budget_saturation);
  out << "order " << M.order << "\n";
  for (const auto& [q, fin] : cs.finals) {
    StackAutomaton A = cs.body;
    A.finals = fin;
    out << "control " << S.controls.name(q) << ":\n"
        << render_stackaut(A, S.chars) << "\n";
  }
  return 0;
}

int cmd_linearize(const CommonOpts& o, std::ostream& out) {
  Machine M = parse_model(o.file, /*raw=*/false);
  if (M.order != 0)
    throw InputError("linearize: machine has order " +
                     std::to_string(M.order) + ", expected 0");
  out << render_nfa(linearize0(M));
  return 0;
}

int cmd_nfa_diagonal(const CommonOpts& o, std::ostream& out) {
  Nfa N = parse_nfa_file(o.file);
  std::vector<std::string> names = split_commas(o.chars);
  if (names.empty())
    for (Sym c = 0; c < N.chars.size(); ++c) names.push_back(N.chars.name(c));
  std::vector<Out> chars;
  for (const std::string& n : names) {
    auto id = N.chars.find(n);
    if (!id) throw InputError("unknown character: " + n);
    chars.push_back(static_cast<Out>(*id));
  }
  NfaWitness w;
  bool unb = nfa_diagonal(N, chars, &w);
  std::vector<std::string> all;
  for (Sym c = 0; c < N.chars.size(); ++c) all.push_back(N.chars.name(c));
  if (o.json) {
    Json j;
    j["verdict"] = unb ? "unbounded" : "bounded";
    j["chars"] = names;
    j["witness"] = unb ? witness_json(w, all) : Json();
    out << j.dump(2) << "\n";
    return 0;
  }
  out << "verdict: " << (unb ? "unbounded" : "bounded") << "\n";
  if (unb) print_witness(out, w, all);
  return 0;
}

int cmd_score(const CommonOpts& o, int depth, size_t max_runs,
              std::ostream& out) {
  Machine M = parse_model(o.file, o.raw);
  std::vector<RunTreePtr> runs =
      enumerate_runs(M, depth, max_runs, o.budget_enumeration);
  std::vector<std::string> names;
  for (Sym c = 0; c < M.outputs.size(); ++c) names.push_back(M.outputs.name(c));
  Json jruns = Json::array();
  for (size_t i = 0; i < runs.size(); ++i) {
    DecompTreePtr t = treedecomp(M, *runs[i]);
    Json jr;
    jr["nodes"] = decomp_nodes(*t);
    jr["maxdeg"] = decomp_maxdeg(*t);
    Json scores = Json::object(), counts = Json::object();
    std::ostringstream line;
    line << "run " << i << ": nodes=" << decomp_nodes(*t)
         << " maxdeg=" << decomp_maxdeg(*t);
    for (size_t c = 0; c < names.size(); ++c) {
      int s = treescore(*t, static_cast<Out>(c));
      uint64_t n = decomp_count(*t, static_cast<Out>(c));
      scores[names[c]] = s;
      counts[names[c]] = n;
      line << " " << names[c] << ":score=" << s << ",count=" << n;
    }
    jr["scores"] = scores;
    jr["counts"] = counts;
    jruns.push_back(jr);
    if (!o.json) out << line.str() << "\n";
  }
  if (o.json) {
    Json j;
    j["chars"] = names;
    j["runs"] = jruns;
    out << j.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

std::string render_decide_report(const DecideResult& r,
                                 const ReduceBudgets& budgets) {
  return report_json(r, budgets).dump(2) + "\n";
}

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"hopda -- deciding simultaneous unboundedness for "
               "higher-order pushdown automata"};
  app.require_subcommand(1);

  CommonOpts o;
  int depth = 8;
  uint32_t cap = 100;
  size_t max_runs = 50;
  std::string targets;

  auto add_common = [&](CLI::App* sub, bool with_file = true) {
    if (with_file)
      sub->add_option("file", o.file, "input file")->required();
    sub->add_flag("--json", o.json, "emit a JSON report");
    sub->add_option("--budget-saturation", o.budget_saturation,
                    "canpop saturation budget");
    sub->add_option("--budget-annotation", o.budget_annotation,
                    "test-removal annotation budget");
    sub->add_option("--budget-enumeration", o.budget_enumeration,
                    "enumeration node budget");
  };

  CLI::App* decide = app.add_subcommand(
      "decide", "decide the diagonal problem for the tracked characters");
  add_common(decide);
  decide->add_option("--chars", o.chars,
                     "comma-separated tracked characters (default: all)");
  decide->add_flag("--raw", o.raw, "skip normalization of the input");

  CLI::App* reduce =
      app.add_subcommand("reduce", "lower the machine's order by one");
  add_common(reduce);
  reduce->add_flag("--raw", o.raw, "skip normalization of the input");

  CLI::App* enumerate = app.add_subcommand(
      "enumerate", "bounded enumeration of accepted Parikh vectors");
  add_common(enumerate);
  enumerate->add_option("--depth", depth, "run-depth bound");
  enumerate->add_option("--cap", cap, "componentwise count cap");
  enumerate->add_flag("--raw", o.raw, "skip normalization of the input");

  CLI::App* pre = app.add_subcommand(
      "prestar", "backward reachability of a control set at the empty stack");
  add_common(pre);
  pre->add_option("--targets", targets,
                  "comma-separated target controls (default: finals)");
  pre->add_flag("--raw", o.raw, "skip normalization of the input");

  CLI::App* lin = app.add_subcommand(
      "linearize", "NFA linearization of an order-0 machine");
  add_common(lin);

  CLI::App* nfad = app.add_subcommand(
      "nfa-diagonal", "diagonal decision on an NFA text file");
  add_common(nfad);
  nfad->add_option("--chars", o.chars,
                   "comma-separated tracked characters (default: all)");

  CLI::App* score = app.add_subcommand(
      "score", "decomposition-tree scores of bounded accepting runs");
  add_common(score);
  score->add_option("--depth", depth, "run-depth bound");
  score->add_option("--max-runs", max_runs, "maximum number of runs");
  score->add_flag("--raw", o.raw, "skip normalization of the input");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (decide->parsed()) return cmd_decide(o, out);
    if (reduce->parsed()) return cmd_reduce(o, out, err);
    if (enumerate->parsed()) return cmd_enumerate(o, depth, cap, out);
    if (pre->parsed()) return cmd_prestar(o, targets, out);
    if (lin->parsed()) return cmd_linearize(o, out);
    if (nfad->parsed()) return cmd_nfa_diagonal(o, out);
    if (score->parsed()) return cmd_score(o, depth, max_runs, out);
    err << "no subcommand\n";
    return 1;
  } catch (const BudgetError& e) {
    err << "budget exhausted (" << e.where << "): " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hopda
