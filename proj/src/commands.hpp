// commands.hpp -- CLI front end: subcommand dispatch, flag handling, and
// JSON reporting.  The binary entry point and the C API both funnel through
// run_command, so exit-status semantics live in exactly one place:
// 0 = verdict/report produced, 1 = input error, 2 = budget exhausted.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "machine.hpp"
#include "reduce.hpp"

namespace hopda {

// Executes one CLI invocation (argv without the program name).  Reports go
// to `out`, diagnostics to `err`.  Never throws.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

// The JSON decision report for `decide --json` (also exposed through the C
// API).  Byte-exact deterministic.
std::string render_decide_report(const DecideResult& r,
                                 const ReduceBudgets& budgets);

}  // namespace hopda
