// parse.hpp -- text formats: machine files, stack-automaton blocks, and the
// small NFA format used by the nfa-diagonal subcommand.
//
// All parse errors are reported as InputError with line/column positions.

#pragma once

#include <string>

#include "base0.hpp"
#include "machine.hpp"

namespace hopda {

// Parses a machine definition (one per file).  Throws InputError.
Machine parse_machine(const std::string& text);
Machine parse_machine_file(const std::string& path);

// Parses the NFA text format:
//   states p0 p1; initial p0; finals p1;
//   chars c1 c2;
//   trans p0 c1 p0; trans p0 eps p1;
Nfa parse_nfa(const std::string& text);
Nfa parse_nfa_file(const std::string& path);

std::string read_file(const std::string& path);

}  // namespace hopda
