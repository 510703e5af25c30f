/* hopda_cli.cpp -- the `hopda` executable.  All logic lives behind the C
 * API; this is only the process entry point. */

#include "hopda/hopda.h"

int main(int argc, char** argv) {
  return hopda_run_command(argc, const_cast<const char* const*>(argv));
}
