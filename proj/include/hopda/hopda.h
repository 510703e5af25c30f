/* hopda.h -- C interface to libhopda.
 *
 * Deciding the diagonal problem (simultaneous unboundedness) for
 * higher-order pushdown automata by iterated order reduction.
 *
 * All objects are opaque handles; every fallible call returns a
 * hopda_status and leaves a description of the failure in a thread-local
 * buffer readable through hopda_last_error().  Strings returned through
 * out-parameters are heap-allocated and must be released with
 * hopda_string_free().
 */

#ifndef HOPDA_H
#define HOPDA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hopda_status {
  HOPDA_OK = 0,
  HOPDA_ERR_INPUT = 1,  /* malformed input or semantic error */
  HOPDA_ERR_BUDGET = 2, /* an explicit resource budget was exhausted */
  HOPDA_ERR_ARGUMENT = 3 /* null handle / invalid argument */
} hopda_status;

/* A parsed (and normalized) machine. */
typedef struct hopda_machine hopda_machine;

/* Description of the most recent failure on this thread; never NULL. */
const char* hopda_last_error(void);

/* Releases a string returned by this library.  NULL is allowed. */
void hopda_string_free(char* s);

/* --- machines ----------------------------------------------------------- */

/* Parses a machine definition from text / from a file and normalizes it. */
hopda_status hopda_machine_parse(const char* text, hopda_machine** out);
hopda_status hopda_machine_from_file(const char* path, hopda_machine** out);
void hopda_machine_free(hopda_machine* m);

/* Basic observers; return -1 on a NULL handle. */
int hopda_machine_order(const hopda_machine* m);
int hopda_machine_branches(const hopda_machine* m);

/* The machine in its text file format (parseable back). */
hopda_status hopda_machine_render(const hopda_machine* m, char** text_out);

/* --- the decision procedure --------------------------------------------- */

/* Decides the diagonal problem for the named tracked characters (all of
 * them when n_chars is 0).  Budgets of 0 select the defaults.  On HOPDA_OK,
 * *unbounded_out is 1 or 0; when report_out is non-NULL it receives the
 * JSON run report. */
hopda_status hopda_decide(const hopda_machine* m, const char* const* chars,
                          size_t n_chars, uint64_t saturation_budget,
                          uint64_t annotation_budget, int* unbounded_out,
                          char** report_out);

/* One order-reduction step (order n -> n-1). */
hopda_status hopda_reduce_once(const hopda_machine* m,
                               uint64_t saturation_budget,
                               uint64_t annotation_budget,
                               hopda_machine** out);

/* Capped Parikh vectors of accepting runs of depth <= depth, one line per
 * vector of space-separated counts, preceded by a header line naming the
 * tracked characters. */
hopda_status hopda_enumerate(const hopda_machine* m, int depth, uint32_t cap,
                             uint64_t node_budget, char** text_out);

/* --- command line -------------------------------------------------------- */

/* Runs the full command-line interface (argv[0] is ignored); prints to
 * stdout/stderr and returns the process exit status:
 * 0 = verdict/report produced, 1 = input error, 2 = budget abort. */
int hopda_run_command(int argc, const char* const* argv);

#ifdef __cplusplus
}
#endif

#endif /* HOPDA_H */
