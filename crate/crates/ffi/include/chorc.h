#ifndef CHORC_H
#define CHORC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Selects the choreography semantics for [`chorc_run`].
#define CHORC_SEM_SEQ 0

#define CHORC_SEM_CONC 1

// Result of every call.
typedef enum ChorcStatus {
  CHORC_STATUS_OK = 0,
  CHORC_STATUS_NULL_POINTER = 1,
  CHORC_STATUS_INVALID_UTF8 = 2,
  CHORC_STATUS_PARSE_ERROR = 3,
  // The choreography violates well-formedness.
  CHORC_STATUS_ILL_FORMED = 4,
  CHORC_STATUS_PROJECTION_ERROR = 5,
  CHORC_STATUS_INVALID_ARGUMENT = 6,
  // A bug inside the library; the call had no effect.
  CHORC_STATUS_PANIC = 7,
} ChorcStatus;

typedef struct ChorcChoreography ChorcChoreography;

typedef struct ChorcNetwork ChorcNetwork;

typedef struct ChorcState ChorcState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until
// the next call into the library from the same thread.
const char *chorc_last_error(void);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void chorc_string_free(char *s);

// Parses a choreography in surface syntax.
//
// # Safety
// `src` must be a NUL-terminated string; `out` must be writable.
enum ChorcStatus chorc_choreography_parse(const char *src, struct ChorcChoreography **out);

// # Safety
// `c` must be NULL or a handle from this library, not yet freed.
void chorc_choreography_free(struct ChorcChoreography *c);

// Canonical surface syntax of `c`.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
enum ChorcStatus chorc_choreography_print(const struct ChorcChoreography *c, char **out);

// Well-formedness diagnostics of `c` as a JSON array (empty when clean).
// Returns `IllFormed` when the array is nonempty; `out` is set either way.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
enum ChorcStatus chorc_choreography_check(const struct ChorcChoreography *c, char **out);

// Endpoint projection of a well-formed choreography.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
enum ChorcStatus chorc_choreography_project(const struct ChorcChoreography *c,
                                            struct ChorcNetwork **out);

// # Safety
// `src` must be a NUL-terminated string; `out` must be writable.
enum ChorcStatus chorc_network_parse(const char *src, struct ChorcNetwork **out);

// # Safety
// `n` must be NULL or a handle from this library, not yet freed.
void chorc_network_free(struct ChorcNetwork *n);

// # Safety
// `n` must be a live handle; `out` must be writable.
enum ChorcStatus chorc_network_print(const struct ChorcNetwork *n, char **out);

// Parses a memory state (`p.x = 1` per line).
//
// # Safety
// `src` must be a NUL-terminated string; `out` must be writable.
enum ChorcStatus chorc_state_parse(const char *src, struct ChorcState **out);

// # Safety
// `s` must be NULL or a handle from this library, not yet freed.
void chorc_state_free(struct ChorcState *s);

// # Safety
// `s` must be a live handle; `out` must be writable.
enum ChorcStatus chorc_state_print(const struct ChorcState *s, char **out);

// Executes a choreography. `sem` is [`CHORC_SEM_SEQ`] or
// [`CHORC_SEM_CONC`]; `seed` only affects the concurrent scheduler. The
// trace is written to `out_trace` as JSON; the final state to `out_state`
// unless it is NULL. A NULL `state` starts from empty memory.
//
// # Safety
// `c` must be a live handle, `state` NULL or a live handle, `out_trace`
// writable, `out_state` NULL or writable.
enum ChorcStatus chorc_run(const struct ChorcChoreography *c,
                           const struct ChorcState *state,
                           uint32_t sem,
                           uint64_t seed,
                           size_t fuel,
                           char **out_trace,
                           struct ChorcState **out_state);

// Executes a network with the seeded scheduler; outputs as for
// [`chorc_run`].
//
// # Safety
// As for [`chorc_run`], with `n` a live network handle.
enum ChorcStatus chorc_simulate(const struct ChorcNetwork *n,
                                const struct ChorcState *state,
                                uint64_t seed,
                                size_t fuel,
                                char **out_trace,
                                struct ChorcState **out_state);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHORC_H */
