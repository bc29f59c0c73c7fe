#ifndef DEXCHANGE_H
#define DEXCHANGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Solver backend for the coordinate minimizations.
typedef enum DxBackend {
  DX_SFM = 0,
  DX_SUBGRADIENT = 1,
} DxBackend;

// Cost families accepted by [`dx_solve`].
typedef enum DxCost {
  // `Σ α_i R_i` with the given weights.
  DX_LINEAR = 0,
  // `Σ R_i log R_i`; weights are ignored.
  DX_FAIR = 1,
} DxCost;

// Result of a call. The non-zero values match the exit codes of the
// `dexchange` command.
typedef enum DxStatus {
  DX_OK = 0,
  // Bad argument, null pointer or malformed input.
  DX_INVALID = 1,
  // The budget or rate vector admits no solution.
  DX_INFEASIBLE = 2,
  // No decodable code was found within the retry limit.
  DX_CONSTRUCTION = 3,
  // The user cannot decode.
  DX_DECODE = 4,
  // A Rust panic was caught at the boundary.
  DX_INTERNAL = 255,
} DxStatus;

// An instance together with its rank memo.
typedef struct DxInstance DxInstance;

// A transmission schedule.
typedef struct DxSchedule DxSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next call on the same thread.
const char *dx_last_error(void);

// Parses an instance from JSON text.
//
// # Safety
// `json` must be a nul-terminated string and `out` a valid pointer.
enum DxStatus dx_instance_from_json(const char *json, struct DxInstance **out);

// The three-user, six-packet running example over GF(`q`).
//
// # Safety
// `out` must be a valid pointer.
enum DxStatus dx_instance_example1(uint32_t q, struct DxInstance **out);

// Number of users, or 0 for a null handle.
//
// # Safety
// `inst` must be null or a live handle.
size_t dx_instance_users(const struct DxInstance *inst);

// Number of packets, or 0 for a null handle.
//
// # Safety
// `inst` must be null or a live handle.
size_t dx_instance_packets(const struct DxInstance *inst);

// Rows held by `user`, or 0 if out of range.
//
// # Safety
// `inst` must be null or a live handle.
size_t dx_instance_rows(const struct DxInstance *inst, size_t user);

// What `user` observes of the packet vector `w`: writes
// `dx_instance_rows(inst, user)` symbols to `x_out`.
//
// # Safety
// `w` must hold one symbol per packet and `x_out` room for the user's rows.
enum DxStatus dx_instance_observe(const struct DxInstance *inst,
                                  size_t user,
                                  const uint32_t *w,
                                  uint32_t *x_out);

// # Safety
// `inst` must be null or a handle not yet freed.
void dx_instance_free(struct DxInstance *inst);

// Least sum-rate that lets every user recover the file.
//
// # Safety
// `caps` is null (unbounded) or one entry per user; `out` must be valid.
enum DxStatus dx_min_sum_rate(const struct DxInstance *inst, const int64_t *caps, int64_t *out);

// Cheapest rate vector at sum-rate `beta`, or over all sum-rates when
// `beta` is negative. Writes the rates, and optionally the chosen budget
// and cost.
//
// # Safety
// `weights` must hold one entry per user for linear costs (it may be null
// for the fair cost); `caps` is null or one entry per user; `rates_out`
// must have room for one entry per user; `beta_out` and `value_out` may be
// null.
enum DxStatus dx_solve(const struct DxInstance *inst,
                       enum DxCost cost,
                       const double *weights,
                       int64_t beta,
                       const int64_t *caps,
                       enum DxBackend backend,
                       int64_t *rates_out,
                       int64_t *beta_out,
                       double *value_out);

// Random code for `rates`, retried up to `max_retries` times until every
// user can decode.
//
// # Safety
// `rates` must hold one entry per user; `out` must be valid;
// `attempts_out` may be null.
enum DxStatus dx_construct_code(const struct DxInstance *inst,
                                const int64_t *rates,
                                uint64_t seed,
                                uint64_t stream,
                                size_t max_retries,
                                struct DxSchedule **out,
                                size_t *attempts_out);

// Parses a schedule from JSON text and checks it against `inst`.
//
// # Safety
// `json` must be a nul-terminated string and `out` a valid pointer.
enum DxStatus dx_schedule_from_json(const struct DxInstance *inst,
                                    const char *json,
                                    struct DxSchedule **out);

// JSON text of the schedule, to be released with [`dx_string_free`]; null
// for a null handle.
//
// # Safety
// `sched` must be null or a live handle.
char *dx_schedule_to_json(const struct DxSchedule *sched);

// Number of transmissions, or 0 for a null handle.
//
// # Safety
// `sched` must be null or a live handle.
size_t dx_schedule_len(const struct DxSchedule *sched);

// Symbols broadcast for the packet vector `w`, one per transmission.
//
// # Safety
// `w` must hold one symbol per packet and `v_out` room for
// `dx_schedule_len(sched)` symbols.
enum DxStatus dx_schedule_transmit(const struct DxSchedule *sched,
                                   const uint32_t *w,
                                   uint32_t *v_out);

// # Safety
// `sched` must be null or a handle not yet freed.
void dx_schedule_free(struct DxSchedule *sched);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void dx_string_free(char *s);

// Per-user decodability. `per_user_out` (one entry per user) and
// `all_out` may each be null.
//
// # Safety
// Handles must be live; non-null outputs must have the stated room.
enum DxStatus dx_verify(const struct DxInstance *inst,
                        const struct DxSchedule *sched,
                        bool *per_user_out,
                        bool *all_out);

// Recovers the packet vector at `user` from its observation `x` and the
// broadcast symbols `v`.
//
// # Safety
// `x` must hold `dx_instance_rows(inst, user)` symbols, `v`
// `dx_schedule_len(sched)` symbols and `w_out` room for one per packet.
enum DxStatus dx_decode(const struct DxInstance *inst,
                        const struct DxSchedule *sched,
                        size_t user,
                        const uint32_t *x,
                        const uint32_t *v,
                        uint32_t *w_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEXCHANGE_H */
