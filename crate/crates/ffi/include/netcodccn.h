#ifndef NETCODCCN_H
#define NETCODCCN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NccStatus {
  NCC_STATUS_OK = 0,
  NCC_STATUS_NULL_POINTER = 1,
  NCC_STATUS_INVALID_ARGUMENT = 2,
  NCC_STATUS_BUFFER_TOO_SMALL = 3,
  /**
   * Malformed segment bytes or a segment from another generation.
   */
  NCC_STATUS_BAD_SEGMENT = 4,
  /**
   * Decoding was requested before full rank.
   */
  NCC_STATUS_RANK_DEFICIENT = 5,
  NCC_STATUS_IO = 6,
  NCC_STATUS_SIMULATION = 7,
  NCC_STATUS_PANIC = 8,
} NccStatus;

typedef enum NccVariant {
  NCC_VARIANT_NET_COD = 0,
  NCC_VARIANT_CCN_DEFAULT = 1,
  NCC_VARIANT_CCN_LOAD_SHARING = 2,
  NCC_VARIANT_CCN_PARALLEL = 3,
} NccVariant;

/**
 * Codec state for one generation: a source when built from content, a
 * decoder or recoder when built empty.
 */
typedef struct NccGeneration NccGeneration;

typedef struct NccScenario NccScenario;

/**
 * Aggregate over the trials of one scenario run.
 */
typedef struct NccRunSummary {
  double mean_d;
  double stddev_d;
  /**
   * Client downloads, counted per client and seed.
   */
  uint64_t completed;
  uint64_t timed_out;
} NccRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` as a
 * NUL-terminated string, truncating if needed. Returns the full message
 * length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t ncc_last_error(char *buf, size_t cap);

/**
 * Splits `len` bytes of `data` into segments of `segment_len` bytes (the
 * last zero-padded) and builds a source for generation 0 holding all of
 * them. `generation_size` bounds the number of segments.
 *
 * # Safety
 * `prefix` must be a NUL-terminated string, `data` must point to `len`
 * readable bytes and `out` must be writable.
 */
enum NccStatus ncc_generation_from_content(const char *prefix,
                                           const uint8_t *data,
                                           size_t len,
                                           size_t segment_len,
                                           size_t generation_size,
                                           uint64_t seed,
                                           struct NccGeneration **out);

/**
 * An empty generation that accepts coded segments.
 *
 * # Safety
 * `prefix` must be a NUL-terminated string and `out` must be writable.
 */
enum NccStatus ncc_generation_new(const char *prefix,
                                  uint32_t generation,
                                  size_t generation_size,
                                  size_t segment_len,
                                  uint64_t seed,
                                  struct NccGeneration **out);

/**
 * # Safety
 * `g` must be null or a handle from this library not yet freed.
 */
void ncc_generation_free(struct NccGeneration *g);

/**
 * Rank of the stored segments, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t ncc_generation_rank(const struct NccGeneration *g);

/**
 * # Safety
 * `g` must be null or a live handle.
 */
bool ncc_generation_is_decoded(const struct NccGeneration *g);

/**
 * Writes a fresh random combination of the stored segments in wire form.
 * `written` receives the encoded length; when `cap` is too small nothing
 * is written, `written` holds the required size and `BufferTooSmall` is
 * returned.
 *
 * # Safety
 * `g` must be a live handle, `buf` must point to `cap` writable bytes and
 * `written` must be writable.
 */
enum NccStatus ncc_generation_encode(struct NccGeneration *g,
                                     uint8_t *buf,
                                     size_t cap,
                                     size_t *written);

/**
 * Offers one wire-form coded segment. `innovative` is set to whether it
 * raised the rank; non-innovative segments are discarded.
 *
 * # Safety
 * `g` must be a live handle, `buf` must point to `len` readable bytes and
 * `innovative` must be writable.
 */
enum NccStatus ncc_generation_insert(struct NccGeneration *g,
                                     const uint8_t *buf,
                                     size_t len,
                                     bool *innovative);

/**
 * Writes the decoded originals, concatenated, into `buf`, which must hold
 * generation size times segment length bytes.
 *
 * # Safety
 * `g` must be a live handle and `buf` must point to `cap` writable bytes.
 */
enum NccStatus ncc_generation_decode(const struct NccGeneration *g, uint8_t *buf, size_t cap);

/**
 * The two-source, two-client butterfly with every link at `capacity_mbps`.
 *
 * # Safety
 * `out` must be writable.
 */
enum NccStatus ncc_scenario_butterfly(double capacity_mbps,
                                      double phi,
                                      uint64_t seed,
                                      struct NccScenario **out);

/**
 * Loads a topology file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` must be writable.
 */
enum NccStatus ncc_scenario_load(const char *path, uint64_t seed, struct NccScenario **out);

/**
 * # Safety
 * `s` must be null or a live scenario handle.
 */
void ncc_scenario_free(struct NccScenario *s);

/**
 * Sets the protocol, pipeline size and Data loss rate. A negative
 * `loss_rate` keeps the per-link rates from the topology.
 *
 * # Safety
 * `s` must be a live scenario handle.
 */
enum NccStatus ncc_scenario_configure(struct NccScenario *s,
                                      enum NccVariant variant,
                                      size_t pipeline,
                                      double loss_rate);

/**
 * Runs `seeds` trials and summarizes normalized delay over all clients.
 * When `csv_path` is not null the per-client rows are written there.
 *
 * # Safety
 * `s` must be a live scenario handle, `csv_path` null or a NUL-terminated
 * string, and `out` writable.
 */
enum NccStatus ncc_scenario_run(const struct NccScenario *s,
                                size_t seeds,
                                const char *csv_path,
                                struct NccRunSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETCODCCN_H */
