#ifndef DECOYMAP_H
#define DECOYMAP_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DmStatus {
  DM_STATUS_OK = 0,
  DM_STATUS_NULL_ARGUMENT = 1,
  DM_STATUS_INVALID_UTF8 = 2,
  DM_STATUS_IO = 3,
  DM_STATUS_PARSE = 4,
  DM_STATUS_UNKNOWN_AS = 5,
  DM_STATUS_EMPTY_CORPUS = 6,
  DM_STATUS_INVALID_ARGUMENT = 7,
  DM_STATUS_UNDEFINED = 8,
  DM_STATUS_INTERNAL = 9,
} DmStatus;

/**
 * Inferred path corpus handle.
 */
typedef struct DmCorpus DmCorpus;

/**
 * Relationship graph handle.
 */
typedef struct DmGraph DmGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *dm_version(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *dm_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void dm_string_free(char *s);

/**
 * Builds a graph from a `ASN|ASN|CODE` relationships file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DmStatus dm_graph_from_file(const char *path, struct DmGraph **out);

/**
 * Builds a graph from relationships text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DmStatus dm_graph_from_text(const char *text, struct DmGraph **out);

/**
 * # Safety
 * `g` must be null or a handle from `dm_graph_from_*`, not yet freed.
 */
void dm_graph_free(struct DmGraph *g);

/**
 * Number of ASes, 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t dm_graph_len(const struct DmGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle, `asns` must point to `len` values and
 * `out` must be writable.
 */
enum DmStatus dm_graph_is_valley_free(const struct DmGraph *g,
                                      const uint32_t *asns,
                                      size_t len,
                                      bool *out);

/**
 * # Safety
 * `g` must be a live graph handle and `out` writable.
 */
enum DmStatus dm_graph_cone_size(const struct DmGraph *g, uint32_t asn, size_t *out);

/**
 * Infers paths from a RIB file toward the prefixes of a prefix file.
 *
 * # Safety
 * `g` must be a live graph handle, the paths NUL-terminated strings and
 * `out` writable.
 */
enum DmStatus dm_corpus_infer_files(const struct DmGraph *g,
                                    const char *rib_path,
                                    const char *prefixes_path,
                                    struct DmCorpus **out);

/**
 * Same as `dm_corpus_infer_files` with the file contents passed directly.
 *
 * # Safety
 * As for `dm_corpus_infer_files`.
 */
enum DmStatus dm_corpus_infer_text(const struct DmGraph *g,
                                   const char *rib,
                                   const char *prefixes,
                                   struct DmCorpus **out);

/**
 * Loads a corpus from a paths file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum DmStatus dm_corpus_from_file(const char *path, struct DmCorpus **out);

/**
 * # Safety
 * `c` must be null or a live corpus handle.
 */
void dm_corpus_free(struct DmCorpus *c);

/**
 * Number of stored paths, 0 for a null handle.
 *
 * # Safety
 * `c` must be null or a live corpus handle.
 */
size_t dm_corpus_path_count(const struct DmCorpus *c);

/**
 * Writes the corpus as a paths file.
 *
 * # Safety
 * `c` must be a live corpus handle and `path` a NUL-terminated string.
 */
enum DmStatus dm_corpus_write(const struct DmCorpus *c, const char *path);

/**
 * Selects key ASes and returns the placement report as JSON. The country
 * and censor files may be null.
 *
 * # Safety
 * `c` must be a live corpus handle, non-null paths NUL-terminated strings
 * and `out_json` writable. Release the result with `dm_string_free`.
 */
enum DmStatus dm_find_key_ases(const struct DmCorpus *c,
                               double threshold,
                               const char *countries_path,
                               const char *censors_path,
                               char **out_json);

/**
 * Key ASes without country information, as a plain array: writes up to
 * `cap` ASNs into `asns` and the full count into `count`.
 *
 * # Safety
 * `c` must be a live corpus handle, `asns` valid for `cap` writes (or null
 * with `cap == 0`) and `count` writable.
 */
enum DmStatus dm_key_as_list(const struct DmCorpus *c,
                             double threshold,
                             uint32_t *asns,
                             size_t cap,
                             size_t *count);

/**
 * Spearman rank correlation with average ranks for ties.
 *
 * # Safety
 * `x` and `y` must point to `len` values and `out` must be writable.
 */
enum DmStatus dm_spearman(const double *x, const double *y, size_t len, double *out);

/**
 * Deployment cost in USD. Fails with `InvalidArgument` if the product does
 * not fit in 64 bits.
 *
 * # Safety
 * `out` must be writable.
 */
enum DmStatus dm_cost_estimate(uint64_t routers, uint64_t unit_cost_usd, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DECOYMAP_H */
