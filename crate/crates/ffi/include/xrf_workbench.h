/* Generated from the Rust sources; do not edit. */

#ifndef XRF_WORKBENCH_H
#define XRF_WORKBENCH_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

enum XrfStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  XRF_STATUS_OK = 0,
  XRF_STATUS_NULL_ARGUMENT = 1,
  XRF_STATUS_INVALID_STRING = 2,
  XRF_STATUS_INVALID_JSON = 3,
  XRF_STATUS_IO = 4,
  XRF_STATUS_BUFFER_TOO_SMALL = 5,
  XRF_STATUS_INDEX_OUT_OF_RANGE = 6,
  XRF_STATUS_DATASET = 7,
  XRF_STATUS_STATS = 8,
  XRF_STATUS_GEOMETRY = 9,
  XRF_STATUS_GROUP_LOCKED = 10,
  XRF_STATUS_UNKNOWN_GROUP = 11,
  XRF_STATUS_GROUP_LIMIT_EXCEEDED = 12,
  XRF_STATUS_UNKNOWN_POINT = 13,
  XRF_STATUS_INVALID_CONFIG = 14,
  XRF_STATUS_K_TOO_LARGE = 15,
  XRF_STATUS_REDUCTION = 16,
  XRF_STATUS_CLUSTER = 17,
  XRF_STATUS_UNSUPPORTED_VERSION = 18,
  XRF_STATUS_MALFORMED_WORKSPACE = 19,
  XRF_STATUS_PANIC = 20,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum XrfStatus XrfStatus;
#else
typedef int32_t XrfStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * A loaded point table.
 */
typedef struct XrfDataset XrfDataset;

/**
 * Named, disjoint point groups over one dataset.
 */
typedef struct XrfRegistry XrfRegistry;

typedef struct XrfBoundingBox {
  double min_x;
  double min_y;
  double max_x;
  double max_y;
} XrfBoundingBox;

/**
 * Summary of one element. `cv` is meaningful only when `has_cv` is set.
 */
typedef struct XrfSummary {
  size_t n;
  double mean;
  double sd;
  bool has_cv;
  double cv;
  double min;
  double q1;
  double median;
  double q3;
  double max;
} XrfSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *xrf_last_error_message(void);

void xrf_string_free(char *s);

/**
 * Load a CSV file. `schema_json` may be null for the default column layout.
 */
XrfStatus xrf_dataset_load_csv(const char *path,
                               const char *schema_json,
                               struct XrfDataset **out_dataset);

/**
 * Parse CSV text held in memory.
 */
XrfStatus xrf_dataset_load_csv_buffer(const uint8_t *data,
                                      size_t len,
                                      const char *source_id,
                                      const char *schema_json,
                                      struct XrfDataset **out_dataset);

void xrf_dataset_free(struct XrfDataset *ds);

XrfStatus xrf_dataset_point_count(const struct XrfDataset *ds, size_t *out_count);

XrfStatus xrf_dataset_element_count(const struct XrfDataset *ds, size_t *out_count);

/**
 * Borrowed element name, valid for the lifetime of the dataset handle.
 */
XrfStatus xrf_dataset_element_name(const struct XrfDataset *ds,
                                   size_t index,
                                   const char **out_name);

/**
 * Coordinates of point `index` into `out_xyz[3]`, and its features into
 * `out_features` (one value per element) unless that pointer is null.
 */
XrfStatus xrf_dataset_point(const struct XrfDataset *ds,
                            size_t index,
                            double *out_xyz,
                            double *out_features);

/**
 * Hex SHA-256 of the dataset content; free with `xrf_string_free`.
 */
XrfStatus xrf_dataset_content_hash(const struct XrfDataset *ds, char **out_hash);

XrfStatus xrf_dataset_bounding_box(const struct XrfDataset *ds, struct XrfBoundingBox *out_box);

XrfStatus xrf_summarize(const double *values, size_t len, struct XrfSummary *out_summary);

/**
 * Per-element summaries over the given points, in dataset element order.
 * `out_written` receives the element count even when `capacity` is too
 * small.
 */
XrfStatus xrf_group_stats(const struct XrfDataset *ds,
                          const size_t *point_ids,
                          size_t n_points,
                          struct XrfSummary *out_summaries,
                          size_t capacity,
                          size_t *out_written);

/**
 * Even-odd containment of `(x, y)` in the polygon given as `n_vertices`
 * interleaved x, y pairs.
 */
XrfStatus xrf_point_in_polygon(double x,
                               double y,
                               const double *vertices_xy,
                               size_t n_vertices,
                               bool *out_inside);

XrfStatus xrf_registry_new(size_t point_count, struct XrfRegistry **out_registry);

void xrf_registry_free(struct XrfRegistry *reg);

XrfStatus xrf_registry_group_count(const struct XrfRegistry *reg, size_t *out_count);

XrfStatus xrf_registry_create_group(struct XrfRegistry *reg,
                                    const char *name,
                                    uint32_t *out_group_id);

/**
 * Move points into a group. Points owned by locked groups are skipped;
 * the two counts may be null.
 */
XrfStatus xrf_registry_assign(struct XrfRegistry *reg,
                              uint32_t group_id,
                              const size_t *point_ids,
                              size_t n_points,
                              size_t *out_assigned,
                              size_t *out_skipped);

XrfStatus xrf_registry_remove(struct XrfRegistry *reg,
                              uint32_t group_id,
                              const size_t *point_ids,
                              size_t n_points);

XrfStatus xrf_registry_set_locked(struct XrfRegistry *reg, uint32_t group_id, bool locked);

XrfStatus xrf_registry_annotate(struct XrfRegistry *reg, uint32_t group_id, const char *annotation);

/**
 * Group owning `point`; `out_found` is false for an ungrouped point.
 */
XrfStatus xrf_registry_group_of(const struct XrfRegistry *reg,
                                size_t point,
                                bool *out_found,
                                uint32_t *out_group_id);

/**
 * Members of a group in ascending order. `out_len` receives the member
 * count even when `capacity` is too small.
 */
XrfStatus xrf_registry_members(const struct XrfRegistry *reg,
                               uint32_t group_id,
                               size_t *out_members,
                               size_t capacity,
                               size_t *out_len);

XrfStatus xrf_registry_to_json(const struct XrfRegistry *reg, char **out_json);

/**
 * Run the clustering pipeline. `config_json` is a cluster configuration
 * object; `elements_json` is an optional array of element names. The
 * result is written as JSON.
 */
XrfStatus xrf_cluster_json(const struct XrfDataset *ds,
                           const char *config_json,
                           const char *elements_json,
                           char **out_result_json);

/**
 * Group membership as CSV, one row per point.
 */
XrfStatus xrf_export_groups_csv(const struct XrfDataset *ds,
                                const struct XrfRegistry *reg,
                                char **out_csv);

/**
 * Serialize a workspace binding `reg` to `ds`, stamped with the current time.
 */
XrfStatus xrf_workspace_save(const struct XrfDataset *ds,
                             const struct XrfRegistry *reg,
                             char **out_json);

/**
 * Restore a registry from workspace JSON against `ds`. `out_mismatch` is
 * set when the workspace was saved from different data.
 */
XrfStatus xrf_workspace_load(const struct XrfDataset *ds,
                             const char *json,
                             struct XrfRegistry **out_registry,
                             bool *out_mismatch);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XRF_WORKBENCH_H */
