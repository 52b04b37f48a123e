#ifndef STEMSEG_STEMSEG_H
#define STEMSEG_STEMSEG_H

#include <stddef.h>
#include <stdint.h>

#if defined(STEMSEG_BUILDING_LIBRARY)
#define STEMSEG_API __attribute__((visibility("default")))
#else
#define STEMSEG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum stemseg_status {
  STEMSEG_OK = 0,
  STEMSEG_INVALID_ARGUMENT = 1, /* bad parameter, config or spec */
  STEMSEG_IO = 2,               /* file cannot be opened or written */
  STEMSEG_FORMAT = 3,           /* malformed input file */
  STEMSEG_INTERNAL = 4
} stemseg_status;

typedef struct stemseg_raster stemseg_raster;
typedef struct stemseg_priors stemseg_priors;
typedef struct stemseg_config stemseg_config;
typedef struct stemseg_detections stemseg_detections;

typedef struct stemseg_raster_info {
  uint32_t width;
  uint32_t height;
  double gsd;
  double origin_x;
  double origin_y;
} stemseg_raster_info;

/* One detected stem. Vertices are world coordinates, counter-clockwise in the
   pixel frame, as x0 y0 x1 y1 x2 y2 x3 y3. */
typedef struct stemseg_detection_info {
  double vertices[8];
  double length_m;
  double width_m;
  double angle_deg;
  uint64_t region_id;
  double e_data;
  double e_shape;
  double e_overlap;
  double e_collin;
  double total;
} stemseg_detection_info;

STEMSEG_API const char* stemseg_version(void);

/* Message for the most recent failure on the calling thread. Never NULL. */
STEMSEG_API const char* stemseg_last_error(void);

STEMSEG_API stemseg_status stemseg_raster_load(const char* path, stemseg_raster** out);
STEMSEG_API stemseg_status stemseg_raster_info_get(const stemseg_raster* raster,
                                                   stemseg_raster_info* out);
STEMSEG_API void stemseg_raster_free(stemseg_raster* raster);

STEMSEG_API stemseg_status stemseg_priors_load(const char* path, stemseg_priors** out);
STEMSEG_API void stemseg_priors_free(stemseg_priors* priors);

/* path may be NULL for the built-in defaults. */
STEMSEG_API stemseg_status stemseg_config_load(const char* path, stemseg_config** out);
STEMSEG_API stemseg_status stemseg_config_set_seed(stemseg_config* config, uint64_t seed);
STEMSEG_API stemseg_status stemseg_config_set_workers(stemseg_config* config, uint32_t workers);
STEMSEG_API void stemseg_config_free(stemseg_config* config);

/* trace_path may be NULL. */
STEMSEG_API stemseg_status stemseg_segment(const stemseg_raster* raster,
                                           const stemseg_priors* priors,
                                           const stemseg_config* config, const char* trace_path,
                                           stemseg_detections** out);
STEMSEG_API size_t stemseg_detections_count(const stemseg_detections* detections);
STEMSEG_API stemseg_status stemseg_detections_get(const stemseg_detections* detections,
                                                  size_t index, stemseg_detection_info* out);
STEMSEG_API size_t stemseg_detections_diagnostic_count(const stemseg_detections* detections);
/* NULL when index is out of range. */
STEMSEG_API const char* stemseg_detections_diagnostic(const stemseg_detections* detections,
                                                      size_t index);
STEMSEG_API stemseg_status stemseg_detections_export_geojson(
    const stemseg_detections* detections, const char* path);
STEMSEG_API void stemseg_detections_free(stemseg_detections* detections);

STEMSEG_API stemseg_status stemseg_train_priors(const char* shapes_csv, const char* pairs_csv,
                                                const char* out_json);

/* mode is "poly" or "line". */
STEMSEG_API stemseg_status stemseg_evaluate(const char* ref_geojson, const char* det_geojson,
                                            const char* mode, const char* report_json);

/* out_shapes_csv and out_pairs_csv may be NULL; when given, a training set
   drawn from the same spec is written there. */
STEMSEG_API stemseg_status stemseg_synthesize(const char* spec_json, const char* out_raster,
                                              const char* out_truth_geojson,
                                              const char* out_shapes_csv,
                                              const char* out_pairs_csv);

#ifdef __cplusplus
}
#endif

#endif
