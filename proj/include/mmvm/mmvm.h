#ifndef MMVM_MMVM_H
#define MMVM_MMVM_H

#include <stddef.h>
#include <stdint.h>

#if defined(MMVM_BUILDING_LIBRARY)
#define MMVM_API __attribute__((visibility("default")))
#else
#define MMVM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mmvm_status {
  MMVM_OK = 0,
  MMVM_ERR_INVALID_ARGUMENT = 1,
  MMVM_ERR_PARSE = 2,
  MMVM_ERR_IO = 3,
  MMVM_ERR_TRANSPORT = 4,
  MMVM_ERR_NUMERIC = 5,
  MMVM_ERR_INTERNAL = 6
} mmvm_status;

/* Message of the last failed call on this thread; "" after a success. */
MMVM_API const char* mmvm_last_error(void);
MMVM_API const char* mmvm_version(void);
/* JSON object of data-format versions (manifest, checkpoint, prompts, ...). */
MMVM_API const char* mmvm_format_versions(void);
/* Frees strings returned through char** out-parameters. */
MMVM_API void mmvm_free(void* p);

/* Dataset manifests. */
typedef struct mmvm_manifest mmvm_manifest;

MMVM_API mmvm_status mmvm_manifest_load(const char* path, mmvm_manifest** out);
MMVM_API mmvm_status mmvm_manifest_parse(const char* text, size_t length, mmvm_manifest** out);
MMVM_API mmvm_status mmvm_manifest_serialize(const mmvm_manifest* m, char** out, size_t* length);
MMVM_API mmvm_status mmvm_manifest_save(const mmvm_manifest* m, const char* path);
MMVM_API void mmvm_manifest_free(mmvm_manifest* m);
MMVM_API size_t mmvm_manifest_image_count(const mmvm_manifest* m);
MMVM_API size_t mmvm_manifest_question_count(const mmvm_manifest* m);
/* Lowercase hex SHA-256 of the canonical serialization, NUL-terminated. */
MMVM_API mmvm_status mmvm_manifest_hash(const mmvm_manifest* m, char out[65]);
/* Violations as a JSON array of {entity, rule, detail}; image_root may be NULL. */
MMVM_API mmvm_status mmvm_manifest_validate(const mmvm_manifest* m, const char* image_root, char** violations_json,
                                            size_t* violation_count);

MMVM_API mmvm_status mmvm_sha256_file(const char* path, char out[65]);

/* Kernels. Vectors are dense doubles; negatives is k rows of dim values. */
MMVM_API mmvm_status mmvm_contrastive_loss(const double* anchor, const double* positive, const double* negatives,
                                           size_t k, size_t dim, double temperature, int cosine, double* loss,
                                           double* grad_anchor, double* grad_positive, double* grad_negatives);
/* feature_map is height*width cells of channels values, row-major; mask is
   mask_height*mask_width bytes (nonzero = set). */
MMVM_API mmvm_status mmvm_masked_average_pool(const double* feature_map, int channels, int height, int width,
                                              int stride, const uint8_t* mask, int mask_width, int mask_height,
                                              double* out);

/* Commands. Each *_init fills defaults; summary_json (may be NULL) receives a
   JSON object describing the run. */
typedef struct mmvm_generate_options {
  const char* source; /* "synthetic" or a YouTube-VIS style JSON path */
  const char* image_root;
  int synthetic_videos;
  double source_fps;
  double interval_seconds;
  int option_cap;
  int contour_thickness;
  uint64_t seed;
  const char* annotator; /* none | fixed | transcript | http */
  const char* annotator_arg;
  const char* annotator_model;
  const char* api_key;
  const char* record_transcript;
  int concurrency;
  int max_attempts;
  int backoff_base_ms;
  const char* output_dir;
} mmvm_generate_options;
MMVM_API void mmvm_generate_options_init(mmvm_generate_options* o);
MMVM_API mmvm_status mmvm_generate(const mmvm_generate_options* o, char** summary_json);

typedef struct mmvm_render_options {
  const char* manifest;
  const char* image_root;
  const char* output_dir;
  int resize_long_edge;
  const char* question_id; /* NULL or "" = all */
} mmvm_render_options;
MMVM_API void mmvm_render_options_init(mmvm_render_options* o);
MMVM_API mmvm_status mmvm_render(const mmvm_render_options* o, char** summary_json);

typedef struct mmvm_augment_options {
  double crop_lo;
  double crop_hi;
  int resize_target;
  double hflip_prob;
  const int* rotations;
  size_t rotation_count;
  double arbitrary_rotation_max;
  int visibility_threshold;
} mmvm_augment_options;

typedef struct mmvm_simulate_options {
  const char* manifest; /* NULL or "" = synthetic shapes corpus */
  const char* image_root;
  int synthetic_images;
  int count;
  mmvm_augment_options augment;
  uint64_t seed;
  const char* output_dir;
} mmvm_simulate_options;
MMVM_API void mmvm_simulate_options_init(mmvm_simulate_options* o);
MMVM_API mmvm_status mmvm_simulate(const mmvm_simulate_options* o, char** summary_json);

typedef struct mmvm_pretrain_options {
  int train_images;
  int train_min_objects;
  int train_max_objects;
  int heldout_pairs;
  int heldout_min_objects;
  int heldout_max_objects;
  mmvm_augment_options augment;
  int steps;
  int pairs_per_step;
  double learning_rate;
  double momentum;
  double temperature;
  int cosine;
  int hidden_dim;
  uint64_t seed;
  const char* output_dir;
} mmvm_pretrain_options;
MMVM_API void mmvm_pretrain_options_init(mmvm_pretrain_options* o);
MMVM_API mmvm_status mmvm_pretrain(const mmvm_pretrain_options* o, char** summary_json);

typedef struct mmvm_format_sft_options {
  const char* manifest;
  const char* mode; /* A | B | mix | both */
  double p_variant_b;
  uint64_t seed;
  const char* image_prefix;
  const char* output;
} mmvm_format_sft_options;
MMVM_API void mmvm_format_sft_options_init(mmvm_format_sft_options* o);
MMVM_API mmvm_status mmvm_format_sft(const mmvm_format_sft_options* o, char** summary_json);

typedef struct mmvm_evaluate_options {
  const char* manifest;
  const char* image_root; /* NULL or "" = questions sent without images */
  const char* client;     /* oracle | random | replay | http */
  const char* client_arg;
  const char* model;
  const char* api_key;
  int multi_image;
  int concurrency;
  int max_attempts;
  int backoff_base_ms;
  int resize_long_edge;
  int record_latency; /* 0 writes zero latencies */
  uint64_t seed;
  const char* output_dir;
} mmvm_evaluate_options;
MMVM_API void mmvm_evaluate_options_init(mmvm_evaluate_options* o);
MMVM_API mmvm_status mmvm_evaluate(const mmvm_evaluate_options* o, char** summary_json);

typedef struct mmvm_report_options {
  const char* manifest;
  const char* const* logs;
  size_t log_count;
  const char* format; /* table | csv | plot */
  const char* output;
} mmvm_report_options;
MMVM_API void mmvm_report_options_init(mmvm_report_options* o);
MMVM_API mmvm_status mmvm_report(const mmvm_report_options* o, char** summary_json);

/* Runs built-in invariant checks; *passed is 1 when all pass. */
MMVM_API mmvm_status mmvm_selftest(uint64_t seed, int* passed, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
