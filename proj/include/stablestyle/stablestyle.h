/* C interface to the stablestyle library.
 *
 * Every fallible call returns an sst_status. On failure a description is
 * available from sst_last_error() on the same thread until the next call.
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function; freeing NULL is a no-op. Images are planar
 * float64 [C, H, W] with values in [0, 1]. */
#ifndef STABLESTYLE_H
#define STABLESTYLE_H

#include <stddef.h>

#if defined(_WIN32)
#define SST_API __declspec(dllexport)
#else
#define SST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sst_status {
  SST_OK = 0,
  SST_ERR_INVALID_ARGUMENT = 1,
  SST_ERR_IO = 2,
  SST_ERR_FORMAT = 3,
  SST_ERR_NUMERIC = 4,
  SST_ERR_STATE = 5,
  SST_ERR_INTERNAL = 6
} sst_status;

SST_API const char* sst_status_name(sst_status status);
SST_API const char* sst_last_error(void);
/* 1 for failures caused by bad input (arguments, files, formats). */
SST_API int sst_status_is_validation(sst_status status);

typedef struct sst_image sst_image;
typedef struct sst_flow sst_flow;
typedef struct sst_model sst_model;
typedef struct sst_config sst_config;

/* Images. data holds c*h*w values and is copied. */
SST_API sst_status sst_image_create(size_t c, size_t h, size_t w, const double* data, sst_image** out);
SST_API sst_status sst_image_read(const char* path, sst_image** out);
SST_API sst_status sst_image_write(const sst_image* image, const char* path);
SST_API sst_status sst_image_shape(const sst_image* image, size_t* c, size_t* h, size_t* w);
/* Borrowed pointer, valid until the image is freed. */
SST_API const double* sst_image_data(const sst_image* image);
SST_API void sst_image_free(sst_image* image);

/* Flow fields on frame t-1's grid; u and v hold h*w values each. */
SST_API sst_status sst_flow_create(size_t h, size_t w, const double* u, const double* v, sst_flow** out);
SST_API sst_status sst_flow_read(const char* path, sst_flow** out);
SST_API sst_status sst_flow_write(const sst_flow* flow, const char* path);
SST_API sst_status sst_flow_shape(const sst_flow* flow, size_t* h, size_t* w);
SST_API const double* sst_flow_u(const sst_flow* flow);
SST_API const double* sst_flow_v(const sst_flow* flow);
SST_API void sst_flow_free(sst_flow* flow);

/* Metrics. psnr writes +infinity for identical images. */
SST_API sst_status sst_psnr(const sst_image* a, const sst_image* b, double peak, double* out);
SST_API sst_status sst_ssim(const sst_image* a, const sst_image* b, double* out);

/* Bilinear warp with clamp-to-edge borders. */
SST_API sst_status sst_warp(const sst_image* frame, const sst_flow* flow, sst_image** out);
/* mask is a [1, H, W] image or NULL for all ones. */
SST_API sst_status sst_temporal_loss(const sst_image* prev, const sst_image* cur, const sst_flow* flow,
                                     const sst_image* mask, double* out);

/* Stylizer checkpoints (GSLW). prev may be NULL, meaning prev = content. */
SST_API sst_status sst_model_load(const char* path, sst_model** out);
SST_API sst_status sst_model_save(const sst_model* model, const char* path);
SST_API sst_status sst_model_stylize(const sst_model* model, const sst_image* prev, const sst_image* content,
                                     sst_image** out);
SST_API void sst_model_free(sst_model* model);

/* Command schema, for building front ends. Strings are static. */
SST_API size_t sst_command_count(void);
SST_API const char* sst_command_name(size_t command);
SST_API const char* sst_command_help(size_t command);
SST_API size_t sst_command_option_count(size_t command);
SST_API sst_status sst_command_option(size_t command, size_t option, const char** name, const char** default_value,
                                      const char** help, int* required);

/* Settings for one command run. Later sets override earlier ones, so load a
 * file first and apply explicit flags after it. */
SST_API sst_status sst_config_create(const char* command, sst_config** out);
SST_API sst_status sst_config_set(sst_config* config, const char* key, const char* value);
SST_API sst_status sst_config_load_file(sst_config* config, const char* path);
SST_API void sst_config_free(sst_config* config);

/* Runs the command; all outputs and manifest.json go under out_dir. */
SST_API sst_status sst_run(const sst_config* config, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* STABLESTYLE_H */
