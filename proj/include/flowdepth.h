/*
 * flowdepth C API: the geometric core of joint depth / optical-flow
 * estimation behind a plain C surface. All heavy state lives in opaque
 * handles; every fallible call returns fd_status and leaves a thread-local
 * message readable through fd_last_error(). Handles returned through
 * out-parameters are owned by the caller and released with the matching
 * *_destroy function.
 */
#ifndef FLOWDEPTH_H
#define FLOWDEPTH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fd_status {
    FD_OK = 0,
    FD_ERROR_NULL_ARGUMENT,
    FD_ERROR_SHAPE,        /* raster dimensions disagree */
    FD_ERROR_DOMAIN,       /* value outside its mathematical domain */
    FD_ERROR_CONFIG,       /* invalid configuration value */
    FD_ERROR_DEGENERATE,   /* degenerate problem (no parallax, zero median) */
    FD_ERROR_EMPTY_DOMAIN, /* no valid pixels to average over */
    FD_ERROR_CONSISTENCY,  /* inputs contradict each other */
    FD_ERROR_FORMAT,       /* binary file layout mismatch */
    FD_ERROR_PARSE,        /* text input could not be parsed */
    FD_ERROR_IO,           /* filesystem failure */
    FD_ERROR_OPTIMIZATION, /* optimization failed outright */
    FD_ERROR_BUFFER,       /* caller buffer too small */
    FD_ERROR_UNKNOWN
} fd_status;

const char* fd_status_name(fd_status status);
const char* fd_last_error(void);

/* ------------------------------------------------------------------ */
/* Opaque handles                                                      */
/* ------------------------------------------------------------------ */

typedef struct fd_image fd_image;   /* intensities in [0,1] + validity  */
typedef struct fd_depth fd_depth;   /* metric depth + validity          */
typedef struct fd_flow fd_flow;     /* (du,dv) displacement + validity  */
typedef struct fd_labels fd_labels; /* total region labeling            */
typedef struct fd_scene fd_scene;   /* generated synthetic scene bundle */
typedef struct fd_trace fd_trace;   /* optimizer iteration trace        */

void fd_image_destroy(fd_image* image);
void fd_depth_destroy(fd_depth* depth);
void fd_flow_destroy(fd_flow* flow);
void fd_labels_destroy(fd_labels* labels);
void fd_scene_destroy(fd_scene* scene);
void fd_trace_destroy(fd_trace* trace);

/* ------------------------------------------------------------------ */
/* Value types and configs                                             */
/* ------------------------------------------------------------------ */

typedef struct fd_intrinsics {
    double fx, fy, cx, cy;
    int32_t width, height;
} fd_intrinsics;

/* Unit quaternion (w,x,y,z) + translation. Maps source-frame camera
 * coordinates into the target frame: X_target = R X_source + t. */
typedef struct fd_pose {
    double qw, qx, qy, qz;
    double tx, ty, tz;
} fd_pose;

typedef struct fd_seg_config {
    int32_t kernels[8];
    int32_t kernel_count;
    double edge_threshold;
    int64_t min_area;
    int32_t closing_radius;
} fd_seg_config;

typedef struct fd_loss_config {
    double alpha;  /* SSIM weight; L1 weight is 1 - 2*alpha */
    double lambda; /* flow-term weight in the combined objectives */
    int32_t ssim_window;
    double ssim_c1, ssim_c2;
    int32_t smooth_l1; /* nonzero: smooth-L1 instead of plain L1 */
    double smooth_l1_delta;
} fd_loss_config;

typedef struct fd_optimize_config {
    int32_t max_iterations;
    double loss_tolerance;
    double gradient_tolerance;
    double initial_step, min_step, max_step;
    double initial_damping;
    double fd_epsilon;
    int32_t use_gauss_newton; /* nonzero: damped Gauss-Newton direction */
} fd_optimize_config;

typedef struct fd_depth_eval_config {
    double cap_min, cap_max; /* evaluable ground-truth range, meters */
    int32_t median_scaling;
} fd_depth_eval_config;

fd_seg_config fd_seg_config_default(void);
fd_loss_config fd_loss_config_default(void);
fd_optimize_config fd_optimize_config_default(void);
fd_depth_eval_config fd_depth_eval_config_default(void);

typedef struct fd_loss_report {
    double photometric_static;
    double photometric;
    double flow;
    double depth;
    double pose;
    double optical;
    int64_t photometric_pixels;
    int64_t flow_pixels;
    int32_t region_count;
} fd_loss_report;

typedef struct fd_depth_metrics {
    double abs_rel, sq_rel, rms, rms_log;
    double delta1, delta2, delta3;
    int64_t pixel_count;
} fd_depth_metrics;

typedef struct fd_flow_metrics {
    double epe, f1_all;
    int64_t pixel_count;
} fd_flow_metrics;

/* ------------------------------------------------------------------ */
/* Rasters                                                             */
/* ------------------------------------------------------------------ */

/* data is row-major channel-interleaved (height*width*channels); valid has
 * one byte per pixel. Either may be NULL: data defaults to zeros, valid to
 * all-valid. */
fd_status fd_image_create(int32_t height, int32_t width, int32_t channels, const double* data,
                          const uint8_t* valid, fd_image** out);
fd_status fd_image_dims(const fd_image* image, int32_t* height, int32_t* width,
                        int32_t* channels);
fd_status fd_image_read(const fd_image* image, double* data, uint8_t* valid);

/* valid NULL marks every strictly positive sample valid. */
fd_status fd_depth_create(int32_t height, int32_t width, const double* depth,
                          const uint8_t* valid, fd_depth** out);
fd_status fd_depth_dims(const fd_depth* depth, int32_t* height, int32_t* width);
fd_status fd_depth_read(const fd_depth* depth, double* values, uint8_t* valid);

fd_status fd_flow_create(int32_t height, int32_t width, const double* du, const double* dv,
                         const uint8_t* valid, fd_flow** out);
fd_status fd_flow_dims(const fd_flow* flow, int32_t* height, int32_t* width);
fd_status fd_flow_read(const fd_flow* flow, double* du, double* dv, uint8_t* valid);

fd_status fd_labels_create(int32_t height, int32_t width, const int32_t* labels,
                           fd_labels** out);
fd_status fd_labels_dims(const fd_labels* labels, int32_t* height, int32_t* width);
fd_status fd_labels_read(const fd_labels* labels, int32_t* values);
fd_status fd_labels_region_count(const fd_labels* labels, int32_t* count);
fd_status fd_labels_areas(const fd_labels* labels, int64_t* areas);

/* ------------------------------------------------------------------ */
/* Camera model and poses                                              */
/* ------------------------------------------------------------------ */

fd_pose fd_pose_identity(void);
fd_status fd_pose_compose(fd_pose a, fd_pose b, fd_pose* out);
fd_status fd_pose_invert(fd_pose pose, fd_pose* out);
fd_status fd_pose_apply(fd_pose pose, const double point[3], double out[3]);
fd_status fd_backproject(double u, double v, double depth, fd_intrinsics K, double out[3]);
fd_status fd_project_point(const double point[3], fd_intrinsics K, double out[2]);
fd_status fd_perturb_pose(fd_pose pose, double rot_deg, double trans_m, uint64_t seed,
                          fd_pose* out);

/* ------------------------------------------------------------------ */
/* View synthesis and flow                                             */
/* ------------------------------------------------------------------ */

fd_status fd_warp_image(const fd_image* source, const fd_depth* depth, fd_pose pose,
                        fd_intrinsics K, fd_image** out);
fd_status fd_synthesize_flow(const fd_depth* depth, fd_pose pose, fd_intrinsics K,
                             fd_flow** out);
/* min_parallax_px below 0 selects the default threshold of 0.5 px. */
fd_status fd_decompose_flow(const fd_flow* flow, fd_pose pose, fd_intrinsics K,
                            double min_parallax_px, fd_depth** out);
/* Parallel arrays of per-region parts; every pixel must be claimed once. */
fd_status fd_composite_flow(const fd_flow* const* flows, const fd_labels* const* labels,
                            const int32_t* region_ids, int32_t part_count, fd_flow** out);

/* ------------------------------------------------------------------ */
/* Motion segmentation                                                 */
/* ------------------------------------------------------------------ */

fd_status fd_segment_motion(const fd_flow* flow, fd_seg_config config, fd_labels** out);
fd_status fd_mask_image(const fd_image* image, const fd_labels* labels, int32_t region_id,
                        fd_image** out);

/* ------------------------------------------------------------------ */
/* Losses                                                              */
/* ------------------------------------------------------------------ */

fd_status fd_photometric_error(const fd_image* a, const fd_image* b, fd_loss_config config,
                               double* out);
fd_status fd_bilateral_loss(const fd_image* image_t, const fd_image* image_t1,
                            const fd_depth* depth_t, const fd_depth* depth_t1, fd_pose pose_fwd,
                            fd_pose pose_bwd, fd_intrinsics K, fd_loss_config config,
                            double* out);
/* One (fwd, bwd) pose pair per region. region_values/region_excluded, when
 * non-NULL, must hold one entry per region. */
fd_status fd_multi_region_loss(const fd_image* image_t, const fd_image* image_t1,
                               const fd_depth* depth_t, const fd_depth* depth_t1,
                               const fd_pose* poses_fwd, const fd_pose* poses_bwd,
                               int32_t pose_count, const fd_labels* labels, fd_intrinsics K,
                               fd_loss_config config, fd_loss_report* report,
                               double* region_values, int32_t* region_excluded);
fd_status fd_flow_loss(const fd_flow* predicted, const fd_flow* reference, double* out);
fd_status fd_combined_losses(double photometric, double flow, fd_loss_config config,
                             double* depth, double* pose, double* optical);

/* ------------------------------------------------------------------ */
/* Evaluation metrics                                                  */
/* ------------------------------------------------------------------ */

fd_status fd_median_scale(const fd_depth* predicted, const fd_depth* ground_truth,
                          fd_depth** scaled, double* scale);
fd_status fd_depth_metrics_compute(const fd_depth* predicted, const fd_depth* ground_truth,
                                   fd_depth_eval_config config, fd_depth_metrics* out);
fd_status fd_flow_metrics_compute(const fd_flow* predicted, const fd_flow* ground_truth,
                                  fd_flow_metrics* out);
/* csv nonzero: CSV lines, else an aligned text table. */
fd_status fd_depth_metrics_format(fd_depth_metrics metrics, int32_t csv, char* buffer,
                                  size_t capacity);
fd_status fd_flow_metrics_format(fd_flow_metrics metrics, int32_t csv, char* buffer,
                                 size_t capacity);

/* ------------------------------------------------------------------ */
/* Pose optimization                                                   */
/* ------------------------------------------------------------------ */

fd_status fd_estimate_pose(const fd_image* image_t, const fd_image* image_t1,
                           const fd_depth* depth_t, const fd_depth* depth_t1, fd_intrinsics K,
                           fd_pose init, fd_optimize_config config, fd_loss_config loss_config,
                           const fd_flow* reference_flow, fd_pose* out, fd_trace** trace);
fd_status fd_trace_length(const fd_trace* trace, int32_t* length);
fd_status fd_trace_loss(const fd_trace* trace, int32_t index, double* loss);
fd_status fd_trace_converged(const fd_trace* trace, int32_t* converged);

/* ------------------------------------------------------------------ */
/* Synthetic scenes                                                    */
/* ------------------------------------------------------------------ */

fd_status fd_scene_generate(const char* spec_text, fd_scene** out);
fd_status fd_scene_digest(const char* spec_text, uint64_t* digest);
/* Canonical serialization of the parsed spec. */
fd_status fd_scene_canonical_spec(const char* spec_text, char* buffer, size_t capacity);
/* frame is 0 (t) or 1 (t+1). */
fd_status fd_scene_image(const fd_scene* scene, int32_t frame, fd_image** out);
fd_status fd_scene_depth(const fd_scene* scene, int32_t frame, fd_depth** out);
fd_status fd_scene_flow(const fd_scene* scene, fd_flow** out);
fd_status fd_scene_labels(const fd_scene* scene, fd_labels** out);
fd_status fd_scene_intrinsics(const fd_scene* scene, fd_intrinsics* out);
fd_status fd_scene_ego(const fd_scene* scene, fd_pose* out);
fd_status fd_scene_object_count(const fd_scene* scene, int32_t* count);
fd_status fd_scene_object_motion(const fd_scene* scene, int32_t index, fd_pose* out);
/* occluded must hold height*width bytes. */
fd_status fd_scene_occlusion(const fd_scene* scene, int32_t frame, uint8_t* occluded);

/* ------------------------------------------------------------------ */
/* KITTI-format codecs and resizing                                    */
/* ------------------------------------------------------------------ */

fd_status fd_read_depth_png(const char* path, fd_depth** out);
fd_status fd_write_depth_png(const fd_depth* depth, const char* path);
fd_status fd_read_flow_png(const char* path, fd_flow** out);
fd_status fd_write_flow_png(const fd_flow* flow, const char* path);
fd_status fd_read_image_png(const char* path, fd_image** out);
fd_status fd_write_image_png(const fd_image* image, const char* path, int32_t bit_depth);
fd_status fd_read_labels_png(const char* path, fd_labels** out);
fd_status fd_write_labels_png(const fd_labels* labels, const char* path);

/* projection, when non-NULL, receives the raw 3x4 matrix (12 values). */
fd_status fd_read_calibration(const char* path, const char* key, fd_intrinsics* out,
                              double* projection);
fd_status fd_rescale_intrinsics(fd_intrinsics intrinsics, int32_t new_width, int32_t new_height,
                                fd_intrinsics* out);
fd_status fd_resize_image(const fd_image* image, int32_t new_width, int32_t new_height,
                          fd_image** out);
fd_status fd_resize_depth(const fd_depth* depth, int32_t new_width, int32_t new_height,
                          fd_depth** out);
fd_status fd_resize_flow(const fd_flow* flow, int32_t new_width, int32_t new_height,
                         fd_flow** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FLOWDEPTH_H */
