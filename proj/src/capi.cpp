#include "flowdepth.h"

#include <cstring>
#include <string>

#include "flowdepth/flow.hpp"
#include "flowdepth/geometry.hpp"
#include "flowdepth/kitti_io.hpp"
#include "flowdepth/loss.hpp"
#include "flowdepth/metrics.hpp"
#include "flowdepth/optimize.hpp"
#include "flowdepth/segmentation.hpp"
#include "flowdepth/synth.hpp"

struct fd_image {
    flowdepth::ImageBuffer value;
};
struct fd_depth {
    flowdepth::DepthMap value;
};
struct fd_flow {
    flowdepth::FlowField value;
};
struct fd_labels {
    flowdepth::RegionLabels value;
};
struct fd_scene {
    flowdepth::SceneSpec spec;
    flowdepth::SceneBundle bundle;
};
struct fd_trace {
    flowdepth::OptimizeTrace value;
};

namespace {

using namespace flowdepth;

thread_local std::string g_last_error;

fd_status fail(fd_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <typename Fn>
fd_status guarded(Fn&& fn) {
    try {
        fn();
        return FD_OK;
    } catch (const OptimizationError& e) {
        return fail(FD_ERROR_OPTIMIZATION, e.what());
    } catch (const ShapeError& e) {
        return fail(FD_ERROR_SHAPE, e.what());
    } catch (const ConfigError& e) {
        return fail(FD_ERROR_CONFIG, e.what());
    } catch (const DegenerateError& e) {
        return fail(FD_ERROR_DEGENERATE, e.what());
    } catch (const EmptyDomainError& e) {
        return fail(FD_ERROR_EMPTY_DOMAIN, e.what());
    } catch (const ConsistencyError& e) {
        return fail(FD_ERROR_CONSISTENCY, e.what());
    } catch (const FormatError& e) {
        return fail(FD_ERROR_FORMAT, e.what());
    } catch (const ParseError& e) {
        return fail(FD_ERROR_PARSE, e.what());
    } catch (const IoError& e) {
        return fail(FD_ERROR_IO, e.what());
    } catch (const DomainError& e) {
        return fail(FD_ERROR_DOMAIN, e.what());
    } catch (const Error& e) {
        return fail(FD_ERROR_UNKNOWN, e.what());
    } catch (const std::exception& e) {
        return fail(FD_ERROR_UNKNOWN, e.what());
    }
}

fd_status require(bool ok, const char* what) {
    return ok ? FD_OK : fail(FD_ERROR_NULL_ARGUMENT, std::string("null argument: ") + what);
}

PoseSE3 to_pose(fd_pose p) {
    return PoseSE3(Eigen::Quaterniond(p.qw, p.qx, p.qy, p.qz),
                   Eigen::Vector3d(p.tx, p.ty, p.tz));
}

fd_pose from_pose(const PoseSE3& p) {
    fd_pose out;
    out.qw = p.rotation.w();
    out.qx = p.rotation.x();
    out.qy = p.rotation.y();
    out.qz = p.rotation.z();
    out.tx = p.translation.x();
    out.ty = p.translation.y();
    out.tz = p.translation.z();
    return out;
}

Intrinsics to_intrinsics(fd_intrinsics k) {
    return Intrinsics(k.fx, k.fy, k.cx, k.cy, k.width, k.height);
}

fd_intrinsics from_intrinsics(const Intrinsics& k) {
    return fd_intrinsics{k.fx, k.fy, k.cx, k.cy, k.width, k.height};
}

SegmentationConfig to_seg_config(fd_seg_config c) {
    SegmentationConfig out;
    if (c.kernel_count < 0 || c.kernel_count > 8)
        throw ConfigError("fd_seg_config: kernel count must lie in [0, 8]");
    out.kernels.assign(c.kernels, c.kernels + c.kernel_count);
    out.edge_threshold = c.edge_threshold;
    out.min_area = c.min_area;
    out.closing_radius = c.closing_radius;
    out.validate();
    return out;
}

LossConfig to_loss_config(fd_loss_config c) {
    LossConfig out;
    out.alpha = c.alpha;
    out.lambda = c.lambda;
    out.ssim_window = c.ssim_window;
    out.ssim_c1 = c.ssim_c1;
    out.ssim_c2 = c.ssim_c2;
    out.smooth_l1 = c.smooth_l1 != 0;
    out.smooth_l1_delta = c.smooth_l1_delta;
    out.validate();
    return out;
}

OptimizeConfig to_optimize_config(fd_optimize_config c) {
    OptimizeConfig out;
    out.max_iterations = c.max_iterations;
    out.loss_tolerance = c.loss_tolerance;
    out.gradient_tolerance = c.gradient_tolerance;
    out.initial_step = c.initial_step;
    out.min_step = c.min_step;
    out.max_step = c.max_step;
    out.initial_damping = c.initial_damping;
    out.fd_epsilon = c.fd_epsilon;
    out.method = c.use_gauss_newton ? OptimizeConfig::Method::gauss_newton
                                    : OptimizeConfig::Method::gradient_descent;
    out.validate();
    return out;
}

DepthEvalConfig to_eval_config(fd_depth_eval_config c) {
    DepthEvalConfig out;
    out.cap_min = c.cap_min;
    out.cap_max = c.cap_max;
    out.median_scaling = c.median_scaling != 0;
    out.validate();
    return out;
}

fd_status copy_string(const std::string& text, char* buffer, size_t capacity) {
    if (!buffer)
        return fail(FD_ERROR_NULL_ARGUMENT, "null argument: buffer");
    if (text.size() + 1 > capacity)
        return fail(FD_ERROR_BUFFER, "buffer holds " + std::to_string(capacity) +
                                         " bytes, need " + std::to_string(text.size() + 1));
    std::memcpy(buffer, text.c_str(), text.size() + 1);
    return FD_OK;
}

} // namespace

extern "C" {

const char* fd_status_name(fd_status status) {
    switch (status) {
    case FD_OK: return "ok";
    case FD_ERROR_NULL_ARGUMENT: return "null argument";
    case FD_ERROR_SHAPE: return "shape error";
    case FD_ERROR_DOMAIN: return "domain error";
    case FD_ERROR_CONFIG: return "config error";
    case FD_ERROR_DEGENERATE: return "degenerate error";
    case FD_ERROR_EMPTY_DOMAIN: return "empty domain error";
    case FD_ERROR_CONSISTENCY: return "consistency error";
    case FD_ERROR_FORMAT: return "format error";
    case FD_ERROR_PARSE: return "parse error";
    case FD_ERROR_IO: return "io error";
    case FD_ERROR_OPTIMIZATION: return "optimization error";
    case FD_ERROR_BUFFER: return "buffer too small";
    default: return "unknown error";
    }
}

const char* fd_last_error(void) { return g_last_error.c_str(); }

void fd_image_destroy(fd_image* image) { delete image; }
void fd_depth_destroy(fd_depth* depth) { delete depth; }
void fd_flow_destroy(fd_flow* flow) { delete flow; }
void fd_labels_destroy(fd_labels* labels) { delete labels; }
void fd_scene_destroy(fd_scene* scene) { delete scene; }
void fd_trace_destroy(fd_trace* trace) { delete trace; }

fd_seg_config fd_seg_config_default(void) {
    fd_seg_config c{};
    c.kernels[0] = 3;
    c.kernels[1] = 5;
    c.kernels[2] = 9;
    c.kernel_count = 3;
    c.edge_threshold = 0.5;
    c.min_area = 3000;
    c.closing_radius = 2;
    return c;
}

fd_loss_config fd_loss_config_default(void) {
    fd_loss_config c{};
    c.alpha = 0.45;
    c.lambda = 0.1;
    c.ssim_window = 3;
    c.ssim_c1 = 0.01 * 0.01;
    c.ssim_c2 = 0.03 * 0.03;
    c.smooth_l1 = 0;
    c.smooth_l1_delta = 1.0;
    return c;
}

fd_optimize_config fd_optimize_config_default(void) {
    fd_optimize_config c{};
    OptimizeConfig d;
    c.max_iterations = d.max_iterations;
    c.loss_tolerance = d.loss_tolerance;
    c.gradient_tolerance = d.gradient_tolerance;
    c.initial_step = d.initial_step;
    c.min_step = d.min_step;
    c.max_step = d.max_step;
    c.initial_damping = d.initial_damping;
    c.fd_epsilon = d.fd_epsilon;
    c.use_gauss_newton = d.method == OptimizeConfig::Method::gauss_newton ? 1 : 0;
    return c;
}

fd_depth_eval_config fd_depth_eval_config_default(void) {
    fd_depth_eval_config c{};
    c.cap_min = 0.0;
    c.cap_max = 120.0;
    c.median_scaling = 1;
    return c;
}

/* ---------------- rasters ---------------- */

fd_status fd_image_create(int32_t height, int32_t width, int32_t channels, const double* data,
                          const uint8_t* valid, fd_image** out) {
    if (fd_status s = require(out != nullptr, "out"))
        return s;
    return guarded([&] {
        ImageBuffer image(height, width, channels);
        if (data)
            image.data.assign(data, data + image.size() * channels);
        if (valid)
            image.valid.assign(valid, valid + image.size());
        image.validate();
        *out = new fd_image{std::move(image)};
    });
}

fd_status fd_image_dims(const fd_image* image, int32_t* height, int32_t* width,
                        int32_t* channels) {
    if (fd_status s = require(image != nullptr, "image"))
        return s;
    if (height)
        *height = image->value.height;
    if (width)
        *width = image->value.width;
    if (channels)
        *channels = image->value.channels;
    return FD_OK;
}

fd_status fd_image_read(const fd_image* image, double* data, uint8_t* valid) {
    if (fd_status s = require(image != nullptr, "image"))
        return s;
    if (data)
        std::memcpy(data, image->value.data.data(), image->value.data.size() * sizeof(double));
    if (valid)
        std::memcpy(valid, image->value.valid.data(), image->value.valid.size());
    return FD_OK;
}

fd_status fd_depth_create(int32_t height, int32_t width, const double* depth,
                          const uint8_t* valid, fd_depth** out) {
    if (fd_status s = require(out != nullptr, "out"))
        return s;
    return guarded([&] {
        DepthMap map(height, width);
        if (depth)
            map.depth.assign(depth, depth + map.size());
        if (valid)
            map.valid.assign(valid, valid + map.size());
        else
            for (std::size_t i = 0; i < map.size(); ++i)
                map.valid[i] = map.depth[i] > 0.0 ? 1 : 0;
        map.validate();
        *out = new fd_depth{std::move(map)};
    });
}

fd_status fd_depth_dims(const fd_depth* depth, int32_t* height, int32_t* width) {
    if (fd_status s = require(depth != nullptr, "depth"))
        return s;
    if (height)
        *height = depth->value.height;
    if (width)
        *width = depth->value.width;
    return FD_OK;
}

fd_status fd_depth_read(const fd_depth* depth, double* values, uint8_t* valid) {
    if (fd_status s = require(depth != nullptr, "depth"))
        return s;
    if (values)
        std::memcpy(values, depth->value.depth.data(),
                    depth->value.depth.size() * sizeof(double));
    if (valid)
        std::memcpy(valid, depth->value.valid.data(), depth->value.valid.size());
    return FD_OK;
}

fd_status fd_flow_create(int32_t height, int32_t width, const double* du, const double* dv,
                         const uint8_t* valid, fd_flow** out) {
    if (fd_status s = require(out != nullptr, "out"))
        return s;
    return guarded([&] {
        FlowField flow(height, width);
        if (du)
            flow.du.assign(du, du + flow.size());
        if (dv)
            flow.dv.assign(dv, dv + flow.size());
        if (valid)
            flow.valid.assign(valid, valid + flow.size());
        flow.validate();
        *out = new fd_flow{std::move(flow)};
    });
}

fd_status fd_flow_dims(const fd_flow* flow, int32_t* height, int32_t* width) {
    if (fd_status s = require(flow != nullptr, "flow"))
        return s;
    if (height)
        *height = flow->value.height;
    if (width)
        *width = flow->value.width;
    return FD_OK;
}

fd_status fd_flow_read(const fd_flow* flow, double* du, double* dv, uint8_t* valid) {
    if (fd_status s = require(flow != nullptr, "flow"))
        return s;
    if (du)
        std::memcpy(du, flow->value.du.data(), flow->value.du.size() * sizeof(double));
    if (dv)
        std::memcpy(dv, flow->value.dv.data(), flow->value.dv.size() * sizeof(double));
    if (valid)
        std::memcpy(valid, flow->value.valid.data(), flow->value.valid.size());
    return FD_OK;
}

fd_status fd_labels_create(int32_t height, int32_t width, const int32_t* labels,
                           fd_labels** out) {
    if (fd_status s = require(out != nullptr && labels != nullptr, "labels/out"))
        return s;
    return guarded([&] {
        RegionLabels value;
        value.height = height;
        value.width = width;
        value.labels.assign(labels, labels + static_cast<std::size_t>(height) * width);
        value.recount();
        *out = new fd_labels{std::move(value)};
    });
}

fd_status fd_labels_dims(const fd_labels* labels, int32_t* height, int32_t* width) {
    if (fd_status s = require(labels != nullptr, "labels"))
        return s;
    if (height)
        *height = labels->value.height;
    if (width)
        *width = labels->value.width;
    return FD_OK;
}

fd_status fd_labels_read(const fd_labels* labels, int32_t* values) {
    if (fd_status s = require(labels != nullptr && values != nullptr, "labels/values"))
        return s;
    std::memcpy(values, labels->value.labels.data(),
                labels->value.labels.size() * sizeof(int32_t));
    return FD_OK;
}

fd_status fd_labels_region_count(const fd_labels* labels, int32_t* count) {
    if (fd_status s = require(labels != nullptr && count != nullptr, "labels/count"))
        return s;
    *count = labels->value.region_count;
    return FD_OK;
}

fd_status fd_labels_areas(const fd_labels* labels, int64_t* areas) {
    if (fd_status s = require(labels != nullptr && areas != nullptr, "labels/areas"))
        return s;
    std::memcpy(areas, labels->value.areas.data(), labels->value.areas.size() * sizeof(int64_t));
    return FD_OK;
}

/* ---------------- camera model and poses ---------------- */

fd_pose fd_pose_identity(void) { return fd_pose{1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}; }

fd_status fd_pose_compose(fd_pose a, fd_pose b, fd_pose* out) {
    if (fd_status s = require(out != nullptr, "out"))
        return s;
    return guarded([&] { *out = from_pose(to_pose(a) * to_pose(b)); });
}

fd_status fd_pose_invert(fd_pose pose, fd_pose* out) {
    if (fd_status s = require(out != nullptr, "out"))
        return s;
    return guarded([&] { *out = from_pose(to_pose(pose).inverse()); });
}

fd_status fd_pose_apply(fd_pose pose, const double point[3], double out[3]) {
    if (fd_status s = require(point != nullptr && out != nullptr, "point/out"))
        return s;
    return guarded([&] {
        const Eigen::Vector3d r =
            to_pose(pose).apply(Eigen::Vector3d(point[0], point[1], point[2]));
        out[0] = r.x();
        out[1] = r.y();
        out[2] = r.z();
    });
}

fd_status fd_backproject(double u, double v, double depth, fd_intrinsics K, double out[3]) {
    if (fd_status s = require(out != nullptr, "out"))
        return s;
    return guarded([&] {
        const Eigen::Vector3d r = backproject(u, v, depth, to_intrinsics(K));
        out[0] = r.x();
        out[1] = r.y();
        out[2] = r.z();
    });
}

fd_status fd_project_point(const double point[3], fd_intrinsics K, double out[2]) {
    if (fd_status s = require(point != nullptr && out != nullptr, "point/out"))
        return s;
    return guarded([&] {
        const Eigen::Vector2d r =
            project_point(Eigen::Vector3d(point[0], point[1], point[2]), to_intrinsics(K));
        out[0] = r.x();
        out[1] = r.y();
    });
}

fd_status fd_perturb_pose(fd_pose pose, double rot_deg, double trans_m, uint64_t seed,
                          fd_pose* out) {
    if (fd_status s = require(out != nullptr, "out"))
        return s;
    return guarded(
        [&] { *out = from_pose(perturb_pose(to_pose(pose), rot_deg, trans_m, seed)); });
}

/* ---------------- view synthesis and flow ---------------- */

fd_status fd_warp_image(const fd_image* source, const fd_depth* depth, fd_pose pose,
                        fd_intrinsics K, fd_image** out) {
    if (fd_status s =
            require(source != nullptr && depth != nullptr && out != nullptr, "source/depth/out"))
        return s;
    return guarded([&] {
        *out = new fd_image{
            warp_image(source->value, depth->value, to_pose(pose), to_intrinsics(K))};
    });
}

fd_status fd_synthesize_flow(const fd_depth* depth, fd_pose pose, fd_intrinsics K,
                             fd_flow** out) {
    if (fd_status s = require(depth != nullptr && out != nullptr, "depth/out"))
        return s;
    return guarded([&] {
        *out = new fd_flow{synthesize_flow(depth->value, to_pose(pose), to_intrinsics(K))};
    });
}

fd_status fd_decompose_flow(const fd_flow* flow, fd_pose pose, fd_intrinsics K,
                            double min_parallax_px, fd_depth** out) {
    if (fd_status s = require(flow != nullptr && out != nullptr, "flow/out"))
        return s;
    return guarded([&] {
        const double threshold = min_parallax_px < 0.0 ? 0.5 : min_parallax_px;
        *out = new fd_depth{
            decompose_flow(flow->value, to_pose(pose), to_intrinsics(K), threshold)};
    });
}

fd_status fd_composite_flow(const fd_flow* const* flows, const fd_labels* const* labels,
                            const int32_t* region_ids, int32_t part_count, fd_flow** out) {
    if (fd_status s = require(flows != nullptr && labels != nullptr && region_ids != nullptr &&
                                  out != nullptr && part_count > 0,
                              "flows/labels/region_ids/out"))
        return s;
    return guarded([&] {
        std::vector<FlowPart> parts;
        for (int32_t i = 0; i < part_count; ++i) {
            if (!flows[i] || !labels[i])
                throw ShapeError("fd_composite_flow: null part");
            parts.push_back(FlowPart{&flows[i]->value, &labels[i]->value, region_ids[i]});
        }
        *out = new fd_flow{composite_flow(parts)};
    });
}

/* ---------------- motion segmentation ---------------- */

fd_status fd_segment_motion(const fd_flow* flow, fd_seg_config config, fd_labels** out) {
    if (fd_status s = require(flow != nullptr && out != nullptr, "flow/out"))
        return s;
    return guarded(
        [&] { *out = new fd_labels{segment_motion(flow->value, to_seg_config(config))}; });
}

fd_status fd_mask_image(const fd_image* image, const fd_labels* labels, int32_t region_id,
                        fd_image** out) {
    if (fd_status s =
            require(image != nullptr && labels != nullptr && out != nullptr, "image/labels/out"))
        return s;
    return guarded(
        [&] { *out = new fd_image{mask_image(image->value, labels->value, region_id)}; });
}

/* ---------------- losses ---------------- */

fd_status fd_photometric_error(const fd_image* a, const fd_image* b, fd_loss_config config,
                               double* out) {
    if (fd_status s = require(a != nullptr && b != nullptr && out != nullptr, "a/b/out"))
        return s;
    return guarded(
        [&] { *out = photometric_error(a->value, b->value, to_loss_config(config)); });
}

fd_status fd_bilateral_loss(const fd_image* image_t, const fd_image* image_t1,
                            const fd_depth* depth_t, const fd_depth* depth_t1, fd_pose pose_fwd,
                            fd_pose pose_bwd, fd_intrinsics K, fd_loss_config config,
                            double* out) {
    if (fd_status s = require(image_t != nullptr && image_t1 != nullptr && depth_t != nullptr &&
                                  depth_t1 != nullptr && out != nullptr,
                              "images/depths/out"))
        return s;
    return guarded([&] {
        *out = bilateral_reprojection_loss(image_t->value, image_t1->value, depth_t->value,
                                           depth_t1->value, to_pose(pose_fwd), to_pose(pose_bwd),
                                           to_intrinsics(K), to_loss_config(config));
    });
}

fd_status fd_multi_region_loss(const fd_image* image_t, const fd_image* image_t1,
                               const fd_depth* depth_t, const fd_depth* depth_t1,
                               const fd_pose* poses_fwd, const fd_pose* poses_bwd,
                               int32_t pose_count, const fd_labels* labels, fd_intrinsics K,
                               fd_loss_config config, fd_loss_report* report,
                               double* region_values, int32_t* region_excluded) {
    if (fd_status s = require(image_t != nullptr && image_t1 != nullptr && depth_t != nullptr &&
                                  depth_t1 != nullptr && poses_fwd != nullptr &&
                                  poses_bwd != nullptr && labels != nullptr && report != nullptr,
                              "images/depths/poses/labels/report"))
        return s;
    return guarded([&] {
        std::vector<std::pair<PoseSE3, PoseSE3>> poses;
        for (int32_t i = 0; i < pose_count; ++i)
            poses.emplace_back(to_pose(poses_fwd[i]), to_pose(poses_bwd[i]));
        const LossReport result =
            multi_region_loss(image_t->value, image_t1->value, depth_t->value, depth_t1->value,
                              poses, labels->value, to_intrinsics(K), to_loss_config(config));
        *report = fd_loss_report{};
        report->photometric_static = result.photometric_static;
        report->photometric = result.photometric;
        report->photometric_pixels = result.photometric_pixels;
        report->region_count = static_cast<int32_t>(result.region_terms.size());
        for (std::size_t i = 0; i < result.region_terms.size(); ++i) {
            if (region_values)
                region_values[i] = result.region_terms[i].value;
            if (region_excluded)
                region_excluded[i] = result.region_terms[i].excluded ? 1 : 0;
        }
    });
}

fd_status fd_flow_loss(const fd_flow* predicted, const fd_flow* reference, double* out) {
    if (fd_status s = require(predicted != nullptr && reference != nullptr && out != nullptr,
                              "predicted/reference/out"))
        return s;
    return guarded([&] { *out = flow_loss(predicted->value, reference->value); });
}

fd_status fd_combined_losses(double photometric, double flow, fd_loss_config config,
                             double* depth, double* pose, double* optical) {
    return guarded([&] {
        const CombinedLosses c = combined_losses(photometric, flow, to_loss_config(config));
        if (depth)
            *depth = c.depth;
        if (pose)
            *pose = c.pose;
        if (optical)
            *optical = c.optical;
    });
}

/* ---------------- metrics ---------------- */

fd_status fd_median_scale(const fd_depth* predicted, const fd_depth* ground_truth,
                          fd_depth** scaled, double* scale) {
    if (fd_status s =
            require(predicted != nullptr && ground_truth != nullptr, "predicted/ground_truth"))
        return s;
    return guarded([&] {
        auto [map, factor] = median_scale(predicted->value, ground_truth->value);
        if (scaled)
            *scaled = new fd_depth{std::move(map)};
        if (scale)
            *scale = factor;
    });
}

fd_status fd_depth_metrics_compute(const fd_depth* predicted, const fd_depth* ground_truth,
                                   fd_depth_eval_config config, fd_depth_metrics* out) {
    if (fd_status s = require(predicted != nullptr && ground_truth != nullptr && out != nullptr,
                              "predicted/ground_truth/out"))
        return s;
    return guarded([&] {
        const DepthMetrics m =
            depth_metrics(predicted->value, ground_truth->value, to_eval_config(config));
        *out = fd_depth_metrics{m.abs_rel, m.sq_rel, m.rms,    m.rms_log,
                                m.delta1,  m.delta2, m.delta3, m.pixel_count};
    });
}

fd_status fd_flow_metrics_compute(const fd_flow* predicted, const fd_flow* ground_truth,
                                  fd_flow_metrics* out) {
    if (fd_status s = require(predicted != nullptr && ground_truth != nullptr && out != nullptr,
                              "predicted/ground_truth/out"))
        return s;
    return guarded([&] {
        const FlowMetrics m = flow_metrics(predicted->value, ground_truth->value);
        *out = fd_flow_metrics{m.epe, m.f1_all, m.pixel_count};
    });
}

fd_status fd_depth_metrics_format(fd_depth_metrics metrics, int32_t csv, char* buffer,
                                  size_t capacity) {
    DepthMetrics m;
    m.abs_rel = metrics.abs_rel;
    m.sq_rel = metrics.sq_rel;
    m.rms = metrics.rms;
    m.rms_log = metrics.rms_log;
    m.delta1 = metrics.delta1;
    m.delta2 = metrics.delta2;
    m.delta3 = metrics.delta3;
    m.pixel_count = metrics.pixel_count;
    return copy_string(csv ? depth_metrics_csv(m) : depth_metrics_table(m), buffer, capacity);
}

fd_status fd_flow_metrics_format(fd_flow_metrics metrics, int32_t csv, char* buffer,
                                 size_t capacity) {
    FlowMetrics m;
    m.epe = metrics.epe;
    m.f1_all = metrics.f1_all;
    m.pixel_count = metrics.pixel_count;
    return copy_string(csv ? flow_metrics_csv(m) : flow_metrics_table(m), buffer, capacity);
}

/* ---------------- pose optimization ---------------- */

fd_status fd_estimate_pose(const fd_image* image_t, const fd_image* image_t1,
                           const fd_depth* depth_t, const fd_depth* depth_t1, fd_intrinsics K,
                           fd_pose init, fd_optimize_config config, fd_loss_config loss_config,
                           const fd_flow* reference_flow, fd_pose* out, fd_trace** trace) {
    if (fd_status s = require(image_t != nullptr && image_t1 != nullptr && depth_t != nullptr &&
                                  depth_t1 != nullptr && out != nullptr,
                              "images/depths/out"))
        return s;
    return guarded([&] {
        auto [pose, run] = estimate_pose(image_t->value, image_t1->value, depth_t->value,
                                         depth_t1->value, to_intrinsics(K), to_pose(init),
                                         to_optimize_config(config), to_loss_config(loss_config),
                                         reference_flow ? &reference_flow->value : nullptr);
        *out = from_pose(pose);
        if (trace)
            *trace = new fd_trace{std::move(run)};
    });
}

fd_status fd_trace_length(const fd_trace* trace, int32_t* length) {
    if (fd_status s = require(trace != nullptr && length != nullptr, "trace/length"))
        return s;
    *length = static_cast<int32_t>(trace->value.losses.size());
    return FD_OK;
}

fd_status fd_trace_loss(const fd_trace* trace, int32_t index, double* loss) {
    if (fd_status s = require(trace != nullptr && loss != nullptr, "trace/loss"))
        return s;
    if (index < 0 || index >= static_cast<int32_t>(trace->value.losses.size()))
        return fail(FD_ERROR_DOMAIN, "fd_trace_loss: index out of range");
    *loss = trace->value.losses[index];
    return FD_OK;
}

fd_status fd_trace_converged(const fd_trace* trace, int32_t* converged) {
    if (fd_status s = require(trace != nullptr && converged != nullptr, "trace/converged"))
        return s;
    *converged = trace->value.converged ? 1 : 0;
    return FD_OK;
}

/* ---------------- synthetic scenes ---------------- */

fd_status fd_scene_generate(const char* spec_text, fd_scene** out) {
    if (fd_status s = require(spec_text != nullptr && out != nullptr, "spec_text/out"))
        return s;
    return guarded([&] {
        SceneSpec spec = parse_scene_spec(spec_text);
        SceneBundle bundle = generate(spec);
        *out = new fd_scene{std::move(spec), std::move(bundle)};
    });
}

fd_status fd_scene_digest(const char* spec_text, uint64_t* digest) {
    if (fd_status s = require(spec_text != nullptr && digest != nullptr, "spec_text/digest"))
        return s;
    return guarded([&] { *digest = scene_spec_digest(parse_scene_spec(spec_text)); });
}

fd_status fd_scene_canonical_spec(const char* spec_text, char* buffer, size_t capacity) {
    if (fd_status s = require(spec_text != nullptr, "spec_text"))
        return s;
    std::string canonical;
    if (fd_status s =
            guarded([&] { canonical = serialize_scene_spec(parse_scene_spec(spec_text)); }))
        return s;
    return copy_string(canonical, buffer, capacity);
}

fd_status fd_scene_image(const fd_scene* scene, int32_t frame, fd_image** out) {
    if (fd_status s = require(scene != nullptr && out != nullptr, "scene/out"))
        return s;
    if (frame != 0 && frame != 1)
        return fail(FD_ERROR_DOMAIN, "fd_scene_image: frame must be 0 or 1");
    *out = new fd_image{frame == 0 ? scene->bundle.image_t : scene->bundle.image_t1};
    return FD_OK;
}

fd_status fd_scene_depth(const fd_scene* scene, int32_t frame, fd_depth** out) {
    if (fd_status s = require(scene != nullptr && out != nullptr, "scene/out"))
        return s;
    if (frame != 0 && frame != 1)
        return fail(FD_ERROR_DOMAIN, "fd_scene_depth: frame must be 0 or 1");
    *out = new fd_depth{frame == 0 ? scene->bundle.depth_t : scene->bundle.depth_t1};
    return FD_OK;
}

fd_status fd_scene_flow(const fd_scene* scene, fd_flow** out) {
    if (fd_status s = require(scene != nullptr && out != nullptr, "scene/out"))
        return s;
    *out = new fd_flow{scene->bundle.flow_gt};
    return FD_OK;
}

fd_status fd_scene_labels(const fd_scene* scene, fd_labels** out) {
    if (fd_status s = require(scene != nullptr && out != nullptr, "scene/out"))
        return s;
    *out = new fd_labels{scene->bundle.labels_gt};
    return FD_OK;
}

fd_status fd_scene_intrinsics(const fd_scene* scene, fd_intrinsics* out) {
    if (fd_status s = require(scene != nullptr && out != nullptr, "scene/out"))
        return s;
    *out = from_intrinsics(scene->spec.intrinsics);
    return FD_OK;
}

fd_status fd_scene_ego(const fd_scene* scene, fd_pose* out) {
    if (fd_status s = require(scene != nullptr && out != nullptr, "scene/out"))
        return s;
    *out = from_pose(scene->bundle.ego);
    return FD_OK;
}

fd_status fd_scene_object_count(const fd_scene* scene, int32_t* count) {
    if (fd_status s = require(scene != nullptr && count != nullptr, "scene/count"))
        return s;
    *count = static_cast<int32_t>(scene->bundle.object_motions.size());
    return FD_OK;
}

fd_status fd_scene_object_motion(const fd_scene* scene, int32_t index, fd_pose* out) {
    if (fd_status s = require(scene != nullptr && out != nullptr, "scene/out"))
        return s;
    if (index < 0 || index >= static_cast<int32_t>(scene->bundle.object_motions.size()))
        return fail(FD_ERROR_DOMAIN, "fd_scene_object_motion: index out of range");
    *out = from_pose(scene->bundle.object_motions[index]);
    return FD_OK;
}

fd_status fd_scene_occlusion(const fd_scene* scene, int32_t frame, uint8_t* occluded) {
    if (fd_status s = require(scene != nullptr && occluded != nullptr, "scene/occluded"))
        return s;
    if (frame != 0 && frame != 1)
        return fail(FD_ERROR_DOMAIN, "fd_scene_occlusion: frame must be 0 or 1");
    const BinaryMask& mask = frame == 0 ? scene->bundle.occluded_t : scene->bundle.occluded_t1;
    std::memcpy(occluded, mask.values.data(), mask.values.size());
    return FD_OK;
}

/* ---------------- codecs and resizing ---------------- */

fd_status fd_read_depth_png(const char* path, fd_depth** out) {
    if (fd_status s = require(path != nullptr && out != nullptr, "path/out"))
        return s;
    return guarded([&] { *out = new fd_depth{read_depth_png(path)}; });
}

fd_status fd_write_depth_png(const fd_depth* depth, const char* path) {
    if (fd_status s = require(depth != nullptr && path != nullptr, "depth/path"))
        return s;
    return guarded([&] { write_depth_png(depth->value, path); });
}

fd_status fd_read_flow_png(const char* path, fd_flow** out) {
    if (fd_status s = require(path != nullptr && out != nullptr, "path/out"))
        return s;
    return guarded([&] { *out = new fd_flow{read_flow_png(path)}; });
}

fd_status fd_write_flow_png(const fd_flow* flow, const char* path) {
    if (fd_status s = require(flow != nullptr && path != nullptr, "flow/path"))
        return s;
    return guarded([&] { write_flow_png(flow->value, path); });
}

fd_status fd_read_image_png(const char* path, fd_image** out) {
    if (fd_status s = require(path != nullptr && out != nullptr, "path/out"))
        return s;
    return guarded([&] { *out = new fd_image{read_image_png(path)}; });
}

fd_status fd_write_image_png(const fd_image* image, const char* path, int32_t bit_depth) {
    if (fd_status s = require(image != nullptr && path != nullptr, "image/path"))
        return s;
    return guarded([&] { write_image_png(image->value, path, bit_depth); });
}

fd_status fd_read_labels_png(const char* path, fd_labels** out) {
    if (fd_status s = require(path != nullptr && out != nullptr, "path/out"))
        return s;
    return guarded([&] { *out = new fd_labels{read_labels_png(path)}; });
}

fd_status fd_write_labels_png(const fd_labels* labels, const char* path) {
    if (fd_status s = require(labels != nullptr && path != nullptr, "labels/path"))
        return s;
    return guarded([&] { write_labels_png(labels->value, path); });
}

fd_status fd_read_calibration(const char* path, const char* key, fd_intrinsics* out,
                              double* projection) {
    if (fd_status s = require(path != nullptr && out != nullptr, "path/out"))
        return s;
    return guarded([&] {
        const CalibrationRecord record = read_calibration(path, key ? key : "P_rect_02");
        *out = from_intrinsics(record.intrinsics);
        if (projection)
            std::memcpy(projection, record.projection.data(), 12 * sizeof(double));
    });
}

fd_status fd_rescale_intrinsics(fd_intrinsics intrinsics, int32_t new_width, int32_t new_height,
                                fd_intrinsics* out) {
    if (fd_status s = require(out != nullptr, "out"))
        return s;
    return guarded([&] {
        *out = from_intrinsics(
            rescale_intrinsics(to_intrinsics(intrinsics), new_width, new_height));
    });
}

fd_status fd_resize_image(const fd_image* image, int32_t new_width, int32_t new_height,
                          fd_image** out) {
    if (fd_status s = require(image != nullptr && out != nullptr, "image/out"))
        return s;
    return guarded(
        [&] { *out = new fd_image{resize_image(image->value, new_width, new_height)}; });
}

fd_status fd_resize_depth(const fd_depth* depth, int32_t new_width, int32_t new_height,
                          fd_depth** out) {
    if (fd_status s = require(depth != nullptr && out != nullptr, "depth/out"))
        return s;
    return guarded(
        [&] { *out = new fd_depth{resize_depth(depth->value, new_width, new_height)}; });
}

fd_status fd_resize_flow(const fd_flow* flow, int32_t new_width, int32_t new_height,
                         fd_flow** out) {
    if (fd_status s = require(flow != nullptr && out != nullptr, "flow/out"))
        return s;
    return guarded([&] { *out = new fd_flow{resize_flow(flow->value, new_width, new_height)}; });
}

} /* extern "C" */
