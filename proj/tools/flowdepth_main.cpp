// flowdepth command-line tool. Wires the shared-library C API into
// reproducible runs: scene generation, motion segmentation, loss reports,
// metric evaluation, pose optimization and the joint pipeline. Every
// subcommand echoes its fully-resolved configuration next to its outputs and
// exits nonzero the moment anything fails.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowdepth.h"

namespace {

// ------------------------------------------------------------------ plumbing

void check(fd_status status, const std::string& what) {
    if (status != FD_OK)
        throw std::runtime_error(what + ": " + fd_status_name(status) + " (" + fd_last_error() +
                                 ")");
}

using ImagePtr = std::unique_ptr<fd_image, decltype(&fd_image_destroy)>;
using DepthPtr = std::unique_ptr<fd_depth, decltype(&fd_depth_destroy)>;
using FlowPtr = std::unique_ptr<fd_flow, decltype(&fd_flow_destroy)>;
using LabelsPtr = std::unique_ptr<fd_labels, decltype(&fd_labels_destroy)>;
using ScenePtr = std::unique_ptr<fd_scene, decltype(&fd_scene_destroy)>;
using TracePtr = std::unique_ptr<fd_trace, decltype(&fd_trace_destroy)>;

ImagePtr wrap(fd_image* p) { return {p, &fd_image_destroy}; }
DepthPtr wrap(fd_depth* p) { return {p, &fd_depth_destroy}; }
FlowPtr wrap(fd_flow* p) { return {p, &fd_flow_destroy}; }
LabelsPtr wrap(fd_labels* p) { return {p, &fd_labels_destroy}; }

ImagePtr load_image(const std::string& path) {
    fd_image* p = nullptr;
    check(fd_read_image_png(path.c_str(), &p), "reading image '" + path + "'");
    return wrap(p);
}

DepthPtr load_depth(const std::string& path) {
    fd_depth* p = nullptr;
    check(fd_read_depth_png(path.c_str(), &p), "reading depth '" + path + "'");
    return wrap(p);
}

FlowPtr load_flow(const std::string& path) {
    fd_flow* p = nullptr;
    check(fd_read_flow_png(path.c_str(), &p), "reading flow '" + path + "'");
    return wrap(p);
}

LabelsPtr load_labels(const std::string& path) {
    fd_labels* p = nullptr;
    check(fd_read_labels_png(path.c_str(), &p), "reading labels '" + path + "'");
    return wrap(p);
}

std::string read_text_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file)
        throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    file << text;
    if (!file)
        throw std::runtime_error("failed writing '" + path + "'");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Resolved-configuration echo, one sorted "key: value" per line.
void write_config_echo(const std::string& out_dir, const std::map<std::string, std::string>& kv) {
    std::string text;
    for (const auto& [key, value] : kv)
        text += key + ": " + value + "\n";
    write_text_file(out_dir + "/config.txt", text);
}

std::string pose_to_line(const fd_pose& pose) {
    std::string line;
    for (double v : {pose.qw, pose.qx, pose.qy, pose.qz, pose.tx, pose.ty, pose.tz})
        line += format_double(v) + " ";
    line.pop_back();
    return line;
}

fd_pose pose_from_tokens(std::istringstream& stream, const std::string& context) {
    fd_pose pose;
    if (!(stream >> pose.qw >> pose.qx >> pose.qy >> pose.qz >> pose.tx >> pose.ty >> pose.tz))
        throw std::runtime_error(context + ": expected 'qw qx qy qz tx ty tz'");
    return pose;
}

void write_pose_file(const std::string& path, const std::vector<fd_pose>& poses) {
    std::string text = "# region poses: qw qx qy qz tx ty tz\n";
    for (std::size_t r = 0; r < poses.size(); ++r) {
        text += "region: " + std::to_string(r) + "\n";
        text += "pose: " + pose_to_line(poses[r]) + "\n";
    }
    write_text_file(path, text);
}

std::vector<fd_pose> read_pose_file(const std::string& path) {
    std::ifstream file(path);
    if (!file)
        throw std::runtime_error("cannot open pose file '" + path + "'");
    std::vector<fd_pose> poses;
    std::string line;
    int expected_region = 0;
    int current_region = -1;
    while (std::getline(file, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::istringstream stream(line);
        std::string key;
        stream >> key;
        if (key == "region:") {
            int region;
            if (!(stream >> region) || region != expected_region)
                throw std::runtime_error("pose file '" + path +
                                         "': regions must be contiguous from 0");
            current_region = region;
            ++expected_region;
        } else if (key == "pose:") {
            if (current_region != static_cast<int>(poses.size()))
                throw std::runtime_error("pose file '" + path + "': pose before region header");
            poses.push_back(pose_from_tokens(stream, "pose file '" + path + "'"));
        } else {
            throw std::runtime_error("pose file '" + path + "': unknown key '" + key + "'");
        }
    }
    if (poses.empty())
        throw std::runtime_error("pose file '" + path + "' holds no poses");
    return poses;
}

// ------------------------------------------------------------------ options

struct SegOptions {
    std::vector<int> kernels{3, 5, 9};
    double threshold = 0.5;
    std::int64_t min_area = 3000;
    int closing_radius = 2;

    void attach(CLI::App* app) {
        app->add_option("--kernels", kernels, "smoothing kernel sizes")->expected(1, 8);
        app->add_option("--edge-threshold", threshold, "Sobel edge threshold (flow px per px)");
        app->add_option("--min-area", min_area, "minimum motion-region area in pixels");
        app->add_option("--closing-radius", closing_radius, "outline closing radius in pixels");
    }
    fd_seg_config resolve() const {
        fd_seg_config cfg = fd_seg_config_default();
        if (kernels.size() > 8)
            throw std::runtime_error("at most 8 smoothing kernels supported");
        cfg.kernel_count = static_cast<int32_t>(kernels.size());
        for (std::size_t i = 0; i < kernels.size(); ++i)
            cfg.kernels[i] = kernels[i];
        cfg.edge_threshold = threshold;
        cfg.min_area = min_area;
        cfg.closing_radius = closing_radius;
        return cfg;
    }
    void echo(std::map<std::string, std::string>& kv) const {
        std::string ks;
        for (int k : kernels)
            ks += std::to_string(k) + " ";
        if (!ks.empty())
            ks.pop_back();
        kv["seg.kernels"] = ks;
        kv["seg.edge_threshold"] = format_double(threshold);
        kv["seg.min_area"] = std::to_string(min_area);
        kv["seg.closing_radius"] = std::to_string(closing_radius);
    }
};

struct LossOptions {
    double alpha = 0.45;
    double lambda = 0.1;
    int ssim_window = 3;
    bool smooth_l1 = false;

    void attach(CLI::App* app) {
        app->add_option("--alpha", alpha, "SSIM weight in the photometric error");
        app->add_option("--lambda", lambda, "flow-loss weight in the combined objectives");
        app->add_option("--ssim-window", ssim_window, "SSIM window size (odd)");
        app->add_flag("--smooth-l1", smooth_l1, "use smooth-L1 instead of plain L1");
    }
    fd_loss_config resolve() const {
        fd_loss_config cfg = fd_loss_config_default();
        cfg.alpha = alpha;
        cfg.lambda = lambda;
        cfg.ssim_window = ssim_window;
        cfg.smooth_l1 = smooth_l1 ? 1 : 0;
        return cfg;
    }
    void echo(std::map<std::string, std::string>& kv) const {
        kv["loss.alpha"] = format_double(alpha);
        kv["loss.lambda"] = format_double(lambda);
        kv["loss.ssim_window"] = std::to_string(ssim_window);
        kv["loss.smooth_l1"] = smooth_l1 ? "true" : "false";
    }
};

struct OptimizeOptions {
    int max_iterations = 300;
    std::string method = "gauss-newton";
    double fd_epsilon = 1e-6;

    void attach(CLI::App* app) {
        app->add_option("--max-iterations", max_iterations, "iteration cap");
        app->add_option("--method", method, "descent direction")
            ->check(CLI::IsMember({"gauss-newton", "gradient-descent"}));
        app->add_option("--fd-epsilon", fd_epsilon, "finite-difference probe size");
    }
    fd_optimize_config resolve() const {
        fd_optimize_config cfg = fd_optimize_config_default();
        cfg.max_iterations = max_iterations;
        cfg.use_gauss_newton = method == "gauss-newton" ? 1 : 0;
        cfg.fd_epsilon = fd_epsilon;
        return cfg;
    }
    void echo(std::map<std::string, std::string>& kv) const {
        kv["optimize.max_iterations"] = std::to_string(max_iterations);
        kv["optimize.method"] = method;
        kv["optimize.fd_epsilon"] = format_double(fd_epsilon);
    }
};

struct IntrinsicsOptions {
    std::string calib_path;
    std::string calib_key = "P_rect_02";
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;

    void attach(CLI::App* app) {
        app->add_option("--calib", calib_path, "KITTI calibration file");
        app->add_option("--calib-key", calib_key, "projection key inside the calibration file");
        app->add_option("--fx", fx, "focal length x (px)");
        app->add_option("--fy", fy, "focal length y (px)");
        app->add_option("--cx", cx, "principal point x (px)");
        app->add_option("--cy", cy, "principal point y (px)");
    }
    // Image dimensions come from the raster the intrinsics will drive.
    fd_intrinsics resolve(int32_t width, int32_t height) const {
        fd_intrinsics K;
        if (!calib_path.empty()) {
            check(fd_read_calibration(calib_path.c_str(), calib_key.c_str(), &K, nullptr),
                  "reading calibration");
            if (K.width != width || K.height != height)
                check(fd_rescale_intrinsics(K, width, height, &K), "rescaling intrinsics");
            return K;
        }
        if (fx <= 0.0 || fy <= 0.0)
            throw std::runtime_error("either --calib or --fx/--fy/--cx/--cy is required");
        K.fx = fx;
        K.fy = fy;
        K.cx = cx;
        K.cy = cy;
        K.width = width;
        K.height = height;
        return K;
    }
    void echo(std::map<std::string, std::string>& kv, const fd_intrinsics& K) const {
        if (!calib_path.empty()) {
            kv["intrinsics.calib"] = calib_path;
            kv["intrinsics.calib_key"] = calib_key;
        }
        kv["intrinsics.fx"] = format_double(K.fx);
        kv["intrinsics.fy"] = format_double(K.fy);
        kv["intrinsics.cx"] = format_double(K.cx);
        kv["intrinsics.cy"] = format_double(K.cy);
        kv["intrinsics.width"] = std::to_string(K.width);
        kv["intrinsics.height"] = std::to_string(K.height);
    }
};

// ------------------------------------------------------------------ reports

std::string loss_report_text(const fd_loss_report& report, const std::vector<double>& regions,
                             const std::vector<int32_t>& excluded) {
    std::string text;
    text += "L_ph_s:    " + format_double(report.photometric_static) + "\n";
    for (std::size_t r = 1; r < regions.size(); ++r)
        text += "L_ph_m" + std::to_string(r) + ":   " + format_double(regions[r]) +
                (excluded[r] ? "  (excluded: empty overlap)" : "") + "\n";
    text += "L_ph:      " + format_double(report.photometric) + "\n";
    text += "L_flow:    " + format_double(report.flow) + "\n";
    text += "L_depth:   " + format_double(report.depth) + "\n";
    text += "L_pose:    " + format_double(report.pose) + "\n";
    text += "L_optical: " + format_double(report.optical) + "\n";
    return text;
}

std::string loss_report_csv(const fd_loss_report& report, const std::vector<double>& regions,
                            const std::vector<int32_t>& excluded) {
    std::string header = "L_ph_s";
    std::string row = format_double(report.photometric_static);
    for (std::size_t r = 1; r < regions.size(); ++r) {
        header += ",L_ph_m" + std::to_string(r);
        row += "," + (excluded[r] ? std::string("excluded") : format_double(regions[r]));
    }
    header += ",L_ph,L_flow,L_depth,L_pose,L_optical";
    row += "," + format_double(report.photometric) + "," + format_double(report.flow) + "," +
           format_double(report.depth) + "," + format_double(report.pose) + "," +
           format_double(report.optical);
    return header + "\n" + row + "\n";
}

// Estimates one pose per region from masked frames; region 0 first.
std::vector<fd_pose> estimate_region_poses(const fd_image* image_t, const fd_image* image_t1,
                                           const fd_depth* depth_t, const fd_depth* depth_t1,
                                           const fd_labels* labels, fd_intrinsics K,
                                           fd_optimize_config opt_cfg, fd_loss_config loss_cfg) {
    int32_t regions = 0;
    check(fd_labels_region_count(labels, &regions), "counting regions");
    std::vector<fd_pose> poses;
    for (int32_t r = 0; r < regions; ++r) {
        fd_image* masked_t = nullptr;
        fd_image* masked_t1 = nullptr;
        check(fd_mask_image(image_t, labels, r, &masked_t), "masking frame t");
        ImagePtr masked_t_owner = wrap(masked_t);
        check(fd_mask_image(image_t1, labels, r, &masked_t1), "masking frame t+1");
        ImagePtr masked_t1_owner = wrap(masked_t1);

        fd_pose pose;
        check(fd_estimate_pose(masked_t, masked_t1, depth_t, depth_t1, K, fd_pose_identity(),
                               opt_cfg, loss_cfg, nullptr, &pose, nullptr),
              "estimating pose for region " + std::to_string(r));
        poses.push_back(pose);
    }
    return poses;
}

// Per-region synthesized flows composited over the labeling.
FlowPtr composite_from_poses(const fd_depth* depth_t, const fd_labels* labels,
                             const std::vector<fd_pose>& poses, fd_intrinsics K) {
    std::vector<FlowPtr> owners;
    std::vector<const fd_flow*> flows;
    std::vector<const fd_labels*> parts;
    std::vector<int32_t> ids;
    for (std::size_t r = 0; r < poses.size(); ++r) {
        fd_flow* flow = nullptr;
        check(fd_synthesize_flow(depth_t, poses[r], K, &flow),
              "synthesizing flow for region " + std::to_string(r));
        owners.push_back(wrap(flow));
        flows.push_back(flow);
        parts.push_back(labels);
        ids.push_back(static_cast<int32_t>(r));
    }
    fd_flow* composite = nullptr;
    check(fd_composite_flow(flows.data(), parts.data(), ids.data(),
                            static_cast<int32_t>(flows.size()), &composite),
          "compositing per-region flows");
    return wrap(composite);
}

double labels_iou(const fd_labels* a, const fd_labels* b, int32_t region) {
    int32_t h = 0, w = 0;
    check(fd_labels_dims(a, &h, &w), "label dims");
    int32_t h2 = 0, w2 = 0;
    check(fd_labels_dims(b, &h2, &w2), "label dims");
    if (h != h2 || w != w2)
        throw std::runtime_error("label rasters have different sizes");
    std::vector<int32_t> va(static_cast<std::size_t>(h) * w);
    std::vector<int32_t> vb(va.size());
    check(fd_labels_read(a, va.data()), "reading labels");
    check(fd_labels_read(b, vb.data()), "reading labels");
    std::int64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        const bool ia = va[i] == region;
        const bool ib = vb[i] == region;
        inter += ia && ib;
        uni += ia || ib;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

// ------------------------------------------------------------------ commands

int cmd_gen(const std::string& spec_path, const std::string& out_dir, std::int64_t seed_override) {
    std::filesystem::create_directories(out_dir);
    std::string spec_text = read_text_file(spec_path);
    if (seed_override >= 0)
        spec_text += "\nseed: " + std::to_string(seed_override) + "\n";

    fd_scene* scene_raw = nullptr;
    check(fd_scene_generate(spec_text.c_str(), &scene_raw), "generating scene");
    ScenePtr scene(scene_raw, &fd_scene_destroy);

    uint64_t digest = 0;
    check(fd_scene_digest(spec_text.c_str(), &digest), "hashing spec");

    std::vector<char> canonical(1 << 16);
    check(fd_scene_canonical_spec(spec_text.c_str(), canonical.data(), canonical.size()),
          "canonicalizing spec");
    write_text_file(out_dir + "/scene_spec.txt", canonical.data());

    for (int frame = 0; frame < 2; ++frame) {
        const std::string suffix = frame == 0 ? "t" : "t1";
        fd_image* image = nullptr;
        check(fd_scene_image(scene.get(), frame, &image), "fetching frame");
        ImagePtr image_owner = wrap(image);
        check(fd_write_image_png(image, (out_dir + "/image_" + suffix + ".png").c_str(), 16),
              "writing frame");

        fd_depth* depth = nullptr;
        check(fd_scene_depth(scene.get(), frame, &depth), "fetching depth");
        DepthPtr depth_owner = wrap(depth);
        check(fd_write_depth_png(depth, (out_dir + "/depth_" + suffix + ".png").c_str()),
              "writing depth");
    }

    fd_flow* flow = nullptr;
    check(fd_scene_flow(scene.get(), &flow), "fetching flow");
    FlowPtr flow_owner = wrap(flow);
    check(fd_write_flow_png(flow, (out_dir + "/flow_gt.png").c_str()), "writing flow");

    fd_labels* labels = nullptr;
    check(fd_scene_labels(scene.get(), &labels), "fetching labels");
    LabelsPtr labels_owner = wrap(labels);
    check(fd_write_labels_png(labels, (out_dir + "/labels_gt.png").c_str()), "writing labels");

    int32_t object_count = 0;
    check(fd_scene_object_count(scene.get(), &object_count), "counting objects");
    std::vector<fd_pose> poses;
    fd_pose ego;
    check(fd_scene_ego(scene.get(), &ego), "fetching ego pose");
    poses.push_back(ego);
    for (int32_t i = 0; i < object_count; ++i) {
        fd_pose motion;
        check(fd_scene_object_motion(scene.get(), i, &motion), "fetching object motion");
        fd_pose total;
        check(fd_pose_compose(ego, motion, &total), "composing object pose");
        poses.push_back(total);
    }
    write_pose_file(out_dir + "/poses_gt.txt", poses);

    std::map<std::string, std::string> kv;
    kv["command"] = "gen";
    kv["spec"] = spec_path;
    char digest_hex[32];
    std::snprintf(digest_hex, sizeof(digest_hex), "%016llx",
                  static_cast<unsigned long long>(digest));
    kv["spec_digest"] = digest_hex;
    write_config_echo(out_dir, kv);

    std::printf("spec digest: %s\n", digest_hex);
    std::printf("wrote scene with %d motion region(s) to %s\n", object_count, out_dir.c_str());
    return 0;
}

int cmd_segment(const std::string& flow_path, const std::string& gt_labels_path,
                const std::string& out_dir, const SegOptions& seg) {
    std::filesystem::create_directories(out_dir);
    const FlowPtr flow = load_flow(flow_path);

    fd_labels* labels_raw = nullptr;
    check(fd_segment_motion(flow.get(), seg.resolve(), &labels_raw), "segmenting flow");
    LabelsPtr labels = wrap(labels_raw);
    check(fd_write_labels_png(labels.get(), (out_dir + "/labels.png").c_str()),
          "writing labels");

    int32_t regions = 0;
    check(fd_labels_region_count(labels.get(), &regions), "counting regions");
    std::vector<int64_t> areas(regions);
    check(fd_labels_areas(labels.get(), areas.data()), "reading region areas");

    std::string summary = "k=" + std::to_string(regions - 1) + "\n";
    for (int32_t r = 0; r < regions; ++r)
        summary += "region " + std::to_string(r) + ": " + std::to_string(areas[r]) + " px\n";
    if (!gt_labels_path.empty()) {
        const LabelsPtr gt = load_labels(gt_labels_path);
        for (int32_t r = 1; r < regions; ++r)
            summary += "IoU region " + std::to_string(r) + ": " +
                       format_double(labels_iou(labels.get(), gt.get(), r)) + "\n";
    }
    write_text_file(out_dir + "/summary.txt", summary);
    std::fputs(summary.c_str(), stdout);

    std::map<std::string, std::string> kv;
    kv["command"] = "segment";
    kv["flow"] = flow_path;
    if (!gt_labels_path.empty())
        kv["gt_labels"] = gt_labels_path;
    seg.echo(kv);
    write_config_echo(out_dir, kv);
    return 0;
}

struct FramePaths {
    std::string image_t, image_t1, depth_t, depth_t1;

    void attach(CLI::App* app, bool depth_required = true) {
        app->add_option("--image-t", image_t, "frame t image PNG")->required();
        app->add_option("--image-t1", image_t1, "frame t+1 image PNG")->required();
        auto* dt = app->add_option("--depth-t", depth_t, "frame t depth PNG");
        auto* dt1 = app->add_option("--depth-t1", depth_t1, "frame t+1 depth PNG");
        if (depth_required) {
            dt->required();
            dt1->required();
        }
    }
};

int cmd_losses(const FramePaths& frames, const std::string& poses_path,
               const std::string& labels_path, const std::string& flow_path,
               const std::string& out_dir, const LossOptions& loss,
               const IntrinsicsOptions& intrinsics) {
    std::filesystem::create_directories(out_dir);
    const ImagePtr image_t = load_image(frames.image_t);
    const ImagePtr image_t1 = load_image(frames.image_t1);
    const DepthPtr depth_t = load_depth(frames.depth_t);
    const DepthPtr depth_t1 = load_depth(frames.depth_t1);

    int32_t h = 0, w = 0;
    check(fd_image_dims(image_t.get(), &h, &w, nullptr), "image dims");
    const fd_intrinsics K = intrinsics.resolve(w, h);

    LabelsPtr labels{nullptr, &fd_labels_destroy};
    if (!labels_path.empty()) {
        labels = load_labels(labels_path);
    } else {
        const std::vector<int32_t> zeros(static_cast<std::size_t>(h) * w, 0);
        fd_labels* raw = nullptr;
        check(fd_labels_create(h, w, zeros.data(), &raw), "creating single-region labels");
        labels = wrap(raw);
    }

    const std::vector<fd_pose> poses_fwd = read_pose_file(poses_path);
    int32_t regions = 0;
    check(fd_labels_region_count(labels.get(), &regions), "counting regions");
    if (static_cast<int32_t>(poses_fwd.size()) != regions)
        throw std::runtime_error("pose file carries " + std::to_string(poses_fwd.size()) +
                                 " poses for " + std::to_string(regions) + " regions");
    std::vector<fd_pose> poses_bwd(poses_fwd.size());
    for (std::size_t r = 0; r < poses_fwd.size(); ++r)
        check(fd_pose_invert(poses_fwd[r], &poses_bwd[r]), "inverting pose");

    const fd_loss_config loss_cfg = loss.resolve();
    fd_loss_report report{};
    std::vector<double> region_values(regions, 0.0);
    std::vector<int32_t> region_excluded(regions, 0);
    check(fd_multi_region_loss(image_t.get(), image_t1.get(), depth_t.get(), depth_t1.get(),
                               poses_fwd.data(), poses_bwd.data(), regions, labels.get(), K,
                               loss_cfg, &report, region_values.data(), region_excluded.data()),
          "computing multi-region loss");

    if (!flow_path.empty()) {
        const FlowPtr reference = load_flow(flow_path);
        const FlowPtr composite =
            composite_from_poses(depth_t.get(), labels.get(), poses_fwd, K);
        check(fd_flow_loss(composite.get(), reference.get(), &report.flow),
              "computing flow loss");
    }
    check(fd_combined_losses(report.photometric, report.flow, loss_cfg, &report.depth,
                             &report.pose, &report.optical),
          "combining losses");

    const std::string text = loss_report_text(report, region_values, region_excluded);
    write_text_file(out_dir + "/report.txt", text);
    write_text_file(out_dir + "/report.csv",
                    loss_report_csv(report, region_values, region_excluded));
    std::fputs(text.c_str(), stdout);

    std::map<std::string, std::string> kv;
    kv["command"] = "losses";
    kv["image_t"] = frames.image_t;
    kv["image_t1"] = frames.image_t1;
    kv["depth_t"] = frames.depth_t;
    kv["depth_t1"] = frames.depth_t1;
    kv["poses"] = poses_path;
    if (!labels_path.empty())
        kv["labels"] = labels_path;
    if (!flow_path.empty())
        kv["flow"] = flow_path;
    loss.echo(kv);
    intrinsics.echo(kv, K);
    write_config_echo(out_dir, kv);
    return 0;
}

int cmd_eval(const std::string& pred_depth, const std::string& gt_depth,
             const std::string& pred_flow, const std::string& gt_flow, double cap_min,
             double cap_max, bool no_scaling, const std::string& out_dir) {
    if (pred_depth.empty() && pred_flow.empty())
        throw std::runtime_error("nothing to evaluate: give --pred-depth/--gt-depth and/or "
                                 "--pred-flow/--gt-flow");
    std::filesystem::create_directories(out_dir);
    std::string text;
    std::string csv;

    if (!pred_depth.empty()) {
        if (gt_depth.empty())
            throw std::runtime_error("--pred-depth requires --gt-depth");
        const DepthPtr pred = load_depth(pred_depth);
        const DepthPtr gt = load_depth(gt_depth);
        fd_depth_eval_config cfg = fd_depth_eval_config_default();
        cfg.cap_min = cap_min;
        cfg.cap_max = cap_max;
        cfg.median_scaling = no_scaling ? 0 : 1;
        fd_depth_metrics metrics;
        check(fd_depth_metrics_compute(pred.get(), gt.get(), cfg, &metrics),
              "computing depth metrics");
        char buffer[512];
        check(fd_depth_metrics_format(metrics, 0, buffer, sizeof(buffer)), "formatting table");
        text += buffer;
        check(fd_depth_metrics_format(metrics, 1, buffer, sizeof(buffer)), "formatting csv");
        csv += buffer;
    }
    if (!pred_flow.empty()) {
        if (gt_flow.empty())
            throw std::runtime_error("--pred-flow requires --gt-flow");
        const FlowPtr pred = load_flow(pred_flow);
        const FlowPtr gt = load_flow(gt_flow);
        fd_flow_metrics metrics;
        check(fd_flow_metrics_compute(pred.get(), gt.get(), &metrics),
              "computing flow metrics");
        char buffer[512];
        check(fd_flow_metrics_format(metrics, 0, buffer, sizeof(buffer)), "formatting table");
        text += buffer;
        check(fd_flow_metrics_format(metrics, 1, buffer, sizeof(buffer)), "formatting csv");
        csv += buffer;
    }

    write_text_file(out_dir + "/metrics.txt", text);
    write_text_file(out_dir + "/metrics.csv", csv);
    std::fputs(text.c_str(), stdout);

    std::map<std::string, std::string> kv;
    kv["command"] = "eval";
    if (!pred_depth.empty()) {
        kv["pred_depth"] = pred_depth;
        kv["gt_depth"] = gt_depth;
        kv["cap_min"] = format_double(cap_min);
        kv["cap_max"] = format_double(cap_max);
        kv["median_scaling"] = no_scaling ? "false" : "true";
    }
    if (!pred_flow.empty()) {
        kv["pred_flow"] = pred_flow;
        kv["gt_flow"] = gt_flow;
    }
    write_config_echo(out_dir, kv);
    return 0;
}

int cmd_optimize(const FramePaths& frames, const std::string& init_path,
                 const std::string& out_dir, const OptimizeOptions& opt, const LossOptions& loss,
                 const IntrinsicsOptions& intrinsics) {
    std::filesystem::create_directories(out_dir);
    const ImagePtr image_t = load_image(frames.image_t);
    const ImagePtr image_t1 = load_image(frames.image_t1);
    const DepthPtr depth_t = load_depth(frames.depth_t);
    const DepthPtr depth_t1 = load_depth(frames.depth_t1);

    int32_t h = 0, w = 0;
    check(fd_image_dims(image_t.get(), &h, &w, nullptr), "image dims");
    const fd_intrinsics K = intrinsics.resolve(w, h);

    fd_pose init = fd_pose_identity();
    if (!init_path.empty())
        init = read_pose_file(init_path).front();

    fd_pose pose;
    fd_trace* trace_raw = nullptr;
    check(fd_estimate_pose(image_t.get(), image_t1.get(), depth_t.get(), depth_t1.get(), K,
                           init, opt.resolve(), loss.resolve(), nullptr, &pose, &trace_raw),
          "estimating pose");
    TracePtr trace(trace_raw, &fd_trace_destroy);

    write_pose_file(out_dir + "/pose.txt", {pose});

    int32_t length = 0;
    check(fd_trace_length(trace.get(), &length), "trace length");
    std::string trace_csv = "iteration,loss\n";
    for (int32_t i = 0; i < length; ++i) {
        double value = 0.0;
        check(fd_trace_loss(trace.get(), i, &value), "trace loss");
        trace_csv += std::to_string(i) + "," + format_double(value) + "\n";
    }
    write_text_file(out_dir + "/trace.csv", trace_csv);

    std::printf("pose: %s\n", pose_to_line(pose).c_str());
    double final_loss = 0.0;
    check(fd_trace_loss(trace.get(), length - 1, &final_loss), "trace loss");
    std::printf("final loss: %s after %d accepted step(s)\n", format_double(final_loss).c_str(),
                length - 1);

    std::map<std::string, std::string> kv;
    kv["command"] = "optimize";
    kv["image_t"] = frames.image_t;
    kv["image_t1"] = frames.image_t1;
    kv["depth_t"] = frames.depth_t;
    kv["depth_t1"] = frames.depth_t1;
    if (!init_path.empty())
        kv["init"] = init_path;
    opt.echo(kv);
    loss.echo(kv);
    intrinsics.echo(kv, K);
    write_config_echo(out_dir, kv);
    return 0;
}

int cmd_pipeline(const FramePaths& frames, const std::string& flow_path,
                 const std::string& gt_flow_path, const std::string& pose_path,
                 const std::string& out_dir, const SegOptions& seg, const LossOptions& loss,
                 const OptimizeOptions& opt, const IntrinsicsOptions& intrinsics) {
    std::filesystem::create_directories(out_dir);
    const ImagePtr image_t = load_image(frames.image_t);
    const ImagePtr image_t1 = load_image(frames.image_t1);
    const FlowPtr preliminary = load_flow(flow_path);

    int32_t h = 0, w = 0;
    check(fd_image_dims(image_t.get(), &h, &w, nullptr), "image dims");
    const fd_intrinsics K = intrinsics.resolve(w, h);

    // Motion segmentation of the preliminary flow.
    fd_labels* labels_raw = nullptr;
    check(fd_segment_motion(preliminary.get(), seg.resolve(), &labels_raw), "segmenting flow");
    LabelsPtr labels = wrap(labels_raw);
    check(fd_write_labels_png(labels.get(), (out_dir + "/labels.png").c_str()),
          "writing labels");
    int32_t regions = 0;
    check(fd_labels_region_count(labels.get(), &regions), "counting regions");

    // Depth either from files or from flow decomposition under a given pose.
    DepthPtr depth_t{nullptr, &fd_depth_destroy};
    DepthPtr depth_t1{nullptr, &fd_depth_destroy};
    bool decomposed = false;
    if (!frames.depth_t.empty() && !frames.depth_t1.empty()) {
        depth_t = load_depth(frames.depth_t);
        depth_t1 = load_depth(frames.depth_t1);
    } else {
        if (pose_path.empty())
            throw std::runtime_error(
                "pipeline without depth files needs --pose to decompose the flow");
        const fd_pose ego = read_pose_file(pose_path).front();
        fd_depth* recovered = nullptr;
        check(fd_decompose_flow(preliminary.get(), ego, K, -1.0, &recovered),
              "decomposing preliminary flow");
        depth_t = wrap(recovered);
        fd_flow* ego_flow = nullptr;
        check(fd_synthesize_flow(depth_t.get(), ego, K, &ego_flow), "synthesizing ego flow");
        const FlowPtr ego_flow_owner = wrap(ego_flow);
        // Frame t+1 depth is unavailable without files; reuse the recovered
        // map as an approximation for the bilateral warp.
        fd_depth* copy = nullptr;
        check(fd_decompose_flow(preliminary.get(), ego, K, -1.0, &copy),
              "decomposing preliminary flow");
        depth_t1 = wrap(copy);
        decomposed = true;
        check(fd_write_depth_png(depth_t.get(), (out_dir + "/depth_static.png").c_str()),
              "writing decomposed depth");
    }

    // One pose per region from masked photometric optimization.
    const std::vector<fd_pose> poses = estimate_region_poses(
        image_t.get(), image_t1.get(), depth_t.get(), depth_t1.get(), labels.get(), K,
        opt.resolve(), loss.resolve());
    write_pose_file(out_dir + "/poses.txt", poses);

    // Flow reconstruction from depth + poses (per region, then composited).
    const FlowPtr composite = composite_from_poses(depth_t.get(), labels.get(), poses, K);
    check(fd_write_flow_png(composite.get(), (out_dir + "/flow_composite.png").c_str()),
          "writing composite flow");

    // Loss report over the segmentation.
    std::vector<fd_pose> poses_bwd(poses.size());
    for (std::size_t r = 0; r < poses.size(); ++r)
        check(fd_pose_invert(poses[r], &poses_bwd[r]), "inverting pose");
    const fd_loss_config loss_cfg = loss.resolve();
    fd_loss_report report{};
    std::vector<double> region_values(regions, 0.0);
    std::vector<int32_t> region_excluded(regions, 0);
    check(fd_multi_region_loss(image_t.get(), image_t1.get(), depth_t.get(), depth_t1.get(),
                               poses.data(), poses_bwd.data(), regions, labels.get(), K,
                               loss_cfg, &report, region_values.data(), region_excluded.data()),
          "computing multi-region loss");
    check(fd_flow_loss(composite.get(), preliminary.get(), &report.flow),
          "computing flow loss");
    check(fd_combined_losses(report.photometric, report.flow, loss_cfg, &report.depth,
                             &report.pose, &report.optical),
          "combining losses");

    std::string text = loss_report_text(report, region_values, region_excluded);

    // Flow metrics of the reconstruction against the preliminary flow and,
    // when available, the ground truth.
    fd_flow_metrics reconstruction;
    check(fd_flow_metrics_compute(composite.get(), preliminary.get(), &reconstruction),
          "flow metrics vs preliminary");
    char buffer[512];
    check(fd_flow_metrics_format(reconstruction, 0, buffer, sizeof(buffer)), "formatting");
    text += "\ncomposite vs preliminary flow:\n";
    text += buffer;
    if (!gt_flow_path.empty()) {
        const FlowPtr gt = load_flow(gt_flow_path);
        fd_flow_metrics vs_gt;
        check(fd_flow_metrics_compute(composite.get(), gt.get(), &vs_gt),
              "flow metrics vs ground truth");
        check(fd_flow_metrics_format(vs_gt, 0, buffer, sizeof(buffer)), "formatting");
        text += "composite vs ground-truth flow:\n";
        text += buffer;
    }

    write_text_file(out_dir + "/report.txt", text);
    write_text_file(out_dir + "/report.csv",
                    loss_report_csv(report, region_values, region_excluded));
    std::fputs(text.c_str(), stdout);
    std::printf("k=%d\n", regions - 1);

    std::map<std::string, std::string> kv;
    kv["command"] = "pipeline";
    kv["image_t"] = frames.image_t;
    kv["image_t1"] = frames.image_t1;
    if (!frames.depth_t.empty()) {
        kv["depth_t"] = frames.depth_t;
        kv["depth_t1"] = frames.depth_t1;
    }
    kv["depth_source"] = decomposed ? "decomposed" : "files";
    kv["flow"] = flow_path;
    if (!gt_flow_path.empty())
        kv["gt_flow"] = gt_flow_path;
    if (!pose_path.empty())
        kv["pose"] = pose_path;
    seg.echo(kv);
    loss.echo(kv);
    opt.echo(kv);
    intrinsics.echo(kv, K);
    write_config_echo(out_dir, kv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"geometric core of joint self-supervised depth and optical-flow estimation"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "render a synthetic scene bundle from a spec file");
    std::string gen_spec, gen_out;
    std::int64_t gen_seed = -1;
    gen->add_option("--spec", gen_spec, "scene spec file")->required();
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", gen_seed, "override the spec's seed");

    // segment
    auto* segment = app.add_subcommand("segment", "motion segmentation of a flow field");
    std::string segment_flow, segment_gt, segment_out;
    SegOptions segment_seg;
    segment->add_option("--flow", segment_flow, "flow PNG")->required();
    segment->add_option("--gt-labels", segment_gt, "ground-truth labels PNG for IoU");
    segment->add_option("--out", segment_out, "output directory")->required();
    segment_seg.attach(segment);

    // losses
    auto* losses = app.add_subcommand("losses", "evaluate the loss terms on a frame pair");
    FramePaths losses_frames;
    std::string losses_poses, losses_labels, losses_flow, losses_out;
    LossOptions losses_loss;
    IntrinsicsOptions losses_intrinsics;
    losses_frames.attach(losses);
    losses->add_option("--poses", losses_poses, "pose file, one pose per region")->required();
    losses->add_option("--labels", losses_labels, "region labels PNG (default: one region)");
    losses->add_option("--flow", losses_flow, "preliminary flow PNG for the flow loss");
    losses->add_option("--out", losses_out, "output directory")->required();
    losses_loss.attach(losses);
    losses_intrinsics.attach(losses);

    // eval
    auto* eval = app.add_subcommand("eval", "depth / flow evaluation metrics");
    std::string eval_pred_depth, eval_gt_depth, eval_pred_flow, eval_gt_flow, eval_out;
    double eval_cap_min = 0.0, eval_cap_max = 120.0;
    bool eval_no_scaling = false;
    eval->add_option("--pred-depth", eval_pred_depth, "predicted depth PNG");
    eval->add_option("--gt-depth", eval_gt_depth, "ground-truth depth PNG");
    eval->add_option("--pred-flow", eval_pred_flow, "predicted flow PNG");
    eval->add_option("--gt-flow", eval_gt_flow, "ground-truth flow PNG");
    eval->add_option("--cap-min", eval_cap_min, "minimum evaluable depth (m)");
    eval->add_option("--cap-max", eval_cap_max, "maximum evaluable depth (m)");
    eval->add_flag("--no-median-scaling", eval_no_scaling, "skip median scaling");
    eval->add_option("--out", eval_out, "output directory")->required();

    // optimize
    auto* optimize = app.add_subcommand("optimize", "direct pose estimation on a frame pair");
    FramePaths optimize_frames;
    std::string optimize_init, optimize_out;
    OptimizeOptions optimize_opt;
    LossOptions optimize_loss;
    IntrinsicsOptions optimize_intrinsics;
    optimize_frames.attach(optimize);
    optimize->add_option("--init", optimize_init, "initial pose file (default: identity)");
    optimize->add_option("--out", optimize_out, "output directory")->required();
    optimize_opt.attach(optimize);
    optimize_loss.attach(optimize);
    optimize_intrinsics.attach(optimize);

    // pipeline
    auto* pipeline = app.add_subcommand(
        "pipeline", "segment, estimate per-region poses, reconstruct flow, report losses");
    FramePaths pipeline_frames;
    std::string pipeline_flow, pipeline_gt_flow, pipeline_pose, pipeline_out;
    SegOptions pipeline_seg;
    LossOptions pipeline_loss;
    OptimizeOptions pipeline_opt;
    IntrinsicsOptions pipeline_intrinsics;
    pipeline_frames.attach(pipeline, /*depth_required=*/false);
    pipeline->add_option("--flow", pipeline_flow, "preliminary flow PNG")->required();
    pipeline->add_option("--gt-flow", pipeline_gt_flow, "ground-truth flow PNG for metrics");
    pipeline->add_option("--pose", pipeline_pose,
                         "ego pose file for flow decomposition when depth files are absent");
    pipeline->add_option("--out", pipeline_out, "output directory")->required();
    pipeline_seg.attach(pipeline);
    pipeline_loss.attach(pipeline);
    pipeline_opt.attach(pipeline);
    pipeline_intrinsics.attach(pipeline);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen(gen_spec, gen_out, gen_seed);
        if (segment->parsed())
            return cmd_segment(segment_flow, segment_gt, segment_out, segment_seg);
        if (losses->parsed())
            return cmd_losses(losses_frames, losses_poses, losses_labels, losses_flow,
                              losses_out, losses_loss, losses_intrinsics);
        if (eval->parsed())
            return cmd_eval(eval_pred_depth, eval_gt_depth, eval_pred_flow, eval_gt_flow,
                            eval_cap_min, eval_cap_max, eval_no_scaling, eval_out);
        if (optimize->parsed())
            return cmd_optimize(optimize_frames, optimize_init, optimize_out, optimize_opt,
                                optimize_loss, optimize_intrinsics);
        if (pipeline->parsed())
            return cmd_pipeline(pipeline_frames, pipeline_flow, pipeline_gt_flow, pipeline_pose,
                                pipeline_out, pipeline_seg, pipeline_loss, pipeline_opt,
                                pipeline_intrinsics);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
