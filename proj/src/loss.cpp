#include "flowdepth/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowdepth/flow.hpp"
#include "flowdepth/segmentation.hpp"

namespace flowdepth {

namespace {

void check_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels)
        throw ShapeError(std::string(what) + ": image dimensions differ");
}

// Warp for photometric comparison: on top of the sampling validity, output
// pixels whose interpolation reads any masked-out source pixel are dropped,
// so intensities one region owns never leak into another region's loss.
ImageBuffer warp_for_loss(const ImageBuffer& source, const DepthMap& depth, const PoseSE3& pose,
                          const Intrinsics& K) {
    const PixelGrid grid = reproject_coords(depth, pose, K);
    ImageBuffer out = sample_bilinear(source, grid);
    const bool has_invalid =
        std::any_of(source.valid.begin(), source.valid.end(), [](std::uint8_t v) { return !v; });
    if (!has_invalid)
        return out;

    ImageBuffer indicator(source.height, source.width, 1);
    for (std::size_t i = 0; i < source.valid.size(); ++i)
        indicator.data[i] = source.valid[i] ? 1.0 : 0.0;
    const ImageBuffer coverage = sample_bilinear(indicator, grid);
    for (std::size_t i = 0; i < out.valid.size(); ++i)
        if (out.valid[i] && !(coverage.data[i] > 1.0 - 1e-9))
            out.valid[i] = 0;
    return out;
}

double pixel_abs_difference(const ImageBuffer& a, const ImageBuffer& b, std::size_t pixel,
                            const LossConfig& config) {
    double sum = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        const double d = std::abs(a.data[pixel * a.channels + c] - b.data[pixel * a.channels + c]);
        if (config.smooth_l1) {
            const double delta = config.smooth_l1_delta;
            sum += d < delta ? 0.5 * d * d / delta : d - 0.5 * delta;
        } else {
            sum += d;
        }
    }
    return sum / a.channels;
}

} // namespace

void LossConfig::validate() const {
    if (!(alpha >= 0.0) || !(alpha <= 0.5))
        throw ConfigError("LossConfig: alpha must lie in [0, 0.5]");
    if (!(lambda >= 0.0))
        throw ConfigError("LossConfig: lambda must be non-negative");
    if (ssim_window < 1 || ssim_window % 2 == 0)
        throw ConfigError("LossConfig: SSIM window must be odd and >= 1");
    if (!(ssim_c1 > 0.0) || !(ssim_c2 > 0.0))
        throw ConfigError("LossConfig: SSIM stabilizers must be positive");
    if (!(smooth_l1_delta > 0.0))
        throw ConfigError("LossConfig: smooth-L1 transition point must be positive");
}

ScalarField ssim(const ImageBuffer& a, const ImageBuffer& b, const LossConfig& config) {
    check_same_shape(a, b, "ssim");
    config.validate();

    const int H = a.height;
    const int W = a.width;
    const int r = config.ssim_window / 2;
    const double n = static_cast<double>(config.ssim_window) * config.ssim_window;

    ScalarField out(H, W, 0.0, false);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * W + x;
            if (!a.valid[i] || !b.valid[i])
                continue;
            double value = 0.0;
            for (int c = 0; c < a.channels; ++c) {
                double sum_a = 0.0, sum_b = 0.0, sum_aa = 0.0, sum_bb = 0.0, sum_ab = 0.0;
                for (int dy = -r; dy <= r; ++dy) {
                    const int wy = std::clamp(y + dy, 0, H - 1);
                    for (int dx = -r; dx <= r; ++dx) {
                        const int wx = std::clamp(x + dx, 0, W - 1);
                        const double va = a.at(wy, wx, c);
                        const double vb = b.at(wy, wx, c);
                        sum_a += va;
                        sum_b += vb;
                        sum_aa += va * va;
                        sum_bb += vb * vb;
                        sum_ab += va * vb;
                    }
                }
                const double mu_a = sum_a / n;
                const double mu_b = sum_b / n;
                const double var_a = sum_aa / n - mu_a * mu_a;
                const double var_b = sum_bb / n - mu_b * mu_b;
                const double cov = sum_ab / n - mu_a * mu_b;
                value += (2.0 * mu_a * mu_b + config.ssim_c1) * (2.0 * cov + config.ssim_c2) /
                         ((mu_a * mu_a + mu_b * mu_b + config.ssim_c1) *
                          (var_a + var_b + config.ssim_c2));
            }
            out.values[i] = value / a.channels;
            out.valid[i] = 1;
        }
    }
    return out;
}

double photometric_error(const ImageBuffer& a, const ImageBuffer& b, const LossConfig& config) {
    check_same_shape(a, b, "photometric_error");
    const ScalarField similarity = ssim(a, b, config);

    double sum = 0.0;
    std::int64_t count = 0;
    for (std::size_t i = 0; i < similarity.values.size(); ++i) {
        if (!similarity.valid[i])
            continue;
        sum += config.alpha * (1.0 - similarity.values[i]) +
               (1.0 - 2.0 * config.alpha) * pixel_abs_difference(a, b, i, config);
        ++count;
    }
    if (count == 0)
        throw EmptyDomainError("photometric_error: no jointly valid pixels");
    return sum / count;
}

double bilateral_reprojection_loss(const ImageBuffer& image_t, const ImageBuffer& image_t1,
                                   const DepthMap& depth_t, const DepthMap& depth_t1,
                                   const PoseSE3& pose_fwd, const PoseSE3& pose_bwd,
                                   const Intrinsics& K, const LossConfig& config) {
    const ImageBuffer synth_t1 = warp_for_loss(image_t, depth_t1, pose_bwd, K);
    const ImageBuffer synth_t = warp_for_loss(image_t1, depth_t, pose_fwd, K);
    return photometric_error(image_t1, synth_t1, config) +
           photometric_error(image_t, synth_t, config);
}

LossReport multi_region_loss(const ImageBuffer& image_t, const ImageBuffer& image_t1,
                             const DepthMap& depth_t, const DepthMap& depth_t1,
                             const std::vector<std::pair<PoseSE3, PoseSE3>>& region_poses,
                             const RegionLabels& labels, const Intrinsics& K,
                             const LossConfig& config) {
    if (static_cast<std::int32_t>(region_poses.size()) != labels.region_count)
        throw ShapeError("multi_region_loss: expected one pose pair per region, got " +
                         std::to_string(region_poses.size()) + " for " +
                         std::to_string(labels.region_count) + " regions");

    LossReport report;
    for (std::int32_t region = 0; region < labels.region_count; ++region) {
        const ImageBuffer masked_t = mask_image(image_t, labels, region);
        const ImageBuffer masked_t1 = mask_image(image_t1, labels, region);
        RegionLossTerm term;
        term.region_id = region;
        term.pixel_count = labels.areas[region];
        try {
            term.value = bilateral_reprojection_loss(masked_t, masked_t1, depth_t, depth_t1,
                                                     region_poses[region].first,
                                                     region_poses[region].second, K, config);
        } catch (const EmptyDomainError&) {
            term.excluded = true;
            term.value = 0.0;
        }
        if (!term.excluded) {
            report.photometric += term.value;
            report.photometric_pixels += term.pixel_count;
            if (region == 0)
                report.photometric_static = term.value;
        }
        report.region_terms.push_back(term);
    }
    return report;
}

double flow_loss(const FlowField& predicted, const FlowField& reference) {
    const ScalarField epe = endpoint_error_map(predicted, reference);
    double sum = 0.0;
    std::int64_t count = 0;
    for (std::size_t i = 0; i < epe.values.size(); ++i) {
        if (!epe.valid[i])
            continue;
        sum += epe.values[i];
        ++count;
    }
    if (count == 0)
        throw EmptyDomainError("flow_loss: no jointly valid pixels");
    return sum / count;
}

CombinedLosses combined_losses(double photometric, double flow, const LossConfig& config) {
    if (!(photometric >= 0.0) || !(flow >= 0.0))
        throw DomainError("combined_losses: loss terms must be non-negative");
    CombinedLosses out;
    out.depth = photometric + config.lambda * flow;
    out.pose = out.depth;
    out.optical = flow;
    return out;
}

} // namespace flowdepth
