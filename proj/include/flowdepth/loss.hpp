#pragma once

#include <utility>
#include <vector>

#include "flowdepth/geometry.hpp"
#include "flowdepth/raster.hpp"

namespace flowdepth {

/// Weights and knobs of the photometric and flow objectives.
/// alpha mixes (1 - SSIM) against the absolute intensity difference with
/// weights alpha and (1 - 2*alpha); lambda scales the flow term of the
/// combined objectives.
struct LossConfig {
    double alpha = 0.45;
    double lambda = 0.1;
    int ssim_window = 3;
    double ssim_c1 = 0.01 * 0.01;
    double ssim_c2 = 0.03 * 0.03;
    bool smooth_l1 = false;
    double smooth_l1_delta = 1.0;

    void validate() const;
};

/// One region's photometric term.
struct RegionLossTerm {
    std::int32_t region_id = 0;
    double value = 0.0;
    std::int64_t pixel_count = 0;
    bool excluded = false;
};

/// Evaluated loss terms. photometric equals the static term plus every
/// non-excluded motion term; the combined depth/pose/optical entries are
/// filled by combined_losses.
struct LossReport {
    double photometric_static = 0.0;
    double photometric = 0.0;
    double flow = 0.0;
    double depth = 0.0;
    double pose = 0.0;
    double optical = 0.0;
    std::vector<RegionLossTerm> region_terms;
    std::int64_t photometric_pixels = 0;
    std::int64_t flow_pixels = 0;
};

/// Per-pixel structural similarity with box-window statistics. Window
/// statistics use clamped (edge-replicated) coordinates and the stored
/// intensities; output validity is the per-pixel joint validity. For
/// multi-channel images the per-channel SSIM values are averaged.
ScalarField ssim(const ImageBuffer& a, const ImageBuffer& b, const LossConfig& config);

/// Mean over jointly valid pixels of
/// alpha*(1 - SSIM) + (1 - 2*alpha)*|a - b|, the absolute difference taken
/// as the per-pixel mean over channels. Throws EmptyDomainError when no
/// pixel is jointly valid.
double photometric_error(const ImageBuffer& a, const ImageBuffer& b, const LossConfig& config);

/// Photometric error summed over both warp directions:
/// L_pe(target_t1, warp(image_t; depth_t1, pose_bwd))
///   + L_pe(target_t, warp(image_t1; depth_t, pose_fwd)).
/// pose_fwd transports frame-t points to frame t+1, pose_bwd the reverse;
/// the two may be supplied independently. Warped samples that read any
/// masked-out source pixel are excluded from that term's valid set, so a
/// masked region never pays for intensities another region owns.
double bilateral_reprojection_loss(const ImageBuffer& image_t, const ImageBuffer& image_t1,
                                   const DepthMap& depth_t, const DepthMap& depth_t1,
                                   const PoseSE3& pose_fwd, const PoseSE3& pose_bwd,
                                   const Intrinsics& K, const LossConfig& config);

/// Bilateral loss per region over masked images, one (fwd, bwd) pose pair
/// per region id, summed into the total photometric term. Regions whose
/// masked warp has no valid overlap are flagged and excluded rather than
/// failing the whole evaluation.
LossReport multi_region_loss(const ImageBuffer& image_t, const ImageBuffer& image_t1,
                             const DepthMap& depth_t, const DepthMap& depth_t1,
                             const std::vector<std::pair<PoseSE3, PoseSE3>>& region_poses,
                             const RegionLabels& labels, const Intrinsics& K,
                             const LossConfig& config);

/// Mean endpoint error between two flows over jointly valid pixels.
double flow_loss(const FlowField& predicted, const FlowField& reference);

struct CombinedLosses {
    double depth = 0.0;
    double pose = 0.0;
    double optical = 0.0;
};

/// depth = pose = photometric + lambda*flow; optical = flow.
CombinedLosses combined_losses(double photometric, double flow, const LossConfig& config);

} // namespace flowdepth
