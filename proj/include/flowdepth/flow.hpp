#pragma once

#include <vector>

#include "flowdepth/geometry.hpp"
#include "flowdepth/raster.hpp"

namespace flowdepth {

/// One region's contribution to a composite flow. Non-owning.
struct FlowPart {
    const FlowField* flow = nullptr;
    const RegionLabels* labels = nullptr;
    std::int32_t region_id = 0;
};

/// Flow induced by a depth map under a rigid transformation:
/// flow(p) = reproject_coords(depth, pose, K)(p) - p. Validity is inherited
/// from the reprojected grid.
FlowField synthesize_flow(const DepthMap& depth, const PoseSE3& pose, const Intrinsics& K);

/// Stitches per-region flows into one field. Every pixel must be claimed by
/// exactly one part (its labels match the part's region id); overlapping
/// claims raise ConsistencyError and unclaimed pixels come out invalid.
FlowField composite_flow(const std::vector<FlowPart>& parts);

/// Per-pixel depth recovered from flow under a known pose, solved in closed
/// form from the two reprojection equations by linear least squares. Pixels
/// whose translation-induced displacement at the recovered depth stays below
/// `min_parallax_px` are unobservable and come out invalid. Throws
/// DegenerateError when the pose has no translation.
DepthMap decompose_flow(const FlowField& flow, const PoseSE3& pose, const Intrinsics& K,
                        double min_parallax_px = 0.5);

/// Per-pixel L2 distance between two flows over jointly valid pixels.
ScalarField endpoint_error_map(const FlowField& a, const FlowField& b);

} // namespace flowdepth
