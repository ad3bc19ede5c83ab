#pragma once

#include <string>
#include <utility>

#include "flowdepth/raster.hpp"

namespace flowdepth {

/// The seven standard depth-evaluation numbers.
struct DepthMetrics {
    double abs_rel = 0.0;
    double sq_rel = 0.0;
    double rms = 0.0;
    double rms_log = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    std::int64_t pixel_count = 0;
};

struct FlowMetrics {
    double epe = 0.0;
    double f1_all = 0.0;
    std::int64_t pixel_count = 0;
};

/// Evaluation protocol knobs. Ground-truth depths outside (cap_min, cap_max]
/// are skipped; a cap_min of 0 is raised to 1 mm so relative errors stay
/// finite. Predictions are clamped to the caps after optional scaling.
struct DepthEvalConfig {
    double cap_min = 0.0;
    double cap_max = 120.0;
    bool median_scaling = true;

    void validate() const;
};

/// Rescales the prediction by median(gt)/median(pred) over jointly valid
/// pixels; returns the scaled map and the factor. Throws DegenerateError
/// when the prediction median is zero and EmptyDomainError when the maps
/// never overlap.
std::pair<DepthMap, double> median_scale(const DepthMap& predicted, const DepthMap& ground_truth);

/// AbsRel, SqRel, RMS, RMS(log) and the three threshold accuracies over the
/// evaluable set (both maps valid, ground truth inside the caps).
DepthMetrics depth_metrics(const DepthMap& predicted, const DepthMap& ground_truth,
                           const DepthEvalConfig& config);

/// Mean endpoint error plus the F1-all outlier fraction: a pixel is an
/// outlier when its endpoint error exceeds 3 px and 5% of the ground-truth
/// flow magnitude.
FlowMetrics flow_metrics(const FlowField& predicted, const FlowField& ground_truth);

/// Fixed-column reports: AbsRel, SqRel, RMS, RMSlog, d1, d2, d3.
std::string depth_metrics_table(const DepthMetrics& metrics);
std::string depth_metrics_csv(const DepthMetrics& metrics);
std::string flow_metrics_table(const FlowMetrics& metrics);
std::string flow_metrics_csv(const FlowMetrics& metrics);

} // namespace flowdepth
