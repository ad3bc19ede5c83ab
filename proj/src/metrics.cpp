#include "flowdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace flowdepth {

namespace {

constexpr double kMinEvaluableDepth = 1e-3;

double median(std::vector<double>& values) {
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double m = values[mid];
    if (n % 2 == 0) {
        // Average of the two middle elements.
        const auto lower = std::max_element(values.begin(), values.begin() + mid);
        m = 0.5 * (m + *lower);
    }
    return m;
}

std::string formatted(const char* fmt, double a, double b, double c, double d, double e, double f,
                      double g) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), fmt, a, b, c, d, e, f, g);
    return buf;
}

} // namespace

void DepthEvalConfig::validate() const {
    if (!(cap_min >= 0.0) || !(cap_max > cap_min))
        throw ConfigError("DepthEvalConfig: caps must satisfy 0 <= cap_min < cap_max");
}

std::pair<DepthMap, double> median_scale(const DepthMap& predicted,
                                         const DepthMap& ground_truth) {
    if (predicted.height != ground_truth.height || predicted.width != ground_truth.width)
        throw ShapeError("median_scale: map dimensions differ");

    std::vector<double> pred_values;
    std::vector<double> gt_values;
    for (std::size_t i = 0; i < predicted.depth.size(); ++i) {
        if (!predicted.valid[i] || !ground_truth.valid[i])
            continue;
        pred_values.push_back(predicted.depth[i]);
        gt_values.push_back(ground_truth.depth[i]);
    }
    if (pred_values.empty())
        throw EmptyDomainError("median_scale: no jointly valid pixels");

    const double pred_median = median(pred_values);
    const double gt_median = median(gt_values);
    if (pred_median == 0.0)
        throw DegenerateError("median_scale: prediction median is zero");

    const double scale = gt_median / pred_median;
    DepthMap scaled = predicted;
    for (std::size_t i = 0; i < scaled.depth.size(); ++i)
        if (scaled.valid[i])
            scaled.depth[i] *= scale;
    return {scaled, scale};
}

DepthMetrics depth_metrics(const DepthMap& predicted, const DepthMap& ground_truth,
                           const DepthEvalConfig& config) {
    config.validate();
    if (predicted.height != ground_truth.height || predicted.width != ground_truth.width)
        throw ShapeError("depth_metrics: map dimensions differ");

    const DepthMap* pred = &predicted;
    DepthMap scaled;
    if (config.median_scaling) {
        scaled = median_scale(predicted, ground_truth).first;
        pred = &scaled;
    }

    const double lo = std::max(config.cap_min, kMinEvaluableDepth);
    const double hi = config.cap_max;

    DepthMetrics m;
    double sum_abs_rel = 0.0, sum_sq_rel = 0.0, sum_sq = 0.0, sum_sq_log = 0.0;
    std::int64_t hits1 = 0, hits2 = 0, hits3 = 0;
    for (std::size_t i = 0; i < predicted.depth.size(); ++i) {
        if (!pred->valid[i] || !ground_truth.valid[i])
            continue;
        const double g = ground_truth.depth[i];
        if (g < lo || g > hi)
            continue;
        const double p = std::clamp(pred->depth[i], lo, hi);
        const double diff = p - g;
        sum_abs_rel += std::abs(diff) / g;
        sum_sq_rel += diff * diff / g;
        sum_sq += diff * diff;
        const double dlog = std::log(p) - std::log(g);
        sum_sq_log += dlog * dlog;
        const double ratio = std::max(p / g, g / p);
        if (ratio < 1.25)
            ++hits1;
        if (ratio < 1.25 * 1.25)
            ++hits2;
        if (ratio < 1.25 * 1.25 * 1.25)
            ++hits3;
        ++m.pixel_count;
    }
    if (m.pixel_count == 0)
        throw EmptyDomainError("depth_metrics: no evaluable pixels");

    const double n = static_cast<double>(m.pixel_count);
    m.abs_rel = sum_abs_rel / n;
    m.sq_rel = sum_sq_rel / n;
    m.rms = std::sqrt(sum_sq / n);
    m.rms_log = std::sqrt(sum_sq_log / n);
    m.delta1 = hits1 / n;
    m.delta2 = hits2 / n;
    m.delta3 = hits3 / n;
    return m;
}

FlowMetrics flow_metrics(const FlowField& predicted, const FlowField& ground_truth) {
    if (predicted.height != ground_truth.height || predicted.width != ground_truth.width)
        throw ShapeError("flow_metrics: flow dimensions differ");

    FlowMetrics m;
    double sum_epe = 0.0;
    std::int64_t outliers = 0;
    for (std::size_t i = 0; i < predicted.du.size(); ++i) {
        if (!predicted.valid[i] || !ground_truth.valid[i])
            continue;
        const double err =
            std::hypot(predicted.du[i] - ground_truth.du[i], predicted.dv[i] - ground_truth.dv[i]);
        const double gt_mag = std::hypot(ground_truth.du[i], ground_truth.dv[i]);
        sum_epe += err;
        if (err > 3.0 && err > 0.05 * gt_mag)
            ++outliers;
        ++m.pixel_count;
    }
    if (m.pixel_count == 0)
        throw EmptyDomainError("flow_metrics: no jointly valid pixels");

    m.epe = sum_epe / static_cast<double>(m.pixel_count);
    m.f1_all = outliers / static_cast<double>(m.pixel_count);
    return m;
}

std::string depth_metrics_table(const DepthMetrics& metrics) {
    std::string out = "  AbsRel   SqRel     RMS  RMSlog      d1      d2      d3\n";
    out += formatted("%8.4f%8.4f%8.4f%8.4f%8.4f%8.4f%8.4f\n", metrics.abs_rel, metrics.sq_rel,
                     metrics.rms, metrics.rms_log, metrics.delta1, metrics.delta2, metrics.delta3);
    return out;
}

std::string depth_metrics_csv(const DepthMetrics& metrics) {
    std::string out = "AbsRel,SqRel,RMS,RMSlog,d1,d2,d3\n";
    out += formatted("%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", metrics.abs_rel, metrics.sq_rel,
                     metrics.rms, metrics.rms_log, metrics.delta1, metrics.delta2, metrics.delta3);
    return out;
}

std::string flow_metrics_table(const FlowMetrics& metrics) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "     EPE  F1-all\n%8.3f%8.4f\n", metrics.epe, metrics.f1_all);
    return buf;
}

std::string flow_metrics_csv(const FlowMetrics& metrics) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "EPE,F1-all\n%.6f,%.6f\n", metrics.epe, metrics.f1_all);
    return buf;
}

} // namespace flowdepth
