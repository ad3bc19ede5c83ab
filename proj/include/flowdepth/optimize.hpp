#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "flowdepth/loss.hpp"

namespace flowdepth {

/// Local parameterization of SE(3) around a base pose: the first three
/// entries are an axis-angle rotation increment (radians, left-multiplied),
/// the last three a translation offset (meters). Valid while the rotation
/// increment stays below pi.
using PoseParams = Eigen::Matrix<double, 6, 1>;

PoseSE3 chart_to_pose(const PoseParams& params, const PoseSE3& base);
PoseParams pose_to_chart(const PoseSE3& pose, const PoseSE3& base);

struct OptimizeConfig {
    enum class Method { gradient_descent, gauss_newton };

    int max_iterations = 300;
    double loss_tolerance = 1e-14;     ///< stop once an accepted step decreases less
    double gradient_tolerance = 1e-10; ///< stop once the gradient norm drops below
    double initial_step = 1e-2;        ///< line-search start, chart units
    double min_step = 1e-12;
    double max_step = 0.5;
    double initial_damping = 1e-4; ///< Levenberg damping for the Gauss-Newton mode
    double fd_epsilon = 1e-6;      ///< central-difference probe size
    /// Both methods line-search on the exact loss, so the accepted-step trace
    /// is non-increasing either way. The damped Gauss-Newton direction (from
    /// the squared-residual surrogate) is the default: plain descent on the
    /// numeric gradient cannot localize the pose to sub-millimeter scales
    /// within a sane budget on this strongly anisotropic objective.
    Method method = Method::gauss_newton;

    void validate() const;
};

struct OptimizeTrace {
    std::vector<double> losses; ///< initial loss followed by accepted-step losses
    PoseSE3 final_pose;
    bool converged = false;
    int iterations = 0;
};

/// Optimization failed outright (e.g. the initial pose has no valid overlap).
class OptimizationError : public Error {
public:
    OptimizationError(const std::string& message, OptimizeTrace trace)
        : Error(message), trace(std::move(trace)) {}
    OptimizeTrace trace;
};

/// Inputs the pose objective closes over. The chart is centered on `base`;
/// `reference_flow`, when set, adds lambda * flow_loss(synthesized, reference).
struct PoseLossContext {
    const ImageBuffer* image_t = nullptr;
    const ImageBuffer* image_t1 = nullptr;
    const DepthMap* depth_t = nullptr;
    const DepthMap* depth_t1 = nullptr;
    Intrinsics intrinsics;
    LossConfig loss;
    PoseSE3 base;
    const FlowField* reference_flow = nullptr;
};

/// Bilateral photometric loss at T(params) and its inverse, plus the
/// optional flow term.
double pose_loss(const PoseParams& params, const PoseLossContext& context);

/// Central finite differences of an arbitrary 6-dof functional. Throws
/// DomainError when a probe evaluates to a non-finite value.
PoseParams numeric_gradient(const PoseParams& params,
                            const std::function<double(const PoseParams&)>& functional,
                            double epsilon);

/// Convenience overload differentiating pose_loss.
PoseParams numeric_gradient(const PoseParams& params, const PoseLossContext& context,
                            double epsilon);

/// Mean squared intensity residual over both warp directions; the smooth
/// surrogate driving the Gauss-Newton mode.
double photometric_residual_loss(const PoseParams& params, const PoseLossContext& context);

/// Value, analytic gradient and (optionally) the Gauss-Newton normal matrix
/// of photometric_residual_loss at the chart origin.
double photometric_residual_gradient(const PoseLossContext& context, PoseParams& gradient,
                                     Eigen::Matrix<double, 6, 6>* gauss_newton = nullptr);

/// The flow term of pose_loss (mean endpoint error against the reference
/// flow, without the lambda weight).
double flow_term_loss(const PoseParams& params, const PoseLossContext& context);

/// Value and analytic gradient of flow_term_loss at the chart origin.
double flow_term_gradient(const PoseLossContext& context, PoseParams& gradient);

/// Iterative descent on pose_loss from the initial pose. Accepted-step
/// losses are strictly decreasing; the trace records them all.
std::pair<PoseSE3, OptimizeTrace> estimate_pose(const ImageBuffer& image_t,
                                                const ImageBuffer& image_t1,
                                                const DepthMap& depth_t, const DepthMap& depth_t1,
                                                const Intrinsics& K, const PoseSE3& init,
                                                const OptimizeConfig& config,
                                                const LossConfig& loss_config,
                                                const FlowField* reference_flow = nullptr);

} // namespace flowdepth
