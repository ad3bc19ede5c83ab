#include "flowdepth/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowdepth/flow.hpp"

namespace flowdepth {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

void check_context(const PoseLossContext& ctx) {
    if (!ctx.image_t || !ctx.image_t1 || !ctx.depth_t || !ctx.depth_t1)
        throw DomainError("pose objective: context is missing an input");
}

// Loss that treats an empty valid set or a non-finite value as +inf, so the
// line search can reject the step.
double guarded_loss(const PoseParams& params, const PoseLossContext& ctx) {
    try {
        const double value = pose_loss(params, ctx);
        return std::isfinite(value) ? value : kInf;
    } catch (const EmptyDomainError&) {
        return kInf;
    } catch (const DomainError&) {
        return kInf;
    }
}

// d(bilinear sample)/d(u,v) inside the current interpolation cell, summed
// residual-weighted over channels. Returns false outside the sampling domain
// or when a tap would read a masked-out source pixel.
bool sample_with_jacobian(const ImageBuffer& image, double u, double v, int channel,
                          double& value, double& du, double& dv) {
    const int W = image.width;
    const int H = image.height;
    if (!(u >= 0.0 && u <= W - 1.0 && v >= 0.0 && v <= H - 1.0))
        return false;
    const int x0 = std::min(static_cast<int>(std::floor(u)), W - 1);
    const int y0 = std::min(static_cast<int>(std::floor(v)), H - 1);
    const int x1 = std::min(x0 + 1, W - 1);
    const int y1 = std::min(y0 + 1, H - 1);
    if (!image.is_valid(y0, x0) || !image.is_valid(y0, x1) || !image.is_valid(y1, x0) ||
        !image.is_valid(y1, x1))
        return false;
    const double fu = u - x0;
    const double fv = v - y0;
    const double i00 = image.at(y0, x0, channel);
    const double i01 = image.at(y0, x1, channel);
    const double i10 = image.at(y1, x0, channel);
    const double i11 = image.at(y1, x1, channel);
    value = (1.0 - fv) * ((1.0 - fu) * i00 + fu * i01) + fv * ((1.0 - fu) * i10 + fu * i11);
    du = (1.0 - fv) * (i01 - i00) + fv * (i11 - i10);
    dv = (1.0 - fu) * (i10 - i00) + fu * (i11 - i01);
    return true;
}

// One warp direction of the squared-residual objective: synthesize `target`
// pixels by sampling `source` through `pose` applied to `depth`. Gradient
// and normal matrix, when requested, are with respect to the forward chart
// coordinates; `backward` marks that this direction uses the inverse pose.
struct DirectionAccum {
    double sum = 0.0;
    std::int64_t count = 0;
    Eigen::Matrix<double, 6, 1> gradient = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::Matrix<double, 6, 6> normal = Eigen::Matrix<double, 6, 6>::Zero();
};

void accumulate_direction(const ImageBuffer& target, const ImageBuffer& source,
                          const DepthMap& depth, const PoseSE3& pose_fwd, bool backward,
                          const Intrinsics& K, bool with_derivatives, DirectionAccum& acc) {
    const Eigen::Matrix3d R_fwd = pose_fwd.rotation_matrix();
    const Eigen::Matrix3d R_bwd = R_fwd.transpose();
    const Eigen::Vector3d t_fwd = pose_fwd.translation;

    for (int y = 0; y < target.height; ++y) {
        for (int x = 0; x < target.width; ++x) {
            if (!target.is_valid(y, x) || !depth.is_valid(y, x))
                continue;
            const double d = depth.at(y, x);
            const Eigen::Vector3d X((x - K.cx) / K.fx * d, (y - K.cy) / K.fy * d, d);

            Eigen::Vector3d Y;
            if (backward)
                Y = R_bwd * (X - t_fwd);
            else
                Y = R_fwd * X + t_fwd;
            if (!(Y.z() > 0.0))
                continue;
            const double u = K.fx * Y.x() / Y.z() + K.cx;
            const double v = K.fy * Y.y() / Y.z() + K.cy;

            Eigen::Matrix<double, 2, 6> coord_jac;
            if (with_derivatives) {
                // d(u,v)/dY then dY/d(omega, t) at the chart origin.
                Eigen::Matrix<double, 2, 3> proj;
                proj << K.fx / Y.z(), 0.0, -K.fx * Y.x() / (Y.z() * Y.z()), 0.0, K.fy / Y.z(),
                    -K.fy * Y.y() / (Y.z() * Y.z());
                Eigen::Matrix<double, 3, 6> point;
                if (backward) {
                    point.block<3, 3>(0, 0) = R_bwd * skew(X - t_fwd);
                    point.block<3, 3>(0, 3) = -R_bwd;
                } else {
                    point.block<3, 3>(0, 0) = -skew(R_fwd * X);
                    point.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity();
                }
                coord_jac = proj * point;
            }

            for (int c = 0; c < target.channels; ++c) {
                double sampled, gu, gv;
                if (!sample_with_jacobian(source, u, v, c, sampled, gu, gv))
                    break;
                const double r = target.at(y, x, c) - sampled;
                acc.sum += r * r;
                ++acc.count;
                if (with_derivatives) {
                    const Eigen::Matrix<double, 1, 6> dr =
                        -(gu * coord_jac.row(0) + gv * coord_jac.row(1));
                    acc.gradient += 2.0 * r * dr.transpose();
                    acc.normal += 2.0 * dr.transpose() * dr;
                }
            }
        }
    }
}

} // namespace

void OptimizeConfig::validate() const {
    if (max_iterations < 1)
        throw ConfigError("OptimizeConfig: max iterations must be >= 1");
    if (!(loss_tolerance > 0.0) || !(gradient_tolerance > 0.0))
        throw ConfigError("OptimizeConfig: tolerances must be positive");
    if (!(min_step > 0.0) || !(initial_step >= min_step) || !(max_step >= initial_step))
        throw ConfigError("OptimizeConfig: step bounds must satisfy 0 < min <= initial <= max");
    if (!(initial_damping > 0.0))
        throw ConfigError("OptimizeConfig: damping must be positive");
    if (!(fd_epsilon > 0.0))
        throw ConfigError("OptimizeConfig: finite-difference epsilon must be positive");
}

PoseSE3 chart_to_pose(const PoseParams& params, const PoseSE3& base) {
    const Eigen::Vector3d omega = params.head<3>();
    const double angle = omega.norm();
    if (!(angle < kPi))
        throw DomainError("chart_to_pose: rotation increment leaves the chart (|omega| >= pi)");
    Eigen::Quaterniond dq = Eigen::Quaterniond::Identity();
    if (angle > 0.0)
        dq = Eigen::Quaterniond(Eigen::AngleAxisd(angle, omega / angle));
    PoseSE3 out;
    out.rotation = (dq * base.rotation).normalized();
    out.translation = base.translation + params.tail<3>();
    return out;
}

PoseParams pose_to_chart(const PoseSE3& pose, const PoseSE3& base) {
    const Eigen::AngleAxisd aa(pose.rotation * base.rotation.conjugate());
    PoseParams params;
    params.head<3>() = aa.angle() * aa.axis();
    params.tail<3>() = pose.translation - base.translation;
    return params;
}

double pose_loss(const PoseParams& params, const PoseLossContext& ctx) {
    check_context(ctx);
    const PoseSE3 fwd = chart_to_pose(params, ctx.base);
    const PoseSE3 bwd = fwd.inverse();
    double value = bilateral_reprojection_loss(*ctx.image_t, *ctx.image_t1, *ctx.depth_t,
                                               *ctx.depth_t1, fwd, bwd, ctx.intrinsics, ctx.loss);
    if (ctx.reference_flow) {
        const FlowField synthesized = synthesize_flow(*ctx.depth_t, fwd, ctx.intrinsics);
        value += ctx.loss.lambda * flow_loss(synthesized, *ctx.reference_flow);
    }
    return value;
}

PoseParams numeric_gradient(const PoseParams& params,
                            const std::function<double(const PoseParams&)>& functional,
                            double epsilon) {
    if (!(epsilon > 0.0))
        throw ConfigError("numeric_gradient: epsilon must be positive");
    PoseParams gradient;
    for (int i = 0; i < 6; ++i) {
        PoseParams probe = params;
        probe[i] = params[i] + epsilon;
        const double hi = functional(probe);
        probe[i] = params[i] - epsilon;
        const double lo = functional(probe);
        if (!std::isfinite(hi) || !std::isfinite(lo))
            throw DomainError("numeric_gradient: non-finite loss at probe point");
        gradient[i] = (hi - lo) / (2.0 * epsilon);
    }
    return gradient;
}

PoseParams numeric_gradient(const PoseParams& params, const PoseLossContext& context,
                            double epsilon) {
    return numeric_gradient(
        params, [&](const PoseParams& p) { return pose_loss(p, context); }, epsilon);
}

double photometric_residual_loss(const PoseParams& params, const PoseLossContext& ctx) {
    check_context(ctx);
    const PoseSE3 fwd = chart_to_pose(params, ctx.base);

    DirectionAccum fwd_acc;
    accumulate_direction(*ctx.image_t, *ctx.image_t1, *ctx.depth_t, fwd, false, ctx.intrinsics,
                         false, fwd_acc);
    DirectionAccum bwd_acc;
    accumulate_direction(*ctx.image_t1, *ctx.image_t, *ctx.depth_t1, fwd, true, ctx.intrinsics,
                         false, bwd_acc);
    if (fwd_acc.count == 0 || bwd_acc.count == 0)
        throw EmptyDomainError("photometric_residual_loss: a warp direction has no valid overlap");
    return fwd_acc.sum / fwd_acc.count + bwd_acc.sum / bwd_acc.count;
}

double photometric_residual_gradient(const PoseLossContext& ctx, PoseParams& gradient,
                                     Eigen::Matrix<double, 6, 6>* gauss_newton) {
    check_context(ctx);
    const PoseSE3 fwd = ctx.base;

    DirectionAccum fwd_acc;
    accumulate_direction(*ctx.image_t, *ctx.image_t1, *ctx.depth_t, fwd, false, ctx.intrinsics,
                         true, fwd_acc);
    DirectionAccum bwd_acc;
    accumulate_direction(*ctx.image_t1, *ctx.image_t, *ctx.depth_t1, fwd, true, ctx.intrinsics,
                         true, bwd_acc);
    if (fwd_acc.count == 0 || bwd_acc.count == 0)
        throw EmptyDomainError(
            "photometric_residual_gradient: a warp direction has no valid overlap");

    gradient = fwd_acc.gradient / fwd_acc.count + bwd_acc.gradient / bwd_acc.count;
    if (gauss_newton)
        *gauss_newton = fwd_acc.normal / fwd_acc.count + bwd_acc.normal / bwd_acc.count;
    return fwd_acc.sum / fwd_acc.count + bwd_acc.sum / bwd_acc.count;
}

double flow_term_loss(const PoseParams& params, const PoseLossContext& ctx) {
    check_context(ctx);
    if (!ctx.reference_flow)
        throw DomainError("flow_term_loss: context has no reference flow");
    const PoseSE3 fwd = chart_to_pose(params, ctx.base);
    return flow_loss(synthesize_flow(*ctx.depth_t, fwd, ctx.intrinsics), *ctx.reference_flow);
}

double flow_term_gradient(const PoseLossContext& ctx, PoseParams& gradient) {
    check_context(ctx);
    if (!ctx.reference_flow)
        throw DomainError("flow_term_gradient: context has no reference flow");

    const Intrinsics& K = ctx.intrinsics;
    const DepthMap& depth = *ctx.depth_t;
    const FlowField& reference = *ctx.reference_flow;
    const FlowField synthesized = synthesize_flow(depth, ctx.base, K);
    if (synthesized.height != reference.height || synthesized.width != reference.width)
        throw ShapeError("flow_term_gradient: reference flow dimensions differ");

    const Eigen::Matrix3d R = ctx.base.rotation_matrix();
    const Eigen::Vector3d t = ctx.base.translation;

    gradient.setZero();
    double sum = 0.0;
    std::int64_t count = 0;
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * depth.width + x;
            if (!synthesized.valid[i] || !reference.valid[i])
                continue;
            const Eigen::Vector2d rho(synthesized.du[i] - reference.du[i],
                                      synthesized.dv[i] - reference.dv[i]);
            const double norm = rho.norm();
            sum += norm;
            ++count;
            if (norm == 0.0)
                continue;

            const double d = depth.at(y, x);
            const Eigen::Vector3d X((x - K.cx) / K.fx * d, (y - K.cy) / K.fy * d, d);
            const Eigen::Vector3d Y = R * X + t;
            Eigen::Matrix<double, 2, 3> proj;
            proj << K.fx / Y.z(), 0.0, -K.fx * Y.x() / (Y.z() * Y.z()), 0.0, K.fy / Y.z(),
                -K.fy * Y.y() / (Y.z() * Y.z());
            Eigen::Matrix<double, 3, 6> point;
            point.block<3, 3>(0, 0) = -skew(R * X);
            point.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity();
            gradient += (rho.transpose() / norm) * (proj * point);
        }
    }
    if (count == 0)
        throw EmptyDomainError("flow_term_gradient: no jointly valid pixels");
    gradient /= static_cast<double>(count);
    return sum / count;
}

std::pair<PoseSE3, OptimizeTrace> estimate_pose(const ImageBuffer& image_t,
                                                const ImageBuffer& image_t1,
                                                const DepthMap& depth_t, const DepthMap& depth_t1,
                                                const Intrinsics& K, const PoseSE3& init,
                                                const OptimizeConfig& config,
                                                const LossConfig& loss_config,
                                                const FlowField* reference_flow) {
    config.validate();
    loss_config.validate();

    PoseLossContext ctx;
    ctx.image_t = &image_t;
    ctx.image_t1 = &image_t1;
    ctx.depth_t = &depth_t;
    ctx.depth_t1 = &depth_t1;
    ctx.intrinsics = K;
    ctx.loss = loss_config;
    ctx.base = init;
    ctx.reference_flow = reference_flow;

    const PoseParams zero = PoseParams::Zero();
    OptimizeTrace trace;
    double loss = guarded_loss(zero, ctx);
    if (!std::isfinite(loss)) {
        trace.final_pose = init;
        throw OptimizationError("estimate_pose: initial pose has no valid photometric overlap",
                                trace);
    }
    trace.losses.push_back(loss);

    double step = config.initial_step;
    double damping = config.initial_damping;

    // Backtracking line search along a unit direction; returns the accepted
    // step length, or 0 when no step decreases the loss enough.
    const auto line_search = [&](const PoseParams& direction, double start, double slope,
                                 double& accepted_loss, PoseParams& accepted_params) {
        double s = start;
        while (s >= config.min_step) {
            const PoseParams candidate = s * direction;
            if (candidate.head<3>().norm() < kPi) {
                const double candidate_loss = guarded_loss(candidate, ctx);
                if (candidate_loss < loss - 1e-4 * s * slope && candidate_loss < loss) {
                    accepted_loss = candidate_loss;
                    accepted_params = candidate;
                    return s;
                }
            }
            s *= 0.5;
        }
        return 0.0;
    };

    int iter = 0;
    for (; iter < config.max_iterations; ++iter) {
        bool accepted = false;
        double candidate_loss = kInf;
        PoseParams candidate = PoseParams::Zero();
        double accepted_step = 0.0;

        if (config.method == OptimizeConfig::Method::gauss_newton) {
            PoseParams g;
            Eigen::Matrix<double, 6, 6> normal;
            try {
                photometric_residual_gradient(ctx, g, &normal);
                if (reference_flow) {
                    PoseParams g_flow;
                    flow_term_gradient(ctx, g_flow);
                    g += loss_config.lambda * g_flow;
                }
            } catch (const Error&) {
                break;
            }
            Eigen::Matrix<double, 6, 6> damped = normal;
            damped.diagonal() += damping * normal.diagonal().cwiseMax(1e-12);
            const PoseParams delta = damped.ldlt().solve(-g);
            if (delta.allFinite() && delta.norm() > 0.0) {
                accepted_step = line_search(delta / delta.norm(),
                                            std::min(delta.norm(), config.max_step), 0.0,
                                            candidate_loss, candidate);
                accepted = accepted_step > 0.0;
            }
            damping = accepted ? std::max(damping / 3.0, 1e-12) : damping * 10.0;
        }

        if (!accepted) {
            // Plain descent on the numeric gradient; also the fallback when a
            // Gauss-Newton step is rejected.
            PoseParams g;
            try {
                g = numeric_gradient(zero, ctx, config.fd_epsilon);
            } catch (const Error&) {
                break;
            }
            const double gnorm = g.norm();
            if (gnorm < config.gradient_tolerance) {
                trace.converged = true;
                break;
            }
            accepted_step = line_search(-g / gnorm, step, gnorm, candidate_loss, candidate);
            accepted = accepted_step > 0.0;
            if (accepted)
                step = std::clamp(2.0 * accepted_step, config.min_step, config.max_step);
        }

        if (!accepted) {
            trace.converged = true;
            break;
        }

        const double decrease = loss - candidate_loss;
        ctx.base = chart_to_pose(candidate, ctx.base);
        loss = candidate_loss;
        trace.losses.push_back(loss);
        if (decrease < config.loss_tolerance) {
            trace.converged = true;
            break;
        }
    }

    trace.iterations = iter;
    trace.final_pose = ctx.base;
    return {ctx.base, trace};
}

} // namespace flowdepth
