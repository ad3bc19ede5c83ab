#include "flowdepth/flow.hpp"

#include <cmath>
#include <string>

namespace flowdepth {

FlowField synthesize_flow(const DepthMap& depth, const PoseSE3& pose, const Intrinsics& K) {
    const PixelGrid grid = reproject_coords(depth, pose, K);
    FlowField flow(depth.height, depth.width, 0.0, 0.0, false);
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * depth.width + x;
            if (!grid.valid[i])
                continue;
            flow.du[i] = grid.u[i] - x;
            flow.dv[i] = grid.v[i] - y;
            flow.valid[i] = 1;
        }
    }
    return flow;
}

FlowField composite_flow(const std::vector<FlowPart>& parts) {
    if (parts.empty())
        throw ShapeError("composite_flow: no parts given");
    const int H = parts.front().flow->height;
    const int W = parts.front().flow->width;
    for (const FlowPart& part : parts) {
        if (!part.flow || !part.labels)
            throw ShapeError("composite_flow: null part");
        if (part.flow->height != H || part.flow->width != W || part.labels->height != H ||
            part.labels->width != W)
            throw ShapeError("composite_flow: parts have mismatched dimensions");
        if (part.region_id < 0 || part.region_id >= part.labels->region_count)
            throw DomainError("composite_flow: part claims unknown region id " +
                              std::to_string(part.region_id));
    }

    FlowField out(H, W, 0.0, 0.0, false);
    std::vector<std::uint8_t> claimed(out.size(), 0);
    for (const FlowPart& part : parts) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (part.labels->labels[i] != part.region_id)
                continue;
            if (claimed[i])
                throw ConsistencyError("composite_flow: pixel claimed by more than one part");
            claimed[i] = 1;
            if (part.flow->valid[i]) {
                out.du[i] = part.flow->du[i];
                out.dv[i] = part.flow->dv[i];
                out.valid[i] = 1;
            }
        }
    }
    return out;
}

DepthMap decompose_flow(const FlowField& flow, const PoseSE3& pose, const Intrinsics& K,
                        double min_parallax_px) {
    if (flow.height != K.height || flow.width != K.width)
        throw ShapeError("decompose_flow: flow dimensions do not match the intrinsics");
    if (pose.translation.norm() == 0.0)
        throw DegenerateError("decompose_flow: pose has no translation, depth is unobservable");

    const Eigen::Matrix3d R = pose.rotation_matrix();
    const Eigen::Vector3d t = pose.translation;
    DepthMap out(flow.height, flow.width, 0.0, false);

    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * flow.width + x;
            if (!flow.valid[i])
                continue;

            // Target coordinates in normalized image units.
            const double alpha = (x + flow.du[i] - K.cx) / K.fx;
            const double beta = (y + flow.dv[i] - K.cy) / K.fy;
            const Eigen::Vector3d ray((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
            const Eigen::Vector3d a = R * ray;

            // d*(a.x - alpha*a.z) = alpha*t.z - t.x and the v analogue.
            const double cu = a.x() - alpha * a.z();
            const double cv = a.y() - beta * a.z();
            const double bu = alpha * t.z() - t.x();
            const double bv = beta * t.z() - t.y();

            const double au = std::abs(cu);
            const double av = std::abs(cv);
            const double amax = std::max(au, av);
            if (amax == 0.0)
                continue;

            // Drop the uninformative equation when the system is badly
            // scaled (e.g. pure horizontal translation zeroes the v row).
            double d;
            if (std::min(au, av) < 1e-9 * amax)
                d = au >= av ? bu / cu : bv / cv;
            else
                d = (cu * bu + cv * bv) / (cu * cu + cv * cv);

            if (!std::isfinite(d) || d <= 0.0)
                continue;

            // Parallax check: displacement between the full projection and
            // the rotation-only projection at the recovered depth.
            const Eigen::Vector3d rotated = a * d;
            const Eigen::Vector3d moved = rotated + t;
            if (!(rotated.z() > 0.0) || !(moved.z() > 0.0))
                continue;
            const double pu = K.fx * (moved.x() / moved.z() - rotated.x() / rotated.z());
            const double pv = K.fy * (moved.y() / moved.z() - rotated.y() / rotated.z());
            if (std::hypot(pu, pv) < min_parallax_px)
                continue;

            out.depth[i] = d;
            out.valid[i] = 1;
        }
    }
    return out;
}

ScalarField endpoint_error_map(const FlowField& a, const FlowField& b) {
    if (a.height != b.height || a.width != b.width)
        throw ShapeError("endpoint_error_map: flow dimensions differ");
    ScalarField out(a.height, a.width, 0.0, false);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a.valid[i] || !b.valid[i])
            continue;
        out.values[i] = std::hypot(a.du[i] - b.du[i], a.dv[i] - b.dv[i]);
        out.valid[i] = 1;
    }
    return out;
}

} // namespace flowdepth
