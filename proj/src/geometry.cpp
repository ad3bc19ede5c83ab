#include "flowdepth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flowdepth {

Intrinsics::Intrinsics(double fx_, double fy_, double cx_, double cy_, int width_, int height_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(width_), height(height_) {
    validate();
}

void Intrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
        throw DomainError("Intrinsics: focal lengths must be positive");
    if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) || !std::isfinite(cy))
        throw DomainError("Intrinsics: parameters must be finite");
    if (width < 1 || height < 1)
        throw ShapeError("Intrinsics: image dimensions must be at least 1x1");
}

PoseSE3::PoseSE3(const Eigen::Quaterniond& rotation_, const Eigen::Vector3d& translation_)
    : rotation(rotation_.normalized()), translation(translation_) {}

PoseSE3 PoseSE3::operator*(const PoseSE3& other) const {
    PoseSE3 out;
    out.rotation = (rotation * other.rotation).normalized();
    out.translation = rotation * other.translation + translation;
    return out;
}

PoseSE3 PoseSE3::inverse() const {
    PoseSE3 out;
    out.rotation = rotation.conjugate();
    out.translation = -(out.rotation * translation);
    return out;
}

Eigen::Vector3d PoseSE3::apply(const Eigen::Vector3d& point) const {
    return rotation * point + translation;
}

bool PoseSE3::is_identity() const {
    return std::abs(rotation.w()) == 1.0 && rotation.x() == 0.0 && rotation.y() == 0.0 &&
           rotation.z() == 0.0 && translation.x() == 0.0 && translation.y() == 0.0 &&
           translation.z() == 0.0;
}

double PoseSE3::rotation_angle_to(const PoseSE3& other) const {
    return Eigen::AngleAxisd(rotation.conjugate() * other.rotation).angle();
}

Eigen::Vector3d backproject(double u, double v, double depth, const Intrinsics& K) {
    if (!std::isfinite(depth) || depth <= 0.0)
        throw DomainError("backproject: depth must be finite and positive, got " +
                          std::to_string(depth));
    return {(u - K.cx) * depth / K.fx, (v - K.cy) * depth / K.fy, depth};
}

Eigen::Vector2d project_point(const Eigen::Vector3d& point, const Intrinsics& K) {
    if (!(point.z() > 0.0))
        throw DomainError("project_point: point is behind the camera (z <= 0)");
    return {K.fx * point.x() / point.z() + K.cx, K.fy * point.y() / point.z() + K.cy};
}

PixelGrid reproject_coords(const DepthMap& depth, const PoseSE3& pose, const Intrinsics& K) {
    if (depth.height != K.height || depth.width != K.width)
        throw ShapeError("reproject_coords: depth dimensions do not match the intrinsics");

    PixelGrid grid(depth.height, depth.width);

    // The identity transform maps every pixel to itself exactly; going
    // through projection arithmetic would leave rounding residue.
    if (pose.is_identity()) {
        for (int y = 0; y < depth.height; ++y) {
            for (int x = 0; x < depth.width; ++x) {
                if (!depth.is_valid(y, x))
                    continue;
                const std::size_t i = static_cast<std::size_t>(y) * depth.width + x;
                grid.u[i] = x;
                grid.v[i] = y;
                grid.valid[i] = 1;
            }
        }
        return grid;
    }

    const Eigen::Matrix3d R = pose.rotation_matrix();
    const Eigen::Vector3d t = pose.translation;
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            if (!depth.is_valid(y, x))
                continue;
            const double d = depth.at(y, x);
            const Eigen::Vector3d ray((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
            const Eigen::Vector3d p = R * (ray * d) + t;
            if (!(p.z() > 0.0))
                continue;
            const double u = K.fx * p.x() / p.z() + K.cx;
            const double v = K.fy * p.y() / p.z() + K.cy;
            if (u < -1.0 || u > K.width || v < -1.0 || v > K.height)
                continue;
            const std::size_t i = static_cast<std::size_t>(y) * depth.width + x;
            grid.u[i] = u;
            grid.v[i] = v;
            grid.valid[i] = 1;
        }
    }
    return grid;
}

ImageBuffer sample_bilinear(const ImageBuffer& image, const PixelGrid& grid) {
    if (image.height != grid.height || image.width != grid.width)
        throw ShapeError("sample_bilinear: image and grid dimensions differ");

    ImageBuffer out(image.height, image.width, image.channels, 0.0, false);
    const int W = image.width;
    const int H = image.height;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!grid.is_valid(y, x))
                continue;
            const std::size_t i = static_cast<std::size_t>(y) * W + x;
            const double su = grid.u[i];
            const double sv = grid.v[i];
            const bool inside = su >= 0.0 && su <= W - 1.0 && sv >= 0.0 && sv <= H - 1.0;

            // Clamp-to-edge interpolation; validity already excludes samples
            // whose taps would fall outside the rectangle.
            const double cu = std::clamp(su, 0.0, static_cast<double>(W - 1));
            const double cv = std::clamp(sv, 0.0, static_cast<double>(H - 1));
            const int x0 = std::min(static_cast<int>(std::floor(cu)), W - 1);
            const int y0 = std::min(static_cast<int>(std::floor(cv)), H - 1);
            const int x1 = std::min(x0 + 1, W - 1);
            const int y1 = std::min(y0 + 1, H - 1);
            const double fu = cu - x0;
            const double fv = cv - y0;
            for (int c = 0; c < image.channels; ++c) {
                const double top = (1.0 - fu) * image.at(y0, x0, c) + fu * image.at(y0, x1, c);
                const double bot = (1.0 - fu) * image.at(y1, x0, c) + fu * image.at(y1, x1, c);
                out.at(y, x, c) = (1.0 - fv) * top + fv * bot;
            }
            out.set_valid(y, x, inside);
        }
    }
    return out;
}

ImageBuffer warp_image(const ImageBuffer& source, const DepthMap& depth, const PoseSE3& pose,
                       const Intrinsics& K) {
    if (source.height != depth.height || source.width != depth.width)
        throw ShapeError("warp_image: image and depth dimensions differ");
    return sample_bilinear(source, reproject_coords(depth, pose, K));
}

} // namespace flowdepth
