#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "flowdepth/raster.hpp"

namespace flowdepth {

/// Pinhole camera parameters in pixel units.
struct Intrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    Intrinsics() = default;
    Intrinsics(double fx, double fy, double cx, double cy, int width, int height);

    void validate() const;
};

/// Rigid transformation between camera frames, stored as a unit quaternion
/// and a metric translation.
///
/// Convention used throughout the library: a pose maps 3D points expressed
/// in the *source* frame's camera coordinates into the *target* frame's
/// camera coordinates, X_target = R * X_source + t. The pose written
/// T(a->b) therefore transports frame-a points into frame b.
struct PoseSE3 {
    Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
    Eigen::Vector3d translation{0.0, 0.0, 0.0};

    PoseSE3() = default;
    PoseSE3(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation);

    static PoseSE3 identity() { return PoseSE3(); }

    /// Composition: (A * B)(X) = A(B(X)). Renormalizes the quaternion.
    PoseSE3 operator*(const PoseSE3& other) const;

    PoseSE3 inverse() const;

    Eigen::Vector3d apply(const Eigen::Vector3d& point) const;

    Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }

    /// Exact identity check (identity transforms take bit-exact fast paths).
    bool is_identity() const;

    /// Rotation angle in radians between this pose's rotation and other's.
    double rotation_angle_to(const PoseSE3& other) const;
};

/// Pixel + depth to a 3D point in the camera frame:
/// ((u-cx)*d/fx, (v-cy)*d/fy, d). Throws DomainError for d <= 0.
Eigen::Vector3d backproject(double u, double v, double depth, const Intrinsics& K);

/// 3D camera-frame point to pixel coordinates. Throws DomainError for z <= 0.
Eigen::Vector2d project_point(const Eigen::Vector3d& point, const Intrinsics& K);

/// Per-pixel target coordinates of the depth map transported by the pose.
/// An entry is invalid where the depth is invalid, the transformed point has
/// z <= 0, or the projection lands outside the image rectangle expanded by
/// one pixel on each side.
PixelGrid reproject_coords(const DepthMap& depth, const PoseSE3& pose, const Intrinsics& K);

/// Bilinear sampling of the image at the grid coordinates. Coordinates are
/// clamped to the image rectangle for interpolation; an output pixel is
/// valid only when the grid entry is valid and the sample point lies inside
/// the unclamped rectangle [0, W-1] x [0, H-1].
ImageBuffer sample_bilinear(const ImageBuffer& image, const PixelGrid& grid);

/// View synthesis: samples the source image at the coordinates induced by
/// the depth map and pose. Equivalent to
/// sample_bilinear(source, reproject_coords(depth, pose, K)).
ImageBuffer warp_image(const ImageBuffer& source, const DepthMap& depth, const PoseSE3& pose,
                       const Intrinsics& K);

} // namespace flowdepth
