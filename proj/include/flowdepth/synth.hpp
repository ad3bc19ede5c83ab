#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowdepth/geometry.hpp"
#include "flowdepth/raster.hpp"

namespace flowdepth {

enum class TextureKind { noise, checker };

/// A fronto-parallel textured card at fixed depth with its own rigid motion.
/// The footprint is given in frame-t pixel coordinates.
struct ObjectSpec {
    enum class Shape { rectangle, ellipse };
    Shape shape = Shape::rectangle;
    // rectangle: u0 v0 u1 v1 (half-open bounds); ellipse: center u, v and radii.
    double p0 = 0.0, p1 = 0.0, p2 = 0.0, p3 = 0.0;
    double depth = 1.0;
    PoseSE3 motion; ///< object points between frames, in frame-t camera coords
};

/// Deterministic description of a rigid two-frame scene: a textured
/// background plane, optional moving cards, and the camera's ego-motion
/// given as the frame-t -> frame-t+1 point transform.
struct SceneSpec {
    Intrinsics intrinsics{100.0, 100.0, 127.5, 63.5, 256, 128};
    std::uint64_t seed = 1;
    TextureKind texture = TextureKind::noise;
    double texture_scale = 1.0;
    double background_depth = 2.0;
    Eigen::Vector3d background_normal{0.0, 0.0, 1.0}; ///< plane normal, camera frame
    PoseSE3 ego;
    std::vector<ObjectSpec> objects;

    void validate() const;
};

/// Everything a scene spec induces: both frames, both depth maps, the exact
/// analytic flow, footprint labels, per-frame occlusion masks, and the
/// poses that produced them.
struct SceneBundle {
    ImageBuffer image_t;
    ImageBuffer image_t1;
    DepthMap depth_t;
    DepthMap depth_t1;
    PoseSE3 ego;
    std::vector<PoseSE3> object_motions;
    FlowField flow_gt;
    RegionLabels labels_gt;
    BinaryMask occluded_t;  ///< frame-t pixels whose target location is hidden in t+1
    BinaryMask occluded_t1; ///< frame-t+1 pixels whose source location is hidden in t
};

/// Renders both frames analytically (textures are evaluated at transformed
/// surface points, never resampled from rasters), so ground truth carries no
/// interpolation error. Bit-deterministic for a fixed spec.
SceneBundle generate(const SceneSpec& spec);

/// Composes the pose with a random rotation of exactly rot_deg degrees
/// (left-multiplied) and a random translation offset of exactly trans_m
/// meters. Deterministic per seed.
PoseSE3 perturb_pose(const PoseSE3& pose, double rot_deg, double trans_m, std::uint64_t seed);

/// Key-value text codec for scene specs.
SceneSpec parse_scene_spec(const std::string& text);
std::string serialize_scene_spec(const SceneSpec& spec);

/// FNV-1a hash of the canonical serialization.
std::uint64_t scene_spec_digest(const SceneSpec& spec);

} // namespace flowdepth
