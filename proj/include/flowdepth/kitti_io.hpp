#pragma once

#include <array>
#include <string>

#include "flowdepth/geometry.hpp"
#include "flowdepth/raster.hpp"

namespace flowdepth {

/// 16-bit single-channel PNG, depth = stored / 256 m, stored 0 marks an
/// invalid pixel. Writing rounds half-up to the 1/256 grid, so a round trip
/// stays within 1/512 m for depths in [1/512, 255.996] m.
DepthMap read_depth_png(const std::string& path);
void write_depth_png(const DepthMap& depth, const std::string& path);

/// 16-bit three-channel PNG, u = (ch1 - 2^15)/64 px, v analogously, third
/// channel nonzero marks valid. Round trip stays within 1/128 px.
FlowField read_flow_png(const std::string& path);
void write_flow_png(const FlowField& flow, const std::string& path);

/// Grayscale or RGB intensity images, 8- or 16-bit; an alpha channel is
/// dropped on read. Values map linearly onto [0, 1].
ImageBuffer read_image_png(const std::string& path);
void write_image_png(const ImageBuffer& image, const std::string& path, int bit_depth = 16);

/// 16-bit single-channel PNG storing raw region labels.
RegionLabels read_labels_png(const std::string& path);
void write_labels_png(const RegionLabels& labels, const std::string& path);

/// One camera's calibration: the raw 3x4 projection matrix (row-major) and
/// the intrinsics derived from it at the native image size.
struct CalibrationRecord {
    std::array<double, 12> projection{};
    int native_width = 0;
    int native_height = 0;
    Intrinsics intrinsics;
};

/// Parses `key: <12 reals>` plus the matching size line (S_rect_NN / S_NN)
/// from a KITTI-style calibration text file. Throws ParseError naming any
/// missing key.
CalibrationRecord read_calibration(const std::string& path, const std::string& key = "P_rect_02");

/// Linear rescaling of the intrinsics onto a new image size.
Intrinsics rescale_intrinsics(const Intrinsics& intrinsics, int new_width, int new_height);

/// Bilinear image resize; a target pixel is valid when every contributing
/// source tap is valid.
ImageBuffer resize_image(const ImageBuffer& image, int new_width, int new_height);

/// Nearest-neighbor depth resize: values are never blended, validity is
/// copied from the nearest source pixel.
DepthMap resize_depth(const DepthMap& depth, int new_width, int new_height);

/// Bilinear flow resize with displacement components rescaled by the axis
/// ratios.
FlowField resize_flow(const FlowField& flow, int new_width, int new_height);

} // namespace flowdepth
