#pragma once

#include <cstdint>
#include <vector>

#include "flowdepth/errors.hpp"

namespace flowdepth {

/// Multi-channel intensity image. Values are stored row-major,
/// channel-interleaved, and must stay within [0, 1]. The validity mask has
/// one entry per pixel; invalid pixels keep their stored value (masking
/// writes zeros there) but are excluded from losses and statistics.
struct ImageBuffer {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;
    std::vector<std::uint8_t> valid;

    ImageBuffer() = default;
    ImageBuffer(int height, int width, int channels, double fill = 0.0, bool valid_fill = true);

    std::size_t size() const { return static_cast<std::size_t>(height) * width; }

    double& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool is_valid(int y, int x) const {
        return valid[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set_valid(int y, int x, bool v) {
        valid[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }

    /// Throws DomainError/ShapeError if intensities leave [0,1] or the
    /// buffers disagree with the dimensions.
    void validate() const;
};

/// Per-pixel metric depth with validity mask. Valid entries are finite and
/// strictly positive; invalid entries carry 0.
struct DepthMap {
    int height = 0;
    int width = 0;
    std::vector<double> depth;
    std::vector<std::uint8_t> valid;

    DepthMap() = default;
    DepthMap(int height, int width, double fill = 0.0, bool valid_fill = false);

    std::size_t size() const { return static_cast<std::size_t>(height) * width; }

    double& at(int y, int x) { return depth[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return depth[static_cast<std::size_t>(y) * width + x]; }
    bool is_valid(int y, int x) const {
        return valid[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set_valid(int y, int x, bool v) {
        valid[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }

    void validate() const;
};

/// Dense optical flow stored as per-pixel displacement (du, dv) in pixels:
/// target coordinates minus source coordinates.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<double> du;
    std::vector<double> dv;
    std::vector<std::uint8_t> valid;

    FlowField() = default;
    FlowField(int height, int width, double u_fill = 0.0, double v_fill = 0.0,
              bool valid_fill = true);

    std::size_t size() const { return static_cast<std::size_t>(height) * width; }

    double& u(int y, int x) { return du[static_cast<std::size_t>(y) * width + x]; }
    double u(int y, int x) const { return du[static_cast<std::size_t>(y) * width + x]; }
    double& v(int y, int x) { return dv[static_cast<std::size_t>(y) * width + x]; }
    double v(int y, int x) const { return dv[static_cast<std::size_t>(y) * width + x]; }
    bool is_valid(int y, int x) const {
        return valid[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set_valid(int y, int x, bool v) {
        valid[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }

    void validate() const;
};

/// Continuous target coordinates per pixel, the output of coordinate
/// reprojection. Invalid entries carry NaN and must never be sampled.
struct PixelGrid {
    int height = 0;
    int width = 0;
    std::vector<double> u;
    std::vector<double> v;
    std::vector<std::uint8_t> valid;

    PixelGrid() = default;
    PixelGrid(int height, int width);

    /// Grid mapping every pixel to itself.
    static PixelGrid identity(int height, int width);

    std::size_t size() const { return static_cast<std::size_t>(height) * width; }
    bool is_valid(int y, int x) const {
        return valid[static_cast<std::size_t>(y) * width + x] != 0;
    }
};

/// Single-channel real-valued field (SSIM maps, endpoint errors, ...).
struct ScalarField {
    int height = 0;
    int width = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> valid;

    ScalarField() = default;
    ScalarField(int height, int width, double fill = 0.0, bool valid_fill = true);

    std::size_t size() const { return static_cast<std::size_t>(height) * width; }
    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    bool is_valid(int y, int x) const {
        return valid[static_cast<std::size_t>(y) * width + x] != 0;
    }
};

/// Dense boolean raster.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;

    BinaryMask() = default;
    BinaryMask(int height, int width, bool fill = false);

    std::size_t size() const { return static_cast<std::size_t>(height) * width; }
    bool at(int y, int x) const {
        return values[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set(int y, int x, bool v) {
        values[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    std::int64_t count() const;
};

/// Total per-pixel labeling into motion regions. Label 0 is the static
/// (primary) region; labels 1..k are motion regions. Labels are contiguous
/// and every pixel carries one.
struct RegionLabels {
    int height = 0;
    int width = 0;
    std::vector<std::int32_t> labels;
    std::int32_t region_count = 0;
    std::vector<std::int64_t> areas;

    RegionLabels() = default;
    RegionLabels(int height, int width, std::int32_t fill = 0);

    std::size_t size() const { return static_cast<std::size_t>(height) * width; }
    std::int32_t at(int y, int x) const {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
    std::int32_t& at(int y, int x) {
        return labels[static_cast<std::size_t>(y) * width + x];
    }

    /// Number of motion regions k (regions beyond the static one).
    std::int32_t motion_region_count() const { return region_count - 1; }

    /// Recomputes region_count and areas from the label raster and checks
    /// that labels are contiguous starting at 0.
    void recount();

    /// Mask of pixels carrying the given label.
    BinaryMask region_mask(std::int32_t region_id) const;
};

} // namespace flowdepth
