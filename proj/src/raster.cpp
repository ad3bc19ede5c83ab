#include "flowdepth/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace flowdepth {

namespace {

void check_dims(int height, int width, const char* what) {
    if (height < 1 || width < 1)
        throw ShapeError(std::string(what) + ": dimensions must be at least 1x1, got " +
                         std::to_string(height) + "x" + std::to_string(width));
}

} // namespace

ImageBuffer::ImageBuffer(int height_, int width_, int channels_, double fill, bool valid_fill)
    : height(height_), width(width_), channels(channels_) {
    check_dims(height, width, "ImageBuffer");
    if (channels < 1)
        throw ShapeError("ImageBuffer: channel count must be at least 1");
    data.assign(size() * channels, fill);
    valid.assign(size(), valid_fill ? 1 : 0);
}

void ImageBuffer::validate() const {
    check_dims(height, width, "ImageBuffer");
    if (channels < 1)
        throw ShapeError("ImageBuffer: channel count must be at least 1");
    if (data.size() != size() * channels || valid.size() != size())
        throw ShapeError("ImageBuffer: buffer sizes disagree with dimensions");
    for (double v : data)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw DomainError("ImageBuffer: intensities must be finite and within [0, 1]");
}

DepthMap::DepthMap(int height_, int width_, double fill, bool valid_fill)
    : height(height_), width(width_) {
    check_dims(height, width, "DepthMap");
    depth.assign(size(), fill);
    valid.assign(size(), valid_fill ? 1 : 0);
}

void DepthMap::validate() const {
    check_dims(height, width, "DepthMap");
    if (depth.size() != size() || valid.size() != size())
        throw ShapeError("DepthMap: buffer sizes disagree with dimensions");
    for (std::size_t i = 0; i < depth.size(); ++i)
        if (valid[i] && (!std::isfinite(depth[i]) || depth[i] <= 0.0))
            throw DomainError("DepthMap: valid depths must be finite and strictly positive");
}

FlowField::FlowField(int height_, int width_, double u_fill, double v_fill, bool valid_fill)
    : height(height_), width(width_) {
    check_dims(height, width, "FlowField");
    du.assign(size(), u_fill);
    dv.assign(size(), v_fill);
    valid.assign(size(), valid_fill ? 1 : 0);
}

void FlowField::validate() const {
    check_dims(height, width, "FlowField");
    if (du.size() != size() || dv.size() != size() || valid.size() != size())
        throw ShapeError("FlowField: buffer sizes disagree with dimensions");
    for (std::size_t i = 0; i < du.size(); ++i)
        if (valid[i] && (!std::isfinite(du[i]) || !std::isfinite(dv[i])))
            throw DomainError("FlowField: valid entries must be finite");
}

PixelGrid::PixelGrid(int height_, int width_) : height(height_), width(width_) {
    check_dims(height, width, "PixelGrid");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    u.assign(size(), nan);
    v.assign(size(), nan);
    valid.assign(size(), 0);
}

PixelGrid PixelGrid::identity(int height, int width) {
    PixelGrid grid(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            grid.u[i] = x;
            grid.v[i] = y;
            grid.valid[i] = 1;
        }
    }
    return grid;
}

ScalarField::ScalarField(int height_, int width_, double fill, bool valid_fill)
    : height(height_), width(width_) {
    check_dims(height, width, "ScalarField");
    values.assign(size(), fill);
    valid.assign(size(), valid_fill ? 1 : 0);
}

BinaryMask::BinaryMask(int height_, int width_, bool fill) : height(height_), width(width_) {
    check_dims(height, width, "BinaryMask");
    values.assign(size(), fill ? 1 : 0);
}

std::int64_t BinaryMask::count() const {
    return std::accumulate(values.begin(), values.end(), std::int64_t{0},
                           [](std::int64_t acc, std::uint8_t v) { return acc + (v ? 1 : 0); });
}

RegionLabels::RegionLabels(int height_, int width_, std::int32_t fill)
    : height(height_), width(width_) {
    check_dims(height, width, "RegionLabels");
    labels.assign(size(), fill);
    recount();
}

void RegionLabels::recount() {
    if (labels.size() != size())
        throw ShapeError("RegionLabels: label buffer disagrees with dimensions");
    std::int32_t max_label = -1;
    for (std::int32_t l : labels) {
        if (l < 0)
            throw DomainError("RegionLabels: labels must be non-negative");
        max_label = std::max(max_label, l);
    }
    region_count = max_label + 1;
    areas.assign(region_count, 0);
    for (std::int32_t l : labels)
        ++areas[l];
    for (std::int32_t r = 0; r < region_count; ++r)
        if (areas[r] == 0)
            throw ConsistencyError("RegionLabels: labels must be contiguous, region " +
                                   std::to_string(r) + " is empty");
}

BinaryMask RegionLabels::region_mask(std::int32_t region_id) const {
    if (region_id < 0 || region_id >= region_count)
        throw DomainError("RegionLabels: unknown region id " + std::to_string(region_id));
    BinaryMask mask(height, width);
    for (std::size_t i = 0; i < labels.size(); ++i)
        mask.values[i] = labels[i] == region_id ? 1 : 0;
    return mask;
}

} // namespace flowdepth
