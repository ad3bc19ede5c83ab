#include "flowdepth/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <string>

namespace flowdepth {

namespace {

inline int clamp_index(int v, int hi) { return std::clamp(v, 0, hi); }

// Separable box mean with replicated borders.
std::vector<double> box_filter(const std::vector<double>& src, int H, int W, int kernel) {
    const int r = kernel / 2;
    std::vector<double> row_pass(src.size());
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double sum = 0.0;
            for (int dx = -r; dx <= r; ++dx)
                sum += src[static_cast<std::size_t>(y) * W + clamp_index(x + dx, W - 1)];
            row_pass[static_cast<std::size_t>(y) * W + x] = sum / kernel;
        }
    }
    std::vector<double> out(src.size());
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double sum = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                sum += row_pass[static_cast<std::size_t>(clamp_index(y + dy, H - 1)) * W + x];
            out[static_cast<std::size_t>(y) * W + x] = sum / kernel;
        }
    }
    return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
    BinaryMask out(mask.height, mask.width);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            bool hit = false;
            for (int dy = -radius; dy <= radius && !hit; ++dy)
                for (int dx = -radius; dx <= radius && !hit; ++dx)
                    hit = mask.at(clamp_index(y + dy, mask.height - 1),
                                  clamp_index(x + dx, mask.width - 1));
            out.set(y, x, hit);
        }
    }
    return out;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
    BinaryMask out(mask.height, mask.width);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            bool all = true;
            for (int dy = -radius; dy <= radius && all; ++dy)
                for (int dx = -radius; dx <= radius && all; ++dx)
                    all = mask.at(clamp_index(y + dy, mask.height - 1),
                                  clamp_index(x + dx, mask.width - 1));
            out.set(y, x, all);
        }
    }
    return out;
}

constexpr std::array<std::array<int, 2>, 8> kNeighbors8 = {
    {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};

} // namespace

void SegmentationConfig::validate() const {
    if (kernels.empty())
        throw ConfigError("SegmentationConfig: at least one smoothing kernel required");
    for (int k : kernels)
        if (k < 1 || k % 2 == 0)
            throw ConfigError("SegmentationConfig: kernel sizes must be odd and >= 1, got " +
                              std::to_string(k));
    if (!(edge_threshold > 0.0))
        throw ConfigError("SegmentationConfig: edge threshold must be positive");
    if (min_area < 1)
        throw ConfigError("SegmentationConfig: minimum area must be >= 1");
    if (closing_radius < 0)
        throw ConfigError("SegmentationConfig: closing radius must be >= 0");
}

FlowField smooth_flow(const FlowField& flow, const std::vector<int>& kernels) {
    for (int k : kernels)
        if (k < 1 || k % 2 == 0)
            throw ConfigError("smooth_flow: kernel sizes must be odd and >= 1, got " +
                              std::to_string(k));
    FlowField out = flow;
    for (int k : kernels) {
        if (k == 1)
            continue;
        out.du = box_filter(out.du, out.height, out.width, k);
        out.dv = box_filter(out.dv, out.height, out.width, k);
    }
    return out;
}

BinaryMask edge_map(const FlowField& flow, double threshold) {
    if (!(threshold > 0.0))
        throw ConfigError("edge_map: threshold must be positive");

    static constexpr int sobel_x[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static constexpr int sobel_y[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    static constexpr double kWeightSum = 4.0;

    const int H = flow.height;
    const int W = flow.width;
    BinaryMask out(H, W);
    const std::array<const std::vector<double>*, 2> channels = {&flow.du, &flow.dv};
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double magnitude = 0.0;
            for (const std::vector<double>* channel : channels) {
                double gx = 0.0;
                double gy = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const double v =
                            (*channel)[static_cast<std::size_t>(clamp_index(y + dy, H - 1)) * W +
                                       clamp_index(x + dx, W - 1)];
                        gx += sobel_x[dy + 1][dx + 1] * v;
                        gy += sobel_y[dy + 1][dx + 1] * v;
                    }
                }
                magnitude = std::max(magnitude, std::hypot(gx, gy) / kWeightSum);
            }
            out.set(y, x, magnitude > threshold);
        }
    }
    return out;
}

RegionLabels label_regions(const BinaryMask& edges, int closing_radius) {
    if (closing_radius < 0)
        throw ConfigError("label_regions: closing radius must be >= 0");

    BinaryMask closed = edges;
    if (closing_radius > 0)
        closed = erode(dilate(edges, closing_radius), closing_radius);

    const int H = closed.height;
    const int W = closed.width;
    RegionLabels out;
    out.height = H;
    out.width = W;
    out.labels.assign(static_cast<std::size_t>(H) * W, -1);

    // Flood fill of non-edge pixels, labels in row-major first-visit order.
    std::int32_t next_label = 0;
    std::deque<std::pair<int, int>> queue;
    for (int sy = 0; sy < H; ++sy) {
        for (int sx = 0; sx < W; ++sx) {
            if (closed.at(sy, sx) || out.at(sy, sx) >= 0)
                continue;
            const std::int32_t label = next_label++;
            out.at(sy, sx) = label;
            queue.push_back({sy, sx});
            while (!queue.empty()) {
                const auto [y, x] = queue.front();
                queue.pop_front();
                for (const auto& n : kNeighbors8) {
                    const int ny = y + n[0];
                    const int nx = x + n[1];
                    if (ny < 0 || ny >= H || nx < 0 || nx >= W)
                        continue;
                    if (closed.at(ny, nx) || out.at(ny, nx) >= 0)
                        continue;
                    out.at(ny, nx) = label;
                    queue.push_back({ny, nx});
                }
            }
        }
    }

    if (next_label == 0) {
        // Everything was an edge; collapse to a single region.
        std::fill(out.labels.begin(), out.labels.end(), 0);
        out.recount();
        return out;
    }

    // Absorb edge pixels layer by layer: majority vote over labeled
    // 8-neighbors of the previous round, ties to the lowest label.
    bool progress = true;
    while (progress) {
        progress = false;
        const std::vector<std::int32_t> snapshot = out.labels;
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                if (snapshot[static_cast<std::size_t>(y) * W + x] >= 0)
                    continue;
                std::array<std::int32_t, 8> votes{};
                std::array<int, 8> counts{};
                int distinct = 0;
                for (const auto& n : kNeighbors8) {
                    const int ny = y + n[0];
                    const int nx = x + n[1];
                    if (ny < 0 || ny >= H || nx < 0 || nx >= W)
                        continue;
                    const std::int32_t l = snapshot[static_cast<std::size_t>(ny) * W + nx];
                    if (l < 0)
                        continue;
                    int slot = 0;
                    while (slot < distinct && votes[slot] != l)
                        ++slot;
                    if (slot == distinct)
                        votes[distinct++] = l;
                    ++counts[slot];
                }
                std::int32_t best_label = -1;
                int best_count = 0;
                for (int s = 0; s < distinct; ++s) {
                    if (counts[s] > best_count ||
                        (counts[s] == best_count && votes[s] < best_label)) {
                        best_label = votes[s];
                        best_count = counts[s];
                    }
                }
                if (best_label >= 0) {
                    out.at(y, x) = best_label;
                    progress = true;
                }
            }
        }
    }

    out.recount();
    return out;
}

RegionLabels filter_regions(const RegionLabels& labels, std::int64_t min_area) {
    if (min_area < 1)
        throw ConfigError("filter_regions: minimum area must be >= 1");

    // Largest region becomes the static label 0, ties to the lowest label.
    std::int32_t static_label = 0;
    for (std::int32_t r = 1; r < labels.region_count; ++r)
        if (labels.areas[r] > labels.areas[static_label])
            static_label = r;

    std::vector<std::int32_t> mapping(labels.region_count, -1);
    mapping[static_label] = 0;
    for (std::int32_t r = 0; r < labels.region_count; ++r)
        if (r != static_label && labels.areas[r] < min_area)
            mapping[r] = 0;

    // Surviving motion regions get ids in row-major first-visit order.
    RegionLabels out;
    out.height = labels.height;
    out.width = labels.width;
    out.labels.resize(labels.size());
    std::int32_t next_label = 1;
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        const std::int32_t r = labels.labels[i];
        if (mapping[r] < 0)
            mapping[r] = next_label++;
        out.labels[i] = mapping[r];
    }
    out.recount();
    return out;
}

RegionLabels segment_motion(const FlowField& flow, const SegmentationConfig& config) {
    config.validate();
    const FlowField smoothed = smooth_flow(flow, config.kernels);
    const BinaryMask edges = edge_map(smoothed, config.edge_threshold);
    return filter_regions(label_regions(edges, config.closing_radius), config.min_area);
}

ImageBuffer mask_image(const ImageBuffer& image, const RegionLabels& labels,
                       std::int32_t region_id) {
    if (image.height != labels.height || image.width != labels.width)
        throw ShapeError("mask_image: image and label dimensions differ");
    if (region_id < 0 || region_id >= labels.region_count)
        throw DomainError("mask_image: unknown region id " + std::to_string(region_id));

    ImageBuffer out = image;
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        if (labels.labels[i] == region_id)
            continue;
        for (int c = 0; c < image.channels; ++c)
            out.data[i * image.channels + c] = 0.0;
        out.valid[i] = 0;
    }
    return out;
}

} // namespace flowdepth
