#pragma once

#include <vector>

#include "flowdepth/raster.hpp"

namespace flowdepth {

/// Knobs of the motion segmentation pipeline. Defaults: three smoothing
/// passes with kernels 3, 5 and 9, edge threshold 0.5 flow-px per image-px,
/// minimum region area 3000 px, closing radius 2.
struct SegmentationConfig {
    std::vector<int> kernels{3, 5, 9};
    double edge_threshold = 0.5;
    std::int64_t min_area = 3000;
    int closing_radius = 2;

    void validate() const;
};

/// Sequential box-mean filtering of both flow channels with the given odd
/// kernel sizes. Borders replicate edge values; validity is unchanged.
FlowField smooth_flow(const FlowField& flow, const std::vector<int>& kernels);

/// 3x3 Sobel gradients per flow channel with replicated borders. A pixel is
/// an edge when the larger of the two channels' gradient magnitudes exceeds
/// the threshold. The Sobel response is divided by the kernel weight sum (4)
/// so thresholds are in flow pixels per image pixel.
BinaryMask edge_map(const FlowField& flow, double threshold);

/// Regions from an edge mask: the mask is morphologically closed with a
/// square structuring element to seal small outline gaps, non-edge pixels
/// are grouped by 8-connected traversal (labels in row-major first-visit
/// order), and remaining edge pixels are absorbed into the neighboring
/// region with the most 8-neighbors, ties to the lowest label.
RegionLabels label_regions(const BinaryMask& edges, int closing_radius = 2);

/// Merges every region smaller than min_area into the static region,
/// makes the largest region label 0 and renumbers the surviving motion
/// regions contiguously in first-visit order. Idempotent.
RegionLabels filter_regions(const RegionLabels& labels, std::int64_t min_area);

/// Full pipeline: smooth, edge-filter, label, area-filter.
RegionLabels segment_motion(const FlowField& flow, const SegmentationConfig& config);

/// Keeps intensities inside the region and zeroes + invalidates everything
/// else, so other regions never contribute to this region's loss.
ImageBuffer mask_image(const ImageBuffer& image, const RegionLabels& labels,
                       std::int32_t region_id);

} // namespace flowdepth
