#pragma once

#include <optional>
#include <vector>

#include "dds/grid.hpp"

namespace dds {

/// Per-pixel class labels in [0, K]; 0 is background.
struct SegmentationMap {
    LabelGrid labels;
    std::optional<BinaryMap> ignore;

    int height() const { return labels.height; }
    int width() const { return labels.width; }
};

enum class Thickness { Thick, Thin };

struct EdgeGroundTruth {
    /// per_class[k-1] is the boundary map of class k.
    std::vector<BinaryMap> per_class;
    BinaryMap union_map;
    Thickness thickness = Thickness::Thick;

    int classes() const { return static_cast<int>(per_class.size()); }
};

/// Throws std::out_of_range if a label lies outside [0, K] or the ignore
/// mask has different dims.
void validate(const SegmentationMap& seg, int K);

/// A pixel labelled k >= 1 is a class-k boundary if any of its 8 neighbours
/// inside the image carries a different label. Background pixels never form
/// boundaries themselves.
EdgeGroundTruth semantic_boundaries(const SegmentationMap& seg, int K);

/// Logical OR over the class maps.
BinaryMap binary_union(const EdgeGroundTruth& gt);

/// Guo-Hall thinning to unit width. Pixels outside the image count as
/// background. Iterates to a fixed point, so thin(thin(x)) == thin(x).
BinaryMap thin(const BinaryMap& edges);

/// Thins every class map; the union is rebuilt as the OR of the thinned maps.
EdgeGroundTruth thin(const EdgeGroundTruth& gt);

/// Single-pixel-wide category-agnostic edges: thin(union(thick)).
BinaryMap binary_edge_target(const EdgeGroundTruth& thick);

/// Nearest-neighbour label downsampling (top-left sample of each block).
/// Boundaries must be re-derived from the result, never downsampled.
/// Throws std::invalid_argument when `factor` does not divide both dims.
SegmentationMap downsample_protocol(const SegmentationMap& seg, int factor);

/// True when no 2x2 block is entirely on.
bool is_unit_width(const BinaryMap& m);

/// Number of 8-connected components of on-pixels.
int count_components(const BinaryMap& m);

}  // namespace dds
