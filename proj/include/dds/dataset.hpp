#pragma once

#include <string>
#include <vector>

#include "dds/groundtruth.hpp"
#include "dds/image_io.hpp"
#include "dds/network.hpp"
#include "dds/synth.hpp"

namespace dds {

/// One training or evaluation image with every derived target.
struct Sample {
    RgbImage image;
    SegmentationMap seg;
    EdgeGroundTruth thick;
    /// Thin category-agnostic edges.
    BinaryMap binary;
};

/// Throws std::invalid_argument when image and labels differ in size.
Sample make_sample(RgbImage image, SegmentationMap seg, int K);
std::vector<Sample> make_dataset(const std::vector<Scene>& scenes, int K);

/// Reads manifest.csv (index,path_image,path_labels) from `dir`. Throws
/// IoError on missing or malformed files.
std::vector<Sample> load_dataset(const std::string& dir, int K);

/// (1,3,H,W) with channel values v/255 - 0.5.
Tensor image_tensor(const RgbImage& image);

/// Per-class edge probabilities at input resolution: sigmoid of the fused map,
/// of Side-5 for Basic, or the softmax probabilities of classes 1..K.
std::vector<ProbMap> predict(const ModelGraph& model, const RgbImage& image);

}  // namespace dds
