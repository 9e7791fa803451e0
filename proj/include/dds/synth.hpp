#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dds/groundtruth.hpp"
#include "dds/image_io.hpp"

namespace dds {

/// Largest class count with a distinct palette colour.
inline constexpr int kMaxSynthClasses = 16;

enum class ShapeKind { Disk, Rectangle, Triangle };

struct SceneSpec {
    int height = 64;
    int width = 64;
    int classes = 3;
    int min_shapes = 2;
    int max_shapes = 4;
    double noise_sigma = 8.0;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument; the message names the bad field.
    void validate() const;
};

struct Scene {
    RgbImage image;
    SegmentationMap seg;
};

/// Background is palette[0]; class k uses palette[k].
const std::array<std::array<std::uint8_t, 3>, kMaxSynthClasses + 1>& synth_palette();

/// Scene `index` draws from an rng seeded with spec.seed + index, so any
/// subset can be generated independently.
Scene generate_scene(const SceneSpec& spec, std::size_t index);
std::vector<Scene> generate(const SceneSpec& spec, std::size_t n);

/// Discrete disk: integer pixels with (y-cy)^2 + (x-cx)^2 <= r^2.
bool in_disk(int y, int x, int cy, int cx, int r);

/// Writes image_NNNN.ppm, labels_NNNN.pgm (16-bit) and edges_NNNN.pgm (thin
/// union) per scene, plus manifest.csv with header index,path_image,path_labels.
/// Paths in the manifest are relative to `dir`. Creates `dir` if needed.
void write_dataset(const std::string& dir, const std::vector<Scene>& scenes, int K);

}  // namespace dds
