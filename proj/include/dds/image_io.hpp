#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dds/grid.hpp"

namespace dds {

/// Raised for unreadable, unwritable or malformed files.
class IoError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Interleaved 8-bit RGB.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> rgb;

    RgbImage() = default;
    RgbImage(int h, int w) : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3) {}
    std::uint8_t& at(int y, int x, int c) {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    bool operator==(const RgbImage&) const = default;
};

/// Binary P6, maxval 255.
void write_ppm(const std::string& path, const RgbImage& image);
RgbImage read_ppm(const std::string& path);

/// Binary P5. Maxval above 255 switches to 16-bit big-endian samples.
void write_pgm(const std::string& path, const Grid<int>& values, int maxval);
Grid<int> read_pgm(const std::string& path, int* maxval = nullptr);

/// 16-bit label map (maxval 65535).
void write_label_pgm(const std::string& path, const LabelGrid& labels);
LabelGrid read_label_pgm(const std::string& path);

/// 8-bit edge map with 255 = edge. Any nonzero sample reads back as an edge.
void write_edge_pgm(const std::string& path, const BinaryMap& edges);
BinaryMap read_edge_pgm(const std::string& path);

/// 8-bit probability map, p mapped to round(255 p).
void write_prob_pgm(const std::string& path, const ProbMap& prob);
ProbMap read_prob_pgm(const std::string& path);

}  // namespace dds
