#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dds {

/// Row-major 2-D array.
template <typename T>
struct Grid {
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int h, int w, T fill = T{}) : height(h), width(w) {
        if (h <= 0 || w <= 0) {
            throw std::invalid_argument("grid dims must be positive, got " +
                                        std::to_string(h) + "x" + std::to_string(w));
        }
        data.assign(static_cast<std::size_t>(h) * w, fill);
    }

    T& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    const T& at(int y, int x) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    bool inside(int y, int x) const {
        return y >= 0 && y < height && x >= 0 && x < width;
    }
    std::size_t size() const { return data.size(); }
    bool same_dims(const auto& other) const {
        return height == other.height && width == other.width;
    }
    bool operator==(const Grid&) const = default;
};

using BinaryMap = Grid<std::uint8_t>;
using ProbMap = Grid<double>;
using LabelGrid = Grid<int>;

inline std::size_t count_on(const BinaryMap& m) {
    std::size_t n = 0;
    for (auto v : m.data) n += v != 0;
    return n;
}

}  // namespace dds
