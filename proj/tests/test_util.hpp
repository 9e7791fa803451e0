#pragma once

#include <random>

#include "dds/grid.hpp"
#include "dds/tensor.hpp"

namespace dds::fixtures {

inline Tensor random_tensor(Shape s, std::uint64_t seed, Real lo = -1, Real hi = 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Real> d(lo, hi);
    Tensor t(s);
    for (auto& v : t.data()) v = d(rng);
    return t;
}

inline Tensor random_binary(Shape s, std::uint64_t seed, double p = 0.3) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution d(p);
    Tensor t(s);
    for (auto& v : t.data()) v = d(rng) ? 1 : 0;
    return t;
}

inline BinaryMap random_map(int h, int w, std::mt19937_64& rng, double p) {
    std::bernoulli_distribution d(p);
    BinaryMap m(h, w, 0);
    for (auto& v : m.data) v = d(rng);
    return m;
}

// Union of random filled disks and rectangles.
inline BinaryMap random_blobs(int h, int w, std::mt19937_64& rng) {
    BinaryMap m(h, w, 0);
    std::uniform_int_distribution<int> count(1, 5), ry(0, h - 1), rx(0, w - 1), size(1, 8);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        const int cy = ry(rng), cx = rx(rng), r = size(rng);
        const bool disk = rng() & 1;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int dy = y - cy, dx = x - cx;
                if (disk ? dy * dy + dx * dx <= r * r : std::abs(dy) <= r && std::abs(dx) <= r / 2 + 1) {
                    m.at(y, x) = 1;
                }
            }
        }
    }
    return m;
}

}  // namespace dds::fixtures
