#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "dds/autodiff.hpp"
#include "dds/tensor.hpp"

namespace dds::ops {

/// Grouped, strided, dilated 2-D convolution with zero padding.
/// Weights are (out_channels, in_channels / groups, kh, kw).
Var conv2d(Var input, Var weights, std::optional<Var> bias,
           const ConvSpec& spec);

/// Elementwise max(0, x); the subgradient at 0 is 0.
Var relu(Var x);
Var sigmoid(Var x);
Var add(Var a, Var b);
Var scale(Var x, Real s);
/// Sum of all elements as a (1,1,1,1) tensor.
Var sum(Var x);

Var concat_channels(std::span<const Var> parts);
Var slice_channels(Var x, int begin, int count);

/// Fixed (untrained) transposed convolution with the bilinear kernel of
/// size 2f - f%2 and stride f, applied per channel. The transposed output is
/// cropped by ceil((f-1)/2) on each side so the result is exactly
/// (H*f, W*f).
Var bilinear_upsample(Var x, int factor);

/// 1-D bilinear interpolation taps for `factor`; the 2-D kernel is the outer
/// product of this vector with itself.
std::vector<Real> bilinear_taps(int factor);
int bilinear_crop(int factor);

/// Numerically stable logistic function.
inline Real stable_sigmoid(Real x) {
    if (x >= 0) {
        const Real z = std::exp(-x);
        return 1 / (1 + z);
    }
    const Real z = std::exp(x);
    return z / (1 + z);
}

/// log(1 + e^x) without overflow.
inline Real softplus(Real x) {
    return std::max(x, Real{0}) + std::log1p(std::exp(-std::abs(x)));
}

// Tape-free forward kernels, shared with tests that need an independent
// reference path.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights,
                      const Tensor* bias, const ConvSpec& spec);
Tensor upsample_forward(const Tensor& input, int factor);

}  // namespace dds::ops
