#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dds {

using Real = double;

/// Thrown when tensor shapes are incompatible. The message names the
/// offending dimension.
class ShapeError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Batch-channels-height-width shape. Every entry is strictly positive.
struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t size() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// Dense NCHW array of Real values. Plain value type; tape participation is
/// handled by dds::Var.
class Tensor {
   public:
    Tensor() = default;
    explicit Tensor(Shape shape, Real fill = 0);
    Tensor(Shape shape, std::vector<Real> data);

    static Tensor zeros(Shape s) { return Tensor(s, 0); }
    static Tensor ones(Shape s) { return Tensor(s, 1); }
    static Tensor scalar(Real v) { return Tensor(Shape{1, 1, 1, 1}, v); }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<Real> data() { return data_; }
    std::span<const Real> data() const { return data_; }
    std::vector<Real>& vec() { return data_; }
    const std::vector<Real>& vec() const { return data_; }

    Real& operator[](std::size_t i) { return data_[i]; }
    Real operator[](std::size_t i) const { return data_[i]; }

    std::size_t index(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) *
                   shape_.w +
               w;
    }
    Real& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
    Real at(int n, int c, int h, int w) const {
        return data_[index(n, c, h, w)];
    }

    /// Pointer to the start of plane (n, c).
    Real* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
    const Real* plane(int n, int c) const {
        return data_.data() + index(n, c, 0, 0);
    }

    Real item() const;
    Real sum() const;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator*=(Real s);

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

   private:
    Shape shape_{};
    std::vector<Real> data_;
};

void validate_shape(const Shape& s);

/// Convolution hyperparameters. Zero padding only.
struct ConvSpec {
    int in_channels = 1;
    int out_channels = 1;
    int kernel_h = 1;
    int kernel_w = 1;
    int stride = 1;
    int dilation = 1;
    int padding = 0;
    int groups = 1;

    /// Throws ShapeError when an invariant is violated.
    void validate() const;
    int out_size(int in, int kernel) const {
        return (in + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1;
    }
    Shape weight_shape() const {
        return {out_channels, in_channels / groups, kernel_h, kernel_w};
    }
    Shape output_shape(const Shape& input) const;
};

}  // namespace dds
