#include "dds/tensor.hpp"

#include <numeric>

namespace dds {

std::string Shape::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
}

void validate_shape(const Shape& s) {
    if (s.n <= 0) throw ShapeError("batch dimension must be positive, got " + s.str());
    if (s.c <= 0) throw ShapeError("channel dimension must be positive, got " + s.str());
    if (s.h <= 0) throw ShapeError("height must be positive, got " + s.str());
    if (s.w <= 0) throw ShapeError("width must be positive, got " + s.str());
}

Tensor::Tensor(Shape shape, Real fill) : shape_(shape) {
    validate_shape(shape_);
    data_.assign(shape_.size(), fill);
}

Tensor::Tensor(Shape shape, std::vector<Real> data)
    : shape_(shape), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != shape_.size()) {
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_.str());
    }
}

Real Tensor::item() const {
    if (data_.size() != 1) {
        throw ShapeError("item() requires a single-element tensor, got " +
                         shape_.str());
    }
    return data_[0];
}

Real Tensor::sum() const {
    return std::accumulate(data_.begin(), data_.end(), Real{0});
}

Tensor& Tensor::operator+=(const Tensor& other) {
    if (!(shape_ == other.shape_)) {
        throw ShapeError("cannot accumulate " + other.shape_.str() + " into " +
                         shape_.str());
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(Real s) {
    for (auto& v : data_) v *= s;
    return *this;
}

void ConvSpec::validate() const {
    if (in_channels <= 0) throw ShapeError("conv in_channels must be positive");
    if (out_channels <= 0) throw ShapeError("conv out_channels must be positive");
    if (kernel_h <= 0 || kernel_w <= 0) throw ShapeError("conv kernel must be positive");
    if (stride <= 0) throw ShapeError("conv stride must be positive");
    if (dilation <= 0) throw ShapeError("conv dilation must be positive");
    if (padding < 0) throw ShapeError("conv padding must be non-negative");
    if (groups <= 0) throw ShapeError("conv groups must be positive");
    if (in_channels % groups != 0) {
        throw ShapeError("conv in_channels " + std::to_string(in_channels) +
                         " not divisible by groups " + std::to_string(groups));
    }
    if (out_channels % groups != 0) {
        throw ShapeError("conv out_channels " + std::to_string(out_channels) +
                         " not divisible by groups " + std::to_string(groups));
    }
}

Shape ConvSpec::output_shape(const Shape& input) const {
    validate();
    if (input.c != in_channels) {
        throw ShapeError("conv input channels: expected " +
                         std::to_string(in_channels) + ", got " +
                         std::to_string(input.c));
    }
    const int oh = out_size(input.h, kernel_h);
    const int ow = out_size(input.w, kernel_w);
    if (input.h + 2 * padding - dilation * (kernel_h - 1) - 1 < 0 || oh < 1) {
        throw ShapeError("conv output height < 1 for input height " +
                         std::to_string(input.h));
    }
    if (input.w + 2 * padding - dilation * (kernel_w - 1) - 1 < 0 || ow < 1) {
        throw ShapeError("conv output width < 1 for input width " +
                         std::to_string(input.w));
    }
    return {input.n, out_channels, oh, ow};
}

}  // namespace dds
