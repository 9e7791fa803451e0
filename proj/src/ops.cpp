#include "dds/ops.hpp"

#include <Eigen/Core>
#include <cstring>

namespace dds::ops {

namespace {

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void require_same_tape(Var a, Var b) {
    if (&a.tape() != &b.tape()) throw std::logic_error("vars live on different tapes");
}

bool is_pointwise(const ConvSpec& s) {
    return s.kernel_h == 1 && s.kernel_w == 1 && s.stride == 1 && s.padding == 0;
}

// Unfolds the channels [c0, c0 + cg) of sample n into a
// (cg*kh*kw) x (oh*ow) row-major matrix.
void im2col(const Tensor& x, int n, int c0, int cg, const ConvSpec& s, int oh,
            int ow, Real* col) {
    const int H = x.shape().h;
    const int W = x.shape().w;
    const std::size_t plane = static_cast<std::size_t>(oh) * ow;
    std::size_t row = 0;
    for (int c = 0; c < cg; ++c) {
        const Real* src = x.plane(n, c0 + c);
        for (int ki = 0; ki < s.kernel_h; ++ki) {
            for (int kj = 0; kj < s.kernel_w; ++kj, ++row) {
                Real* dst = col + row * plane;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * s.stride - s.padding + ki * s.dilation;
                    Real* drow = dst + static_cast<std::size_t>(oy) * ow;
                    if (iy < 0 || iy >= H) {
                        std::fill(drow, drow + ow, Real{0});
                        continue;
                    }
                    const Real* srow = src + static_cast<std::size_t>(iy) * W;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * s.stride - s.padding + kj * s.dilation;
                        drow[ox] = (ix >= 0 && ix < W) ? srow[ix] : Real{0};
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatters the column matrix back into channel planes.
void col2im(const Real* col, int n, int c0, int cg, const ConvSpec& s, int oh,
            int ow, Tensor& gx) {
    const int H = gx.shape().h;
    const int W = gx.shape().w;
    const std::size_t plane = static_cast<std::size_t>(oh) * ow;
    std::size_t row = 0;
    for (int c = 0; c < cg; ++c) {
        Real* dst = gx.plane(n, c0 + c);
        for (int ki = 0; ki < s.kernel_h; ++ki) {
            for (int kj = 0; kj < s.kernel_w; ++kj, ++row) {
                const Real* src = col + row * plane;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * s.stride - s.padding + ki * s.dilation;
                    if (iy < 0 || iy >= H) continue;
                    const Real* srow = src + static_cast<std::size_t>(oy) * ow;
                    Real* drow = dst + static_cast<std::size_t>(iy) * W;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * s.stride - s.padding + kj * s.dilation;
                        if (ix >= 0 && ix < W) drow[ix] += srow[ox];
                    }
                }
            }
        }
    }
}

void check_conv_operands(const Shape& x, const Shape& w, const Tensor* bias,
                         const ConvSpec& spec) {
    spec.validate();
    const Shape ws = spec.weight_shape();
    if (w.n != ws.n) {
        throw ShapeError("conv weight dim 0 (out_channels): expected " +
                         std::to_string(ws.n) + ", got " + std::to_string(w.n));
    }
    if (w.c != ws.c) {
        throw ShapeError("conv weight dim 1 (in_channels/groups): expected " +
                         std::to_string(ws.c) + ", got " + std::to_string(w.c));
    }
    if (w.h != ws.h || w.w != ws.w) {
        throw ShapeError("conv weight kernel dims: expected " +
                         std::to_string(ws.h) + "x" + std::to_string(ws.w) +
                         ", got " + std::to_string(w.h) + "x" + std::to_string(w.w));
    }
    if (bias && bias->size() != static_cast<std::size_t>(spec.out_channels)) {
        throw ShapeError("conv bias length: expected " +
                         std::to_string(spec.out_channels) + ", got " +
                         std::to_string(bias->size()));
    }
    (void)spec.output_shape(x);
}

void conv_backward(const Tensor& x, const Tensor& w, const ConvSpec& s,
                   const Tensor& gy, Tensor* gx, Tensor* gw, Tensor* gb) {
    const Shape& xs = x.shape();
    const int oh = gy.shape().h;
    const int ow = gy.shape().w;
    const int cin_g = s.in_channels / s.groups;
    const int cout_g = s.out_channels / s.groups;
    const int krows = cin_g * s.kernel_h * s.kernel_w;
    const std::size_t plane = static_cast<std::size_t>(oh) * ow;
    const bool pointwise = is_pointwise(s);
    std::vector<Real> col(pointwise ? 0 : static_cast<std::size_t>(krows) * plane);
    std::vector<Real> gcol(pointwise ? 0 : static_cast<std::size_t>(krows) * plane);

    if (gb) {
        for (int n = 0; n < xs.n; ++n) {
            for (int c = 0; c < s.out_channels; ++c) {
                const Real* g = gy.plane(n, c);
                Real acc = 0;
                for (std::size_t i = 0; i < plane; ++i) acc += g[i];
                (*gb)[c] += acc;
            }
        }
    }
    for (int n = 0; n < xs.n; ++n) {
        for (int g = 0; g < s.groups; ++g) {
            ConstMatMap gyg(gy.plane(n, g * cout_g), cout_g, plane);
            ConstMatMap wg(w.data().data() + static_cast<std::size_t>(g) * cout_g * krows,
                           cout_g, krows);
            const Real* colp = nullptr;
            if (pointwise) {
                colp = x.plane(n, g * cin_g);
            } else {
                im2col(x, n, g * cin_g, cin_g, s, oh, ow, col.data());
                colp = col.data();
            }
            if (gw) {
                MatMap gwg(gw->data().data() + static_cast<std::size_t>(g) * cout_g * krows,
                           cout_g, krows);
                gwg.noalias() += gyg * ConstMatMap(colp, krows, plane).transpose();
            }
            if (gx) {
                if (pointwise) {
                    MatMap gxg(gx->plane(n, g * cin_g), krows, plane);
                    gxg.noalias() += wg.transpose() * gyg;
                } else {
                    MatMap gc(gcol.data(), krows, plane);
                    gc.noalias() = wg.transpose() * gyg;
                    col2im(gcol.data(), n, g * cin_g, cin_g, s, oh, ow, *gx);
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias,
                      const ConvSpec& s) {
    check_conv_operands(x.shape(), w.shape(), bias, s);
    const Shape os = s.output_shape(x.shape());
    Tensor y(os);
    const int cin_g = s.in_channels / s.groups;
    const int cout_g = s.out_channels / s.groups;
    const int krows = cin_g * s.kernel_h * s.kernel_w;
    const std::size_t plane = os.plane();
    const bool pointwise = is_pointwise(s);
    std::vector<Real> col(pointwise ? 0 : static_cast<std::size_t>(krows) * plane);
    for (int n = 0; n < os.n; ++n) {
        for (int g = 0; g < s.groups; ++g) {
            const Real* colp = nullptr;
            if (pointwise) {
                colp = x.plane(n, g * cin_g);
            } else {
                im2col(x, n, g * cin_g, cin_g, s, os.h, os.w, col.data());
                colp = col.data();
            }
            ConstMatMap wg(w.data().data() + static_cast<std::size_t>(g) * cout_g * krows,
                           cout_g, krows);
            MatMap yg(y.plane(n, g * cout_g), cout_g, plane);
            yg.noalias() = wg * ConstMatMap(colp, krows, plane);
            if (bias) {
                for (int c = 0; c < cout_g; ++c) {
                    yg.row(c).array() += (*bias)[g * cout_g + c];
                }
            }
        }
    }
    return y;
}

Var conv2d(Var input, Var weights, std::optional<Var> bias, const ConvSpec& spec) {
    require_same_tape(input, weights);
    if (bias) require_same_tape(input, *bias);
    Tape& tape = input.tape();
    const Tensor* bt = bias ? &bias->value() : nullptr;
    Tensor y = conv2d_forward(input.value(), weights.value(), bt, spec);
    std::vector<NodeId> ins{input.id(), weights.id()};
    if (bias) ins.push_back(bias->id());
    const NodeId xi = input.id();
    const NodeId wi = weights.id();
    const std::optional<NodeId> bi =
        bias ? std::optional<NodeId>(bias->id()) : std::nullopt;
    return tape.record(
        std::move(y), std::move(ins),
        [xi, wi, bi, spec](Tape& t, const Tensor& gy) {
            Tensor* gx = t.requires_grad(xi) ? &t.grad_buffer(xi) : nullptr;
            Tensor* gw = t.requires_grad(wi) ? &t.grad_buffer(wi) : nullptr;
            Tensor* gb = (bi && t.requires_grad(*bi)) ? &t.grad_buffer(*bi) : nullptr;
            conv_backward(t.value(xi), t.value(wi), spec, gy, gx, gw, gb);
        },
        "conv2d");
}

Var relu(Var x) {
    const Tensor& xv = x.value();
    Tensor y(xv.shape());
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const bool on = xv[i] > 0;
        y[i] = on ? xv[i] : Real{0};
        h = (h ^ static_cast<std::uint64_t>(on)) * 1099511628211ULL;
    }
    x.tape().mix_kink_signature(h);
    const NodeId xi = x.id();
    return x.tape().record(
        std::move(y), {xi},
        [xi](Tape& t, const Tensor& gy) {
            const Tensor& xv = t.value(xi);
            Tensor& gx = t.grad_buffer(xi);
            for (std::size_t i = 0; i < gy.size(); ++i) {
                if (xv[i] > 0) gx[i] += gy[i];
            }
        },
        "relu");
}

Var sigmoid(Var x) {
    const Tensor& xv = x.value();
    Tensor y(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) y[i] = stable_sigmoid(xv[i]);
    const NodeId xi = x.id();
    Tape& tape = x.tape();
    const NodeId yi = tape.size();
    return tape.record(
        std::move(y), {xi},
        [xi, yi](Tape& t, const Tensor& gy) {
            const Tensor& yv = t.value(yi);
            Tensor& gx = t.grad_buffer(xi);
            for (std::size_t i = 0; i < gy.size(); ++i) {
                gx[i] += gy[i] * yv[i] * (1 - yv[i]);
            }
        },
        "sigmoid");
}

Var add(Var a, Var b) {
    require_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (!(av.shape() == bv.shape())) {
        throw ShapeError("add: shape " + av.shape().str() + " vs " + bv.shape().str());
    }
    Tensor y = av;
    y += bv;
    const NodeId ai = a.id();
    const NodeId bi = b.id();
    return a.tape().record(
        std::move(y), {ai, bi},
        [ai, bi](Tape& t, const Tensor& gy) {
            if (t.requires_grad(ai)) t.grad_buffer(ai) += gy;
            if (t.requires_grad(bi)) t.grad_buffer(bi) += gy;
        },
        "add");
}

Var scale(Var x, Real s) {
    Tensor y = x.value();
    y *= s;
    const NodeId xi = x.id();
    return x.tape().record(
        std::move(y), {xi},
        [xi, s](Tape& t, const Tensor& gy) {
            Tensor& gx = t.grad_buffer(xi);
            for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += s * gy[i];
        },
        "scale");
}

Var sum(Var x) {
    const NodeId xi = x.id();
    return x.tape().record(
        Tensor::scalar(x.value().sum()), {xi},
        [xi](Tape& t, const Tensor& gy) {
            Tensor& gx = t.grad_buffer(xi);
            const Real g = gy[0];
            for (auto& v : gx.data()) v += g;
        },
        "sum");
}

Var concat_channels(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_channels: no inputs");
    const Shape first = parts.front().shape();
    int channels = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        require_same_tape(parts.front(), parts[i]);
        const Shape& s = parts[i].shape();
        if (s.n != first.n) {
            throw ShapeError("concat_channels: batch mismatch at input " +
                             std::to_string(i) + " (" + s.str() + " vs " +
                             first.str() + ")");
        }
        if (s.h != first.h || s.w != first.w) {
            throw ShapeError("concat_channels: spatial mismatch at input " +
                             std::to_string(i) + " (" + s.str() + " vs " +
                             first.str() + ")");
        }
        channels += s.c;
    }
    Tensor y(Shape{first.n, channels, first.h, first.w});
    const std::size_t plane = first.plane();
    std::vector<NodeId> ids;
    std::vector<int> offsets;
    int offset = 0;
    for (const Var& p : parts) {
        const Tensor& pv = p.value();
        for (int n = 0; n < first.n; ++n) {
            std::memcpy(y.plane(n, offset), pv.plane(n, 0),
                        sizeof(Real) * plane * pv.shape().c);
        }
        ids.push_back(p.id());
        offsets.push_back(offset);
        offset += pv.shape().c;
    }
    return parts.front().tape().record(
        std::move(y), ids,
        [ids, offsets, plane](Tape& t, const Tensor& gy) {
            for (std::size_t k = 0; k < ids.size(); ++k) {
                if (!t.requires_grad(ids[k])) continue;
                Tensor& gx = t.grad_buffer(ids[k]);
                const int c = gx.shape().c;
                for (int n = 0; n < gx.shape().n; ++n) {
                    const Real* src = gy.plane(n, offsets[k]);
                    Real* dst = gx.plane(n, 0);
                    for (std::size_t i = 0; i < plane * c; ++i) dst[i] += src[i];
                }
            }
        },
        "concat");
}

Var slice_channels(Var x, int begin, int count) {
    const Shape& s = x.shape();
    if (begin < 0 || count <= 0 || begin + count > s.c) {
        throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside channel dim " +
                         std::to_string(s.c));
    }
    Tensor y(Shape{s.n, count, s.h, s.w});
    const std::size_t plane = s.plane();
    for (int n = 0; n < s.n; ++n) {
        std::memcpy(y.plane(n, 0), x.value().plane(n, begin),
                    sizeof(Real) * plane * count);
    }
    const NodeId xi = x.id();
    return x.tape().record(
        std::move(y), {xi},
        [xi, begin, count, plane](Tape& t, const Tensor& gy) {
            Tensor& gx = t.grad_buffer(xi);
            for (int n = 0; n < gy.shape().n; ++n) {
                const Real* src = gy.plane(n, 0);
                Real* dst = gx.plane(n, begin);
                for (std::size_t i = 0; i < plane * count; ++i) dst[i] += src[i];
            }
        },
        "slice");
}

std::vector<Real> bilinear_taps(int factor) {
    if (factor < 1) throw std::invalid_argument("upsample factor must be >= 1");
    const int size = 2 * factor - factor % 2;
    const Real center = factor % 2 == 1 ? factor - 1 : factor - Real{0.5};
    std::vector<Real> taps(size);
    for (int i = 0; i < size; ++i) {
        taps[i] = 1 - std::abs(i - center) / factor;
    }
    return taps;
}

int bilinear_crop(int factor) { return factor / 2; }

namespace {

// Transposed convolution of each plane with the separable bilinear kernel:
// out[o] += in[i] * taps[o + crop - i*f].
void upsample_plane(const Real* in, int h, int w, int f, const std::vector<Real>& taps,
                    Real* out) {
    const int crop = bilinear_crop(f);
    const int k = static_cast<int>(taps.size());
    const int oh = h * f;
    const int ow = w * f;
    for (int iy = 0; iy < h; ++iy) {
        for (int ix = 0; ix < w; ++ix) {
            const Real v = in[iy * w + ix];
            if (v == 0) continue;
            for (int a = 0; a < k; ++a) {
                const int oy = iy * f + a - crop;
                if (oy < 0 || oy >= oh) continue;
                const Real va = v * taps[a];
                Real* orow = out + static_cast<std::size_t>(oy) * ow;
                for (int b = 0; b < k; ++b) {
                    const int ox = ix * f + b - crop;
                    if (ox < 0 || ox >= ow) continue;
                    orow[ox] += va * taps[b];
                }
            }
        }
    }
}

void upsample_plane_adjoint(const Real* gout, int h, int w, int f,
                            const std::vector<Real>& taps, Real* gin) {
    const int crop = bilinear_crop(f);
    const int k = static_cast<int>(taps.size());
    const int oh = h * f;
    const int ow = w * f;
    for (int iy = 0; iy < h; ++iy) {
        for (int ix = 0; ix < w; ++ix) {
            Real acc = 0;
            for (int a = 0; a < k; ++a) {
                const int oy = iy * f + a - crop;
                if (oy < 0 || oy >= oh) continue;
                const Real* grow = gout + static_cast<std::size_t>(oy) * ow;
                Real racc = 0;
                for (int b = 0; b < k; ++b) {
                    const int ox = ix * f + b - crop;
                    if (ox < 0 || ox >= ow) continue;
                    racc += grow[ox] * taps[b];
                }
                acc += taps[a] * racc;
            }
            gin[iy * w + ix] += acc;
        }
    }
}

}  // namespace

Tensor upsample_forward(const Tensor& x, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample factor must be >= 1");
    if (factor == 1) return x;
    const Shape& s = x.shape();
    Tensor y(Shape{s.n, s.c, s.h * factor, s.w * factor});
    const auto taps = bilinear_taps(factor);
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            upsample_plane(x.plane(n, c), s.h, s.w, factor, taps, y.plane(n, c));
        }
    }
    return y;
}

Var bilinear_upsample(Var x, int factor) {
    Tensor y = upsample_forward(x.value(), factor);
    const NodeId xi = x.id();
    return x.tape().record(
        std::move(y), {xi},
        [xi, factor](Tape& t, const Tensor& gy) {
            Tensor& gx = t.grad_buffer(xi);
            if (factor == 1) {
                gx += gy;
                return;
            }
            const auto taps = bilinear_taps(factor);
            const Shape& s = gx.shape();
            for (int n = 0; n < s.n; ++n) {
                for (int c = 0; c < s.c; ++c) {
                    upsample_plane_adjoint(gy.plane(n, c), s.h, s.w, factor, taps,
                                           gx.plane(n, c));
                }
            }
        },
        "upsample");
}

}  // namespace dds::ops
