#include "dds/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dds/ops.hpp"

namespace dds {

std::string to_string(LossMode m) {
    return m == LossMode::Reweighted ? "reweighted" : "unweighted";
}

LossMode parse_loss_mode(const std::string& s) {
    if (s == "reweighted") return LossMode::Reweighted;
    if (s == "unweighted") return LossMode::Unweighted;
    throw std::invalid_argument("unknown loss mode '" + s + "' (reweighted|unweighted)");
}

namespace {

void check_binary(const Tensor& y, const char* what) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) {
            throw std::invalid_argument(std::string(what) + " target value " +
                                        std::to_string(y[i]) + " at index " +
                                        std::to_string(i) + " is not 0 or 1");
        }
    }
}

// Weighted sigmoid cross-entropy shared by the binary and multilabel forms.
Var weighted_bce(Var x, const Tensor& y, LossMode mode, std::optional<Real> beta_override,
                 const char* what) {
    const Shape s = x.shape();
    if (!(s == y.shape())) {
        throw ShapeError(std::string(what) + ": activation " + s.str() +
                         " vs target " + y.shape().str());
    }
    check_binary(y, what);
    if (beta_override && !(*beta_override >= 0 && *beta_override <= 1)) {
        throw std::invalid_argument("beta override must lie in [0, 1]");
    }

    // Per-image weights for the non-edge and edge terms.
    std::vector<Real> w_neg(s.n, 1), w_pos(s.n, 1);
    if (mode == LossMode::Reweighted) {
        const std::size_t plane = s.plane();
        for (int n = 0; n < s.n; ++n) {
            Real beta;
            if (beta_override) {
                beta = *beta_override;
            } else {
                std::size_t positives = 0;
                for (std::size_t p = 0; p < plane; ++p) {
                    bool on = false;
                    for (int c = 0; c < s.c && !on; ++c) on = y.plane(n, c)[p] != 0;
                    positives += on;
                }
                beta = static_cast<Real>(positives) / static_cast<Real>(plane);
            }
            w_neg[n] = beta;
            w_pos[n] = 1 - beta;
        }
    }

    const Tensor& xv = x.value();
    const std::size_t per_image = static_cast<std::size_t>(s.c) * s.plane();
    Real total = 0;
    for (int n = 0; n < s.n; ++n) {
        Real acc = 0;
        for (std::size_t i = n * per_image; i < (n + 1) * per_image; ++i) {
            if (y[i] != 0) {
                acc += w_pos[n] * ops::softplus(-xv[i]);
            } else {
                acc += w_neg[n] * ops::softplus(xv[i]);
            }
        }
        total += acc;
    }
    const Real inv_n = Real{1} / s.n;

    Tape& tape = x.tape();
    return tape.record(
        Tensor::scalar(total * inv_n), {x.id()},
        [xi = x.id(), y, w_neg, w_pos, per_image, inv_n](Tape& t, const Tensor& g) {
            const Tensor& xv = t.value(xi);
            Tensor& gx = t.grad_buffer(xi);
            const Real go = g[0] * inv_n;
            for (std::size_t i = 0; i < xv.size(); ++i) {
                const std::size_t n = i / per_image;
                if (y[i] != 0) {
                    gx[i] -= go * w_pos[n] * ops::stable_sigmoid(-xv[i]);
                } else {
                    gx[i] += go * w_neg[n] * ops::stable_sigmoid(xv[i]);
                }
            }
        },
        "bce");
}

}  // namespace

Var side_binary_loss(Var E, const Tensor& y, LossMode mode,
                     std::optional<Real> beta_override) {
    if (E.shape().c != 1) {
        throw ShapeError("side_binary_loss: expected 1 channel, got " +
                         std::to_string(E.shape().c));
    }
    return weighted_bce(E, y, mode, beta_override, "side_binary_loss");
}

Var multilabel_loss(Var A, const Tensor& ybar, LossMode mode,
                    std::optional<Real> beta_override) {
    if (A.shape().c != ybar.shape().c) {
        throw ShapeError("multilabel_loss: activation has " + std::to_string(A.shape().c) +
                         " channels, target has " + std::to_string(ybar.shape().c));
    }
    return weighted_bce(A, ybar, mode, beta_override, "multilabel_loss");
}

Var softmax_loss(Var A, const Tensor& labels) {
    const Shape s = A.shape();
    const Shape ls = labels.shape();
    if (ls.n != s.n || ls.c != 1 || ls.h != s.h || ls.w != s.w) {
        throw ShapeError("softmax_loss: labels " + ls.str() + " do not fit activation " +
                         s.str());
    }
    const std::size_t plane = s.plane();
    std::vector<int> cls(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Real l = labels[i];
        if (l != std::floor(l) || l < 0 || l >= s.c) {
            throw std::invalid_argument("softmax_loss: label " + std::to_string(l) +
                                        " at index " + std::to_string(i) +
                                        " is not a class index in [0, " +
                                        std::to_string(s.c) + ")");
        }
        cls[i] = static_cast<int>(l);
    }

    const Tensor& av = A.value();
    // Softmax probabilities are kept for the backward pass.
    Tensor prob(s);
    Real total = 0;
    for (int n = 0; n < s.n; ++n) {
        for (std::size_t p = 0; p < plane; ++p) {
            Real mx = av.plane(n, 0)[p];
            for (int c = 1; c < s.c; ++c) mx = std::max(mx, av.plane(n, c)[p]);
            Real z = 0;
            for (int c = 0; c < s.c; ++c) z += std::exp(av.plane(n, c)[p] - mx);
            const Real lse = mx + std::log(z);
            for (int c = 0; c < s.c; ++c) {
                prob.plane(n, c)[p] = std::exp(av.plane(n, c)[p] - lse);
            }
            total += lse - av.plane(n, cls[n * plane + p])[p];
        }
    }
    const Real inv = Real{1} / static_cast<Real>(s.n * plane);

    Tape& tape = A.tape();
    return tape.record(
        Tensor::scalar(total * inv), {A.id()},
        [ai = A.id(), prob = std::move(prob), cls = std::move(cls), inv, plane](
            Tape& t, const Tensor& g) {
            Tensor& ga = t.grad_buffer(ai);
            const Shape& s = prob.shape();
            const Real go = g[0] * inv;
            for (int n = 0; n < s.n; ++n) {
                for (int c = 0; c < s.c; ++c) {
                    const Real* pr = prob.plane(n, c);
                    Real* gp = ga.plane(n, c);
                    for (std::size_t p = 0; p < plane; ++p) {
                        const Real onehot = cls[n * plane + p] == c ? 1 : 0;
                        gp[p] += go * (pr[p] - onehot);
                    }
                }
            }
        },
        "softmax_ce");
}

Tensor softmax_labels(const Tensor& ybar) {
    const Shape s = ybar.shape();
    check_binary(ybar, "softmax_labels");
    Tensor out(Shape{s.n, 1, s.h, s.w});
    for (int n = 0; n < s.n; ++n) {
        for (std::size_t p = 0; p < s.plane(); ++p) {
            int label = 0;
            for (int c = 0; c < s.c; ++c) {
                if (ybar.plane(n, c)[p] == 0) continue;
                if (label != 0) {
                    throw std::invalid_argument(
                        "softmax_labels: pixel " + std::to_string(p) + " of image " +
                        std::to_string(n) + " belongs to classes " +
                        std::to_string(label) + " and " + std::to_string(c + 1));
                }
                label = c + 1;
            }
            out.plane(n, 0)[p] = label;
        }
    }
    return out;
}

LossPlan loss_plan(Variant v) {
    LossPlan p;
    switch (v) {
        case Variant::Softmax:
            p.softmax = true;
            break;
        case Variant::Basic:
            p.side5 = true;
            break;
        case Variant::DSN:
            p.multilabel_sides = true;
            p.side5 = true;
            p.fused = true;
            break;
        case Variant::CASENet:
        case Variant::CASENetS4:
        case Variant::DDSNoDeSup:
            p.side5 = true;
            p.fused = true;
            break;
        case Variant::DDSNoConvt:
        case Variant::DDS:
            p.binary_sides = {true, true, true, true};
            p.side5 = true;
            p.fused = true;
            break;
    }
    return p;
}

std::array<std::optional<Real>, 6> LossTerms::values() const {
    std::array<std::optional<Real>, 6> out;
    for (int m = 0; m < 4; ++m) {
        if (sides[m]) out[m] = sides[m]->value()[0];
    }
    if (side5) out[4] = side5->value()[0];
    if (fused) out[5] = fused->value()[0];
    return out;
}

LossTerms total_loss(Variant variant, const SideOutputs& out, const Targets& targets,
                     LossMode mode) {
    const LossPlan plan = loss_plan(variant);
    auto need = [&](const std::optional<Var>& v, const std::string& name) -> Var {
        if (!v) {
            throw std::invalid_argument("variant " + to_string(variant) +
                                        " is missing side output " + name);
        }
        return *v;
    };

    LossTerms terms;
    std::optional<Var> total;
    auto accumulate = [&](Var v) { total = total ? ops::add(*total, v) : v; };

    if (plan.softmax) {
        terms.side5 = softmax_loss(need(out.side5, "side5"), softmax_labels(targets.multilabel));
        accumulate(*terms.side5);
    } else {
        for (int m = 0; m < 4; ++m) {
            const std::string name = "side" + std::to_string(m + 1);
            if (plan.binary_sides[m]) {
                terms.sides[m] = side_binary_loss(need(out.sides[m], name), targets.binary, mode);
            } else if (plan.multilabel_sides) {
                terms.sides[m] =
                    multilabel_loss(need(out.sides[m], name), targets.multilabel, mode);
            }
            if (terms.sides[m]) accumulate(*terms.sides[m]);
        }
        if (plan.side5) {
            terms.side5 = multilabel_loss(need(out.side5, "side5"), targets.multilabel, mode);
            accumulate(*terms.side5);
        }
        if (plan.fused) {
            terms.fused = multilabel_loss(need(out.fused, "fused"), targets.multilabel, mode);
            accumulate(*terms.fused);
        }
    }
    terms.total = *total;
    return terms;
}

}  // namespace dds
