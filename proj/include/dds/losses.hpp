#pragma once

#include <array>
#include <optional>
#include <string>

#include "dds/autodiff.hpp"
#include "dds/network.hpp"

namespace dds {

enum class LossMode { Reweighted, Unweighted };

std::string to_string(LossMode m);
/// "reweighted" or "unweighted"; throws std::invalid_argument otherwise.
LossMode parse_loss_mode(const std::string& s);

/// Sigmoid cross-entropy of a single-channel edge activation E against a
/// binary target y, both (N,1,H,W).
///
/// Reweighted: per image, beta = |Y+|/|Y| and
///   L = sum_i beta*(1-y_i)*softplus(E_i) + (1-beta)*y_i*softplus(-E_i).
/// Unweighted: both weights are 1. The result is the mean of the per-image
/// sums. `beta_override` replaces the per-image beta (reweighted mode only).
///
/// Throws ShapeError on shape mismatch and std::invalid_argument when the
/// target is not binary.
Var side_binary_loss(Var E, const Tensor& y, LossMode mode,
                     std::optional<Real> beta_override = std::nullopt);

/// The same cross-entropy summed over K class channels. In reweighted mode a
/// single beta per image comes from the union of the target channels.
Var multilabel_loss(Var A, const Tensor& ybar, LossMode mode,
                    std::optional<Real> beta_override = std::nullopt);

/// Mean per-pixel softmax cross-entropy. `labels` is (N,1,H,W) holding class
/// indices in [0, C) where C is the channel count of A.
Var softmax_loss(Var A, const Tensor& labels);

/// Collapses a multi-label target (N,K,H,W) into softmax labels in [0, K]
/// (0 = no edge). Throws std::invalid_argument when a pixel carries two
/// classes.
Tensor softmax_labels(const Tensor& ybar);

/// Supervision for one batch.
struct Targets {
    /// Thin category-agnostic edges, (N,1,H,W).
    Tensor binary;
    /// Thick per-class boundaries, (N,K,H,W).
    Tensor multilabel;
};

/// Which terms a variant is trained with.
struct LossPlan {
    /// Sides 1-4 with single-channel binary heads.
    std::array<bool, 4> binary_sides{};
    /// DSN: sides 1-4 carry K-channel multilabel heads.
    bool multilabel_sides = false;
    bool side5 = false;
    bool fused = false;
    bool softmax = false;
};

LossPlan loss_plan(Variant v);

struct LossTerms {
    std::array<std::optional<Var>, 4> sides;
    std::optional<Var> side5;
    std::optional<Var> fused;
    Var total;

    /// Scalar values of the individual terms; absent terms are nullopt.
    std::array<std::optional<Real>, 6> values() const;
};

/// Sums the variant's terms with unit weights. Throws std::invalid_argument
/// when a side output required by the plan is missing.
LossTerms total_loss(Variant variant, const SideOutputs& out, const Targets& targets,
                     LossMode mode);

}  // namespace dds
