#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dds/autodiff.hpp"
#include "dds/tensor.hpp"

namespace dds {

/// Network variants: DDS, CASENet and the ablation family.
enum class Variant {
    Softmax,
    Basic,
    DSN,
    CASENet,
    CASENetS4,
    DDSNoConvt,
    DDSNoDeSup,
    DDS,
};

std::string to_string(Variant v);
/// Accepts the names printed by to_string (case-insensitive). Throws
/// std::invalid_argument otherwise.
Variant parse_variant(const std::string& name);
const std::vector<Variant>& all_variants();

struct VariantId {
    Variant kind = Variant::DDS;
    /// Residual units per information converter.
    int converter_units = 2;
    /// false drops the skip connection inside each unit.
    bool converter_residual = true;

    bool has_converters() const;
    /// Throws std::invalid_argument for converter options on variants that
    /// have no converters, or a unit count outside [1, 3].
    void validate() const;
    std::string label() const;
};

struct BackboneConfig {
    std::array<int, 5> stage_channels{16, 32, 64, 128, 256};
    /// Stages 1 and 5 run at stride 1; stage 5 is dilated instead.
    std::array<int, 5> stage_strides{1, 2, 2, 2, 1};
    std::array<int, 5> stage_dilations{1, 1, 1, 1, 2};
    int blocks_per_stage = 1;
    int input_channels = 3;

    void validate() const;
    int stride_product() const;
    /// Total stride at the output of each stage.
    std::array<int, 5> side_strides() const;
};

struct ConvLayer {
    ConvSpec spec;
    std::size_t weight = 0;
    std::optional<std::size_t> bias;
};

/// h = relu(x); out = conv2(relu(conv1(h))) + h (skip omitted when
/// `residual` is false).
struct ResidualUnit {
    ConvLayer conv1;
    ConvLayer conv2;
};

struct InformationConverter {
    std::vector<ResidualUnit> units;
    bool residual = true;
    int channels = 0;
};

struct BackboneStage {
    ConvLayer entry;
    /// Plain residual blocks: y = relu(x + conv2(relu(conv1(x)))).
    std::vector<ResidualUnit> blocks;
};

struct Parameter {
    std::string name;
    Tensor value;
};

/// A built network: parameter storage plus the wiring that indexes into it.
struct ModelGraph {
    VariantId variant;
    BackboneConfig backbone;
    int classes = 1;
    std::uint64_t seed = 0;

    std::vector<Parameter> params;
    std::array<BackboneStage, 5> stages;
    std::array<std::optional<InformationConverter>, 5> converters;
    /// Side heads; heads[4] is the Side-5 semantic head.
    std::array<std::optional<ConvLayer>, 5> heads;
    std::optional<ConvLayer> fusion;

    std::size_t parameter_count() const;
    std::size_t converter_parameter_count() const;
    /// Index into params by name; throws std::out_of_range when absent.
    std::size_t param_index(const std::string& name) const;
    /// Number of maps entering each fusion group.
    int fusion_group_size() const;
};

/// Closed-form parameter count of one converter of the given width.
std::size_t converter_parameter_count(int channels, int units);

/// Builds a variant with deterministic He fan-in initialization drawn from
/// `seed`. Side heads start at zero and fusion weights at 1/group_size, so
/// every initial activation entering a loss is exactly 0.
ModelGraph build_variant(const VariantId& variant, const BackboneConfig& backbone,
                         int K, std::uint64_t seed);

/// Parameters registered as leaves on a tape, indexed like ModelGraph::params.
struct BoundModel {
    std::vector<Var> params;
};

BoundModel bind(const ModelGraph& model, Tape& tape, bool requires_grad = true);

/// All maps are pre-sigmoid activations at input resolution.
struct SideOutputs {
    /// Sides 1-4: single-channel edge maps, or K-channel maps for DSN.
    std::array<std::optional<Var>, 4> sides;
    /// Side-5 semantic map A5 (K channels; K+1 for Softmax).
    std::optional<Var> side5;
    std::optional<Var> fused;
    /// Backbone stage outputs before any converter.
    std::array<std::optional<Var>, 5> features;
};

/// Throws ShapeError when the image size is not divisible by the backbone
/// stride product or the channel count differs from the backbone input.
SideOutputs forward(const ModelGraph& model, const BoundModel& bound, Var image);

/// Convenience: binds on `tape` without gradients and runs forward.
SideOutputs forward(const ModelGraph& model, Tape& tape, const Tensor& image);

/// Runs the converter's residual units in order. Throws ShapeError on a
/// channel mismatch.
Var converter_forward(const BoundModel& bound, const InformationConverter& conv, Var x);

/// Stacks single-channel side maps with every channel of `semantic`:
/// group k is (sides..., semantic_k), giving (sides+1)*K channels.
Var shared_concat(std::span<const Var> sides, Var semantic);

/// Per-class stacking of K-channel maps: group k is (maps[0]_k, maps[1]_k, ...).
Var classwise_concat(std::span<const Var> maps);

}  // namespace dds
