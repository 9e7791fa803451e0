#include "dds/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dds/ops.hpp"

namespace dds {

namespace {

struct VariantName {
    Variant kind;
    const char* name;
};

constexpr VariantName kVariantNames[] = {
    {Variant::Softmax, "Softmax"},       {Variant::Basic, "Basic"},
    {Variant::DSN, "DSN"},               {Variant::CASENet, "CASENet"},
    {Variant::CASENetS4, "CASENetS4"},   {Variant::DDSNoConvt, "DDSNoConvt"},
    {Variant::DDSNoDeSup, "DDSNoDeSup"}, {Variant::DDS, "DDS"},
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::string to_string(Variant v) {
    for (const auto& e : kVariantNames) {
        if (e.kind == v) return e.name;
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    const std::string key = lower(name);
    for (const auto& e : kVariantNames) {
        if (lower(e.name) == key) return e.kind;
    }
    throw std::invalid_argument("unknown variant '" + name + "'");
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v = {
        Variant::Softmax,   Variant::Basic,      Variant::DSN,        Variant::CASENet,
        Variant::CASENetS4, Variant::DDSNoConvt, Variant::DDSNoDeSup, Variant::DDS};
    return v;
}

bool VariantId::has_converters() const {
    return kind == Variant::DDS || kind == Variant::DDSNoDeSup;
}

void VariantId::validate() const {
    if (converter_units < 1 || converter_units > 3) {
        throw std::invalid_argument("converter_units must be 1, 2 or 3, got " +
                                    std::to_string(converter_units));
    }
    if (!has_converters() && (converter_units != 2 || !converter_residual)) {
        throw std::invalid_argument("variant " + to_string(kind) +
                                    " has no information converters; converter "
                                    "options are not allowed");
    }
}

std::string VariantId::label() const {
    std::string s = to_string(kind);
    if (has_converters() && converter_units != 2) {
        s += "/units=" + std::to_string(converter_units);
    }
    if (has_converters() && !converter_residual) s += "/no-residual";
    return s;
}

void BackboneConfig::validate() const {
    for (int m = 0; m < 5; ++m) {
        if (stage_channels[m] <= 0) {
            throw std::invalid_argument("stage " + std::to_string(m + 1) +
                                        " channel count must be positive");
        }
        if (stage_strides[m] <= 0 || stage_dilations[m] <= 0) {
            throw std::invalid_argument("stage " + std::to_string(m + 1) +
                                        " stride and dilation must be positive");
        }
    }
    if (stage_strides[0] != 1 || stage_strides[4] != 1) {
        throw std::invalid_argument("stages 1 and 5 must run at stride 1");
    }
    if (blocks_per_stage < 0) throw std::invalid_argument("blocks_per_stage must be >= 0");
    if (input_channels <= 0) throw std::invalid_argument("input_channels must be positive");
}

int BackboneConfig::stride_product() const { return side_strides()[4]; }

std::array<int, 5> BackboneConfig::side_strides() const {
    std::array<int, 5> out{};
    int s = 1;
    for (int m = 0; m < 5; ++m) {
        s *= stage_strides[m];
        out[m] = s;
    }
    return out;
}

std::size_t ModelGraph::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.value.size();
    return n;
}

std::size_t ModelGraph::converter_parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params) {
        if (p.name.rfind("converter", 0) == 0) n += p.value.size();
    }
    return n;
}

std::size_t ModelGraph::param_index(const std::string& name) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name == name) return i;
    }
    throw std::out_of_range("no parameter named '" + name + "'");
}

int ModelGraph::fusion_group_size() const {
    if (!fusion) return 0;
    return fusion->spec.in_channels / fusion->spec.groups;
}

std::size_t converter_parameter_count(int channels, int units) {
    const std::size_t c = static_cast<std::size_t>(channels);
    return static_cast<std::size_t>(units) * 2 * (9 * c * c + c);
}

namespace {

class Builder {
   public:
    Builder(ModelGraph& model, std::uint64_t seed) : model_(model), rng_(seed) {}

    enum class Init { He, Zero, Constant };

    ConvLayer conv(const std::string& name, ConvSpec spec, Init init,
                   Real constant = 0) {
        spec.validate();
        ConvLayer layer;
        layer.spec = spec;
        Tensor w(spec.weight_shape());
        if (init == Init::He) {
            const double fan_in = static_cast<double>(w.shape().c) * spec.kernel_h * spec.kernel_w;
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
            for (auto& v : w.data()) v = dist(rng_);
        } else if (init == Init::Constant) {
            for (auto& v : w.data()) v = constant;
        }
        layer.weight = add(name + ".weight", std::move(w));
        layer.bias = add(name + ".bias", Tensor(Shape{1, spec.out_channels, 1, 1}));
        return layer;
    }

    std::size_t add(std::string name, Tensor value) {
        model_.params.push_back({std::move(name), std::move(value)});
        return model_.params.size() - 1;
    }

   private:
    ModelGraph& model_;
    std::mt19937_64 rng_;
};

ConvSpec conv3x3(int in, int out, int stride, int dilation) {
    ConvSpec s;
    s.in_channels = in;
    s.out_channels = out;
    s.kernel_h = s.kernel_w = 3;
    s.stride = stride;
    s.dilation = dilation;
    s.padding = dilation;
    return s;
}

ConvSpec conv1x1(int in, int out, int groups = 1) {
    ConvSpec s;
    s.in_channels = in;
    s.out_channels = out;
    s.groups = groups;
    return s;
}

}  // namespace

ModelGraph build_variant(const VariantId& variant, const BackboneConfig& backbone,
                         int K, std::uint64_t seed) {
    variant.validate();
    backbone.validate();
    if (K < 1) throw std::invalid_argument("class count K must be >= 1");

    ModelGraph model;
    model.variant = variant;
    model.backbone = backbone;
    model.classes = K;
    model.seed = seed;
    Builder b(model, seed);

    int in = backbone.input_channels;
    for (int m = 0; m < 5; ++m) {
        const std::string prefix = "stage" + std::to_string(m + 1);
        const int c = backbone.stage_channels[m];
        const int d = backbone.stage_dilations[m];
        auto& stage = model.stages[m];
        stage.entry = b.conv(prefix + ".entry", conv3x3(in, c, backbone.stage_strides[m], d),
                             Builder::Init::He);
        for (int k = 0; k < backbone.blocks_per_stage; ++k) {
            const std::string bp = prefix + ".block" + std::to_string(k);
            stage.blocks.push_back({b.conv(bp + ".conv1", conv3x3(c, c, 1, d), Builder::Init::He),
                                    b.conv(bp + ".conv2", conv3x3(c, c, 1, d), Builder::Init::He)});
        }
        in = c;
    }

    if (variant.has_converters()) {
        for (int m = 0; m < 5; ++m) {
            const int c = backbone.stage_channels[m];
            InformationConverter conv;
            conv.residual = variant.converter_residual;
            conv.channels = c;
            for (int u = 0; u < variant.converter_units; ++u) {
                const std::string up =
                    "converter" + std::to_string(m + 1) + ".unit" + std::to_string(u);
                conv.units.push_back(
                    {b.conv(up + ".conv1", conv3x3(c, c, 1, 1), Builder::Init::He),
                     b.conv(up + ".conv2", conv3x3(c, c, 1, 1), Builder::Init::He)});
            }
            model.converters[m] = std::move(conv);
        }
    }

    auto head = [&](int m, int out) {
        model.heads[m] = b.conv("head" + std::to_string(m + 1),
                                conv1x1(backbone.stage_channels[m], out), Builder::Init::Zero);
    };
    int group = 0;
    switch (variant.kind) {
        case Variant::Softmax:
            head(4, K + 1);
            break;
        case Variant::Basic:
            head(4, K);
            break;
        case Variant::DSN:
            for (int m = 0; m < 5; ++m) head(m, K);
            group = 5;
            break;
        case Variant::CASENet:
            for (int m = 0; m < 3; ++m) head(m, 1);
            head(4, K);
            group = 4;
            break;
        case Variant::CASENetS4:
        case Variant::DDSNoConvt:
        case Variant::DDSNoDeSup:
        case Variant::DDS:
            for (int m = 0; m < 4; ++m) head(m, 1);
            head(4, K);
            group = 5;
            break;
    }
    if (group > 0) {
        model.fusion = b.conv("fusion", conv1x1(group * K, K, K), Builder::Init::Constant,
                              Real{1} / group);
    }
    return model;
}

BoundModel bind(const ModelGraph& model, Tape& tape, bool requires_grad) {
    BoundModel bound;
    bound.params.reserve(model.params.size());
    for (const auto& p : model.params) {
        ScopeGuard scope(tape, p.name.substr(0, p.name.find('.')));
        bound.params.push_back(tape.leaf(p.value, requires_grad, p.name));
    }
    return bound;
}

namespace {

Var apply(const BoundModel& bound, const ConvLayer& layer, Var x) {
    std::optional<Var> bias;
    if (layer.bias) bias = bound.params[*layer.bias];
    return ops::conv2d(x, bound.params[layer.weight], bias, layer.spec);
}

Var residual_unit(const BoundModel& bound, const ResidualUnit& unit, Var h,
                  bool residual) {
    Var branch = apply(bound, unit.conv2, ops::relu(apply(bound, unit.conv1, h)));
    return residual ? ops::add(branch, h) : branch;
}

}  // namespace

Var converter_forward(const BoundModel& bound, const InformationConverter& conv, Var x) {
    if (x.shape().c != conv.channels) {
        throw ShapeError("converter expects " + std::to_string(conv.channels) +
                         " channels, got " + std::to_string(x.shape().c));
    }
    for (const auto& unit : conv.units) {
        x = residual_unit(bound, unit, ops::relu(x), conv.residual);
    }
    return x;
}

Var shared_concat(std::span<const Var> sides, Var semantic) {
    for (const Var& s : sides) {
        if (s.shape().c != 1) {
            throw ShapeError("shared_concat: side maps must be single-channel, got " +
                             s.shape().str());
        }
    }
    const int K = semantic.shape().c;
    std::vector<Var> parts;
    parts.reserve((sides.size() + 1) * K);
    for (int k = 0; k < K; ++k) {
        parts.insert(parts.end(), sides.begin(), sides.end());
        parts.push_back(K == 1 ? semantic : ops::slice_channels(semantic, k, 1));
    }
    return ops::concat_channels(parts);
}

Var classwise_concat(std::span<const Var> maps) {
    if (maps.empty()) throw ShapeError("classwise_concat: no inputs");
    const int K = maps.front().shape().c;
    for (const Var& m : maps) {
        if (m.shape().c != K) {
            throw ShapeError("classwise_concat: channel mismatch " + m.shape().str());
        }
    }
    std::vector<Var> parts;
    for (int k = 0; k < K; ++k) {
        for (const Var& m : maps) parts.push_back(ops::slice_channels(m, k, 1));
    }
    return ops::concat_channels(parts);
}

SideOutputs forward(const ModelGraph& model, const BoundModel& bound, Var image) {
    const Shape& s = image.shape();
    const int stride = model.backbone.stride_product();
    if (s.c != model.backbone.input_channels) {
        throw ShapeError("image channels: expected " +
                         std::to_string(model.backbone.input_channels) + ", got " +
                         std::to_string(s.c));
    }
    if (s.h % stride != 0) {
        throw ShapeError("image height " + std::to_string(s.h) +
                         " not divisible by stride product " + std::to_string(stride));
    }
    if (s.w % stride != 0) {
        throw ShapeError("image width " + std::to_string(s.w) +
                         " not divisible by stride product " + std::to_string(stride));
    }
    Tape& tape = image.tape();
    SideOutputs out;
    const auto factors = model.backbone.side_strides();

    Var x = image;
    for (int m = 0; m < 5; ++m) {
        ScopeGuard scope(tape, "stage" + std::to_string(m + 1));
        const auto& stage = model.stages[m];
        x = ops::relu(apply(bound, stage.entry, x));
        for (const auto& block : stage.blocks) {
            x = ops::relu(residual_unit(bound, block, x, true));
        }
        out.features[m] = x;
    }

    std::array<std::optional<Var>, 5> side_maps;
    for (int m = 0; m < 5; ++m) {
        if (!model.heads[m]) continue;
        Var f = *out.features[m];
        if (model.converters[m]) {
            ScopeGuard scope(tape, "converter" + std::to_string(m + 1));
            f = converter_forward(bound, *model.converters[m], f);
        }
        ScopeGuard scope(tape, "head" + std::to_string(m + 1));
        side_maps[m] = ops::bilinear_upsample(apply(bound, *model.heads[m], f), factors[m]);
    }
    for (int m = 0; m < 4; ++m) out.sides[m] = side_maps[m];
    out.side5 = side_maps[4];

    if (model.fusion) {
        ScopeGuard scope(tape, "fusion");
        Var stacked;
        if (model.variant.kind == Variant::DSN) {
            std::vector<Var> maps;
            for (const auto& m : side_maps) maps.push_back(*m);
            stacked = classwise_concat(maps);
        } else {
            std::vector<Var> sides;
            for (int m = 0; m < 4; ++m) {
                if (side_maps[m]) sides.push_back(*side_maps[m]);
            }
            stacked = shared_concat(sides, *side_maps[4]);
        }
        out.fused = apply(bound, *model.fusion, stacked);
    }
    return out;
}

SideOutputs forward(const ModelGraph& model, Tape& tape, const Tensor& image) {
    BoundModel bound = bind(model, tape, false);
    return forward(model, bound, tape.constant(image));
}

}  // namespace dds
