#include "dds/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dds/image_io.hpp"
#include "json.hpp"

namespace dds {

namespace {

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                                (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                                static_cast<unsigned char>(bytes[i + 2]);
        out += kAlphabet[v >> 18 & 63];
        out += kAlphabet[v >> 12 & 63];
        out += kAlphabet[v >> 6 & 63];
        out += kAlphabet[v & 63];
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
        out += kAlphabet[v >> 18 & 63];
        out += kAlphabet[v >> 12 & 63];
        out += "==";
    } else if (rest == 2) {
        const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                                (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += kAlphabet[v >> 18 & 63];
        out += kAlphabet[v >> 12 & 63];
        out += kAlphabet[v >> 6 & 63];
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw std::invalid_argument("base64 length not a multiple of 4");
    std::string out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=' && i + 4 == text.size() && k >= 2) {
                v[k] = 0;
                ++pad;
                continue;
            }
            if (pad > 0) throw std::invalid_argument("base64 padding in the middle");
            v[k] = decode_char(c);
            if (v[k] < 0) throw std::invalid_argument("invalid base64 character");
        }
        const std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out += static_cast<char>(w >> 16 & 255);
        if (pad < 2) out += static_cast<char>(w >> 8 & 255);
        if (pad < 1) out += static_cast<char>(w & 255);
    }
    return out;
}

std::string encode_reals(std::span<const Real> values) {
    static_assert(sizeof(Real) == 8);
    std::string bytes(values.size() * 8, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) {
            bytes[i * 8 + b] = static_cast<char>(bits >> (8 * b) & 0xFF);
        }
    }
    return base64_encode(bytes);
}

std::vector<Real> decode_reals(std::string_view base64) {
    const std::string bytes = base64_decode(base64);
    if (bytes.size() % 8 != 0) throw std::invalid_argument("raw value blob not a multiple of 8 bytes");
    std::vector<Real> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b]))
                    << (8 * b);
        }
        out[i] = std::bit_cast<Real>(bits);
    }
    return out;
}

std::string to_json(const Checkpoint& ckpt) {
    const ModelGraph& m = ckpt.model;
    nlohmann::ordered_json j;
    j["format"] = "dds-checkpoint";
    j["version"] = 1;
    j["variant"] = {{"name", to_string(m.variant.kind)},
                    {"converter_units", m.variant.converter_units},
                    {"converter_residual", m.variant.converter_residual}};
    j["backbone"] = {{"stage_channels", m.backbone.stage_channels},
                     {"stage_strides", m.backbone.stage_strides},
                     {"stage_dilations", m.backbone.stage_dilations},
                     {"blocks_per_stage", m.backbone.blocks_per_stage},
                     {"input_channels", m.backbone.input_channels}};
    j["classes"] = m.classes;
    j["seed"] = m.seed;
    j["iteration"] = ckpt.iteration;
    auto params = nlohmann::ordered_json::array();
    for (const auto& p : m.params) {
        const Shape& s = p.value.shape();
        params.push_back({{"name", p.name},
                          {"shape", {s.n, s.c, s.h, s.w}},
                          {"data", encode_reals(p.value.data())}});
    }
    j["params"] = std::move(params);
    j["extra"] = nlohmann::ordered_json::parse(ckpt.extra_json);
    return j.dump(1);
}

Checkpoint checkpoint_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format") != "dds-checkpoint") throw std::runtime_error("not a dds checkpoint");
        VariantId variant;
        variant.kind = parse_variant(j.at("variant").at("name").get<std::string>());
        variant.converter_units = j.at("variant").at("converter_units").get<int>();
        variant.converter_residual = j.at("variant").at("converter_residual").get<bool>();
        BackboneConfig bb;
        bb.stage_channels = j.at("backbone").at("stage_channels").get<std::array<int, 5>>();
        bb.stage_strides = j.at("backbone").at("stage_strides").get<std::array<int, 5>>();
        bb.stage_dilations = j.at("backbone").at("stage_dilations").get<std::array<int, 5>>();
        bb.blocks_per_stage = j.at("backbone").at("blocks_per_stage").get<int>();
        bb.input_channels = j.at("backbone").at("input_channels").get<int>();

        Checkpoint ckpt;
        ckpt.model = build_variant(variant, bb, j.at("classes").get<int>(),
                                   j.at("seed").get<std::uint64_t>());
        ckpt.iteration = j.at("iteration").get<std::int64_t>();
        const auto& params = j.at("params");
        if (params.size() != ckpt.model.params.size()) {
            throw std::runtime_error("checkpoint holds " + std::to_string(params.size()) +
                                     " parameters, model expects " +
                                     std::to_string(ckpt.model.params.size()));
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& dst = ckpt.model.params[i];
            const auto& src = params[i];
            if (src.at("name").get<std::string>() != dst.name) {
                throw std::runtime_error("parameter " + std::to_string(i) + " is '" +
                                         src.at("name").get<std::string>() +
                                         "', expected '" + dst.name + "'");
            }
            const auto dims = src.at("shape").get<std::array<int, 4>>();
            const Shape s{dims[0], dims[1], dims[2], dims[3]};
            if (!(s == dst.value.shape())) {
                throw std::runtime_error("parameter '" + dst.name + "' has shape " +
                                         s.str() + ", expected " + dst.value.shape().str());
            }
            dst.value = Tensor(s, decode_reals(src.at("data").get<std::string>()));
        }
        if (j.contains("extra")) ckpt.extra_json = j.at("extra").dump();
        return ckpt;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed checkpoint: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("invalid checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << to_json(ckpt);
    if (!out) throw IoError("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_json(ss.str());
}

}  // namespace dds
