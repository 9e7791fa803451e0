#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dds/network.hpp"

namespace dds {

std::string base64_encode(std::string_view bytes);
/// Throws std::invalid_argument on malformed input.
std::string base64_decode(std::string_view text);

/// Doubles serialized as little-endian IEEE-754 bytes.
std::string encode_reals(std::span<const Real> values);
std::vector<Real> decode_reals(std::string_view base64);

struct Checkpoint {
    ModelGraph model;
    std::int64_t iteration = 0;
    /// Free-form metadata carried through unchanged (JSON text).
    std::string extra_json = "{}";
};

/// Single JSON document: variant, configs, seed, iteration and every named
/// parameter as base64 raw values. Round trips are bit-exact.
std::string to_json(const Checkpoint& ckpt);
/// Rebuilds the wiring from the stored configs and loads parameter values.
/// Throws std::runtime_error on a malformed or inconsistent document.
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dds
