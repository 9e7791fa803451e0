#include "dds/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dds/image_io.hpp"

namespace dds {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a number");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::array<int, 5> parse_five(const std::string& key, const std::string& v) {
    const auto parts = split(v, ',');
    if (parts.size() != 5) {
        throw ConfigError("key '" + key + "': expected 5 comma-separated integers");
    }
    std::array<int, 5> out{};
    for (int i = 0; i < 5; ++i) out[i] = parse_number<int>(key, parts[i]);
    return out;
}

template <typename Fn>
auto wrap(const std::string& key, Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
        {"out", [](RunConfig& c, auto&, auto& v) { c.out = v; }},
        {"height", [](RunConfig& c, auto& k, auto& v) { c.scene.height = parse_number<int>(k, v); }},
        {"width", [](RunConfig& c, auto& k, auto& v) { c.scene.width = parse_number<int>(k, v); }},
        {"classes", [](RunConfig& c, auto& k, auto& v) { c.scene.classes = parse_number<int>(k, v); }},
        {"min_shapes", [](RunConfig& c, auto& k, auto& v) { c.scene.min_shapes = parse_number<int>(k, v); }},
        {"max_shapes", [](RunConfig& c, auto& k, auto& v) { c.scene.max_shapes = parse_number<int>(k, v); }},
        {"noise_sigma", [](RunConfig& c, auto& k, auto& v) { c.scene.noise_sigma = parse_number<double>(k, v); }},
        {"num_images", [](RunConfig& c, auto& k, auto& v) { c.num_images = parse_number<int>(k, v); }},
        {"data_dir", [](RunConfig& c, auto&, auto& v) { c.data_dir = v; }},
        {"variant", [](RunConfig& c, auto& k, auto& v) {
             c.variant.kind = wrap(k, [&] { return parse_variant(v); });
         }},
        {"converter_units", [](RunConfig& c, auto& k, auto& v) { c.variant.converter_units = parse_number<int>(k, v); }},
        {"converter_residual", [](RunConfig& c, auto& k, auto& v) { c.variant.converter_residual = parse_bool(k, v); }},
        {"stage_channels", [](RunConfig& c, auto& k, auto& v) { c.backbone.stage_channels = parse_five(k, v); }},
        {"stage_strides", [](RunConfig& c, auto& k, auto& v) { c.backbone.stage_strides = parse_five(k, v); }},
        {"stage_dilations", [](RunConfig& c, auto& k, auto& v) { c.backbone.stage_dilations = parse_five(k, v); }},
        {"blocks_per_stage", [](RunConfig& c, auto& k, auto& v) { c.backbone.blocks_per_stage = parse_number<int>(k, v); }},
        {"base_lr", [](RunConfig& c, auto& k, auto& v) { c.train.base_lr = parse_number<double>(k, v); }},
        {"power", [](RunConfig& c, auto& k, auto& v) { c.train.power = parse_number<double>(k, v); }},
        {"max_iter", [](RunConfig& c, auto& k, auto& v) { c.train.max_iter = parse_number<int>(k, v); }},
        {"momentum", [](RunConfig& c, auto& k, auto& v) { c.train.momentum = parse_number<double>(k, v); }},
        {"weight_decay", [](RunConfig& c, auto& k, auto& v) { c.train.weight_decay = parse_number<double>(k, v); }},
        {"batch_size", [](RunConfig& c, auto& k, auto& v) { c.train.batch_size = parse_number<int>(k, v); }},
        {"crop", [](RunConfig& c, auto& k, auto& v) { c.train.crop = parse_number<int>(k, v); }},
        {"loss", [](RunConfig& c, auto& k, auto& v) {
             c.train.loss_mode = wrap(k, [&] { return parse_loss_mode(v); });
         }},
        {"pretrain_iters", [](RunConfig& c, auto& k, auto& v) { c.train.pretrain_iters = parse_number<int>(k, v); }},
        {"pretrain_lr", [](RunConfig& c, auto& k, auto& v) { c.train.pretrain_lr = parse_number<double>(k, v); }},
        {"divergence_factor", [](RunConfig& c, auto& k, auto& v) { c.train.divergence_factor = parse_number<double>(k, v); }},
        {"mode", [](RunConfig& c, auto& k, auto& v) {
             if (v == "both") {
                 c.mode.reset();
             } else {
                 c.mode = wrap(k, [&] { return parse_eval_mode(v); });
             }
         }},
        {"tolerance", [](RunConfig& c, auto& k, auto& v) { c.eval.tolerance = parse_number<double>(k, v); }},
        {"border", [](RunConfig& c, auto& k, auto& v) { c.eval.border_ignore = parse_number<int>(k, v); }},
        {"threads", [](RunConfig& c, auto& k, auto& v) { c.threads = parse_number<unsigned>(k, v); }},
        {"checkpoint", [](RunConfig& c, auto&, auto& v) { c.checkpoint = v; }},
        {"pred_dir", [](RunConfig& c, auto&, auto& v) { c.pred_dir = v; }},
        {"gradcheck_size", [](RunConfig& c, auto& k, auto& v) { c.gradcheck_size = parse_number<int>(k, v); }},
        {"gradcheck_classes", [](RunConfig& c, auto& k, auto& v) { c.gradcheck_classes = parse_number<int>(k, v); }},
        {"gradcheck_channels", [](RunConfig& c, auto& k, auto& v) { c.gradcheck_channels = parse_five(k, v); }},
        {"ablate_variants", [](RunConfig& c, auto& k, auto& v) {
             c.ablate_variants.clear();
             for (const auto& name : split(v, ',')) {
                 c.ablate_variants.push_back(wrap(k, [&] { return parse_variant(name); }));
             }
         }},
        {"ablate_losses", [](RunConfig& c, auto& k, auto& v) {
             c.ablate_losses.clear();
             for (const auto& name : split(v, ',')) {
                 c.ablate_losses.push_back(wrap(k, [&] { return parse_loss_mode(name); }));
             }
         }},
    };
    return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(*this, key, trim(value));
}

void RunConfig::validate() const {
    auto check = [](auto&& fn) {
        try {
            fn();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    };
    check([&] { scene.validate(); });
    check([&] { variant.validate(); });
    check([&] { backbone.validate(); });
    check([&] { train.validate(backbone.stride_product()); });
    check([&] { eval.validate(); });
    if (num_images < 1) throw ConfigError("num_images must be >= 1");
    if (gradcheck_size < 1 || gradcheck_classes < 1) {
        throw ConfigError("gradcheck_size and gradcheck_classes must be >= 1");
    }
    if (ablate_variants.empty() || ablate_losses.empty()) {
        throw ConfigError("ablation lists must not be empty");
    }
}

std::string RunConfig::checkpoint_path() const {
    return checkpoint.empty() ? out + "/checkpoint.json" : checkpoint;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, fn] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

void apply_config_text(RunConfig& config, const std::string& text, const std::string& source) {
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        try {
            config.set(key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void apply_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(config, ss.str(), path);
}

}  // namespace dds
