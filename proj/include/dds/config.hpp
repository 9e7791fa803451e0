#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dds/benchmark.hpp"
#include "dds/losses.hpp"
#include "dds/network.hpp"
#include "dds/synth.hpp"
#include "dds/trainer.hpp"

namespace dds {

/// Bad key, value or combination. Maps to exit code 1.
class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Everything a command needs, read from a flat key=value file and then
/// overridden by command-line flags.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out = "run";

    SceneSpec scene;
    int num_images = 8;
    /// Dataset directory written by `gen`. Empty means generate in memory.
    std::string data_dir;

    VariantId variant;
    BackboneConfig backbone;
    TrainConfig train;

    EvalConfig eval;
    /// Unset evaluates both modes.
    std::optional<EvalMode> mode;
    unsigned threads = 0;
    /// Defaults to <out>/checkpoint.json.
    std::string checkpoint;
    /// Directory of pred_NNNN_cK.pgm maps scored instead of a checkpoint.
    std::string pred_dir;

    int gradcheck_size = 16;
    int gradcheck_classes = 4;
    std::array<int, 5> gradcheck_channels{2, 3, 3, 4, 4};

    std::vector<Variant> ablate_variants{Variant::Basic,      Variant::DSN,
                                         Variant::CASENet,    Variant::CASENetS4,
                                         Variant::DDSNoConvt, Variant::DDSNoDeSup,
                                         Variant::DDS};
    std::vector<LossMode> ablate_losses{LossMode::Reweighted, LossMode::Unweighted};

    /// Sets one key. Throws ConfigError naming the key for unknown keys or
    /// unparsable values.
    void set(const std::string& key, const std::string& value);
    /// Cross-field checks. Throws ConfigError.
    void validate() const;

    std::string checkpoint_path() const;
    int classes() const { return scene.classes; }
};

/// Every key accepted by RunConfig::set.
const std::vector<std::string>& config_keys();

/// One key=value per line; '#' starts a comment; blank lines are skipped.
/// `source` is used in error messages.
void apply_config_text(RunConfig& config, const std::string& text,
                       const std::string& source = "config");
/// Throws IoError when the file cannot be read.
void apply_config_file(RunConfig& config, const std::string& path);

}  // namespace dds
