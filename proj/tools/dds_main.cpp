// Command-line front end: dds <gen|train|eval|gradcheck|ablate> [flags]
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dds/commands.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> seed, out, variant, loss, mode, tolerance, border, data,
        checkpoint, pred;
    std::vector<std::string> sets;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "key=value config file");
    cmd->add_option("--seed", f.seed, "seed for data, initialization and batches");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--variant", f.variant, "network variant");
    cmd->add_option("--loss", f.loss, "reweighted or unweighted");
    cmd->add_option("--mode", f.mode, "thin, raw or both");
    cmd->add_option("--tolerance", f.tolerance, "match radius as a fraction of the diagonal");
    cmd->add_option("--border", f.border, "ignored border width in pixels");
    cmd->add_option("--data", f.data, "dataset directory written by gen");
    cmd->add_option("--checkpoint", f.checkpoint, "checkpoint path");
    cmd->add_option("--pred", f.pred, "directory of pred_NNNN_cK.pgm maps to score");
    cmd->add_option("--set", f.sets, "extra key=value override (repeatable)");
}

dds::RunConfig resolve(const Flags& f) {
    dds::RunConfig c;
    if (!f.config.empty()) dds::apply_config_file(c, f.config);
    const std::pair<const char*, const std::optional<std::string>*> flags[] = {
        {"seed", &f.seed},         {"out", &f.out},           {"variant", &f.variant},
        {"loss", &f.loss},         {"mode", &f.mode},         {"tolerance", &f.tolerance},
        {"border", &f.border},     {"data_dir", &f.data},     {"checkpoint", &f.checkpoint},
        {"pred_dir", &f.pred},
    };
    for (const auto& [key, value] : flags) {
        if (*value) c.set(key, **value);
    }
    for (const auto& kv : f.sets) dds::apply_config_text(c, kv, "--set");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diverse deep supervision for semantic edge detection"};
    app.require_subcommand(1);
    Flags flags;
    const std::pair<const char*, const char*> commands[] = {
        {"gen", "generate a synthetic dataset"},
        {"train", "train a network and write checkpoint.json and trace.csv"},
        {"eval", "score a checkpoint or prediction maps and write results.csv"},
        {"gradcheck", "compare analytic and finite-difference gradients"},
        {"ablate", "train and score every variant and loss mode"},
    };
    for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return dds::kExitConfig;
    }

    dds::RunConfig config;
    try {
        config = resolve(flags);
    } catch (const dds::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return dds::kExitConfig;
    } catch (const dds::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return dds::kExitIo;
    }
    return dds::run_command(app.get_subcommands().front()->get_name(), config, std::cout,
                            std::cerr);
}
