#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "dds/config.hpp"
#include "dds/gradcheck.hpp"

namespace dds {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitDiverged = 2,
    kExitIo = 3,
    /// gradcheck found an error above its tolerance.
    kExitCheckFailed = 4,
};

/// Writes the dataset to `out` (image, labels, thin edges, manifest).
int cmd_gen(const RunConfig& config, std::ostream& log);
/// Writes <out>/checkpoint.json and <out>/trace.csv.
int cmd_train(const RunConfig& config, std::ostream& log);
/// Writes <out>/results.csv with per-class and mean ODS for the
/// class-specific and class-agnostic protocols.
int cmd_eval(const RunConfig& config, std::ostream& log);
/// Writes <out>/gradcheck.csv.
int cmd_gradcheck(const RunConfig& config, std::ostream& log);
/// Writes <out>/ablation.csv with one row per variant and loss mode.
int cmd_ablate(const RunConfig& config, std::ostream& log);

/// Dispatches by name and maps ConfigError to 1 and IoError to 3.
int run_command(const std::string& name, const RunConfig& config, std::ostream& log,
                std::ostream& err);

struct GradCheckEntry {
    std::string name;
    GradCheckReport report;
    double tolerance = 0;

    bool passed() const { return report.compared > 0 && report.max_rel_error < tolerance; }
};

/// The full DDS network with its total loss, plus every loss on its own.
std::vector<GradCheckEntry> run_gradchecks(const RunConfig& config);

/// The scenes a command trains or evaluates on: the data_dir dataset when
/// set, otherwise generated in memory from the scene keys and seed.
std::vector<Sample> load_or_generate(const RunConfig& config);

ModelGraph build_from_config(const RunConfig& config);

}  // namespace dds
