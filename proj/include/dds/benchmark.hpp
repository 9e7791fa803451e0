#pragma once

#include <string>
#include <vector>

#include "dds/grid.hpp"
#include "dds/groundtruth.hpp"
#include "dds/matching.hpp"

namespace dds {

enum class EvalMode { Thin, Raw };

std::string to_string(EvalMode m);
EvalMode parse_eval_mode(const std::string& s);

/// Default grid k/100, k = 1..99.
std::vector<double> default_thresholds();

struct EvalConfig {
    /// Matching tolerance as a fraction of the image diagonal.
    double tolerance = 0.02;
    EvalMode mode = EvalMode::Thin;
    int border_ignore = 5;
    std::vector<double> thresholds = default_thresholds();

    /// Throws std::invalid_argument on a non-positive tolerance, negative
    /// border or a threshold list that is not strictly increasing in (0,1).
    void validate() const;
};

/// Zeroes every pixel within `width` of an image border. Throws
/// std::invalid_argument unless 0 <= 2*width < min(H, W).
BinaryMap apply_border_ignore(const BinaryMap& map, int width);

/// Counts for a single binary prediction. `gt` must already be in the form the
/// protocol expects (thin or thick); border ignore is applied here to both.
MatchCounts match_edges(const BinaryMap& pred, const BinaryMap& gt,
                        const EvalConfig& config);

/// Rounds to the 8-bit grid used for stored probability maps.
inline double quantize_probability(double p) {
    return static_cast<double>(static_cast<int>(p * 255.0 + 0.5)) / 255.0;
}

/// Per-threshold counts for one probability map against one thick class
/// boundary map. Thin mode thins both the binarized prediction and the
/// ground truth; Raw mode matches both as they are. Throws
/// std::invalid_argument when a probability lies outside [0, 1].
std::vector<MatchCounts> pr_curve(const ProbMap& prob, const BinaryMap& thick_gt,
                                  const EvalConfig& config);

struct PRPoint {
    double threshold = 0;
    double precision = 1;
    double recall = 1;
    double f = 0;
};

struct ClassResult {
    std::vector<PRPoint> curve;
    double ods_threshold = 0;
    double ods_f = 0;
    /// No ground truth and no predictions anywhere in the dataset.
    bool excluded = false;
};

struct EvalResult {
    std::vector<ClassResult> classes;
    double mean_ods_f = 0;
    std::size_t included_classes = 0;
};

/// precision = tp / predicted with 0/0 = 1; recall = tp / gt with 0/0 = 1.
PRPoint pr_point(const MatchCounts& c, double threshold);

/// Dataset-scale F-measure: counts are summed per threshold over images, then
/// the single best threshold is chosen. Throws std::invalid_argument for an
/// empty dataset.
ClassResult ods_fmeasure(const std::vector<std::vector<MatchCounts>>& per_image,
                         const std::vector<double>& thresholds);

/// Mean over non-excluded classes.
double mean_ods(const std::vector<ClassResult>& classes, std::size_t* included = nullptr);

/// probs[i][k] is image i's probability map for class k+1; gts are thick.
/// Images are evaluated in parallel on up to `threads` workers (0 = hardware).
EvalResult evaluate_classes(const std::vector<std::vector<ProbMap>>& probs,
                            const std::vector<EdgeGroundTruth>& gts,
                            const EvalConfig& config, unsigned threads = 0);

/// Pixelwise maximum across class maps.
ProbMap max_over_classes(const std::vector<ProbMap>& probs);

/// Scores the per-pixel class maximum against the union boundary map as a
/// single binary task.
ClassResult class_agnostic_eval(const std::vector<std::vector<ProbMap>>& probs,
                                const std::vector<EdgeGroundTruth>& gts,
                                const EvalConfig& config, unsigned threads = 0);

}  // namespace dds
