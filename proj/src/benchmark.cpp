#include "dds/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

namespace dds {

std::string to_string(EvalMode m) { return m == EvalMode::Thin ? "thin" : "raw"; }

EvalMode parse_eval_mode(const std::string& s) {
    if (s == "thin") return EvalMode::Thin;
    if (s == "raw") return EvalMode::Raw;
    throw std::invalid_argument("unknown evaluation mode '" + s + "' (thin|raw)");
}

std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (int k = 1; k <= 99; ++k) t.push_back(k / 100.0);
    return t;
}

void EvalConfig::validate() const {
    if (!(tolerance > 0)) throw std::invalid_argument("tolerance must be > 0");
    if (border_ignore < 0) throw std::invalid_argument("border_ignore must be >= 0");
    if (thresholds.empty()) throw std::invalid_argument("threshold list is empty");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0 && thresholds[i] < 1)) {
            throw std::invalid_argument("thresholds must lie in (0, 1)");
        }
        if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
            throw std::invalid_argument("thresholds must be strictly increasing");
        }
    }
}

BinaryMap apply_border_ignore(const BinaryMap& map, int width) {
    if (width < 0) throw std::invalid_argument("border width must be >= 0");
    if (2 * width >= std::min(map.height, map.width)) {
        throw std::invalid_argument("border width " + std::to_string(width) +
                                    " too large for " + std::to_string(map.height) +
                                    "x" + std::to_string(map.width));
    }
    if (width == 0) return map;
    BinaryMap out = map;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            if (y < width || x < width || y >= map.height - width ||
                x >= map.width - width) {
                out.at(y, x) = 0;
            }
        }
    }
    return out;
}

MatchCounts match_edges(const BinaryMap& pred, const BinaryMap& gt,
                        const EvalConfig& config) {
    if (!pred.same_dims(gt)) {
        throw std::invalid_argument("match_edges: prediction and ground truth dims differ");
    }
    const double radius = tolerance_radius(config.tolerance, gt.height, gt.width);
    return match_edges_radius(apply_border_ignore(pred, config.border_ignore),
                              apply_border_ignore(gt, config.border_ignore), radius);
}

std::vector<MatchCounts> pr_curve(const ProbMap& prob, const BinaryMap& thick_gt,
                                  const EvalConfig& config) {
    if (!prob.same_dims(thick_gt)) {
        throw std::invalid_argument("pr_curve: probability map and ground truth dims differ");
    }
    std::vector<double> q(prob.size());
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const double p = prob.data[i];
        if (!(p >= 0 && p <= 1)) {
            throw std::invalid_argument("probability " + std::to_string(p) +
                                        " at pixel " + std::to_string(i) +
                                        " outside [0, 1]");
        }
        q[i] = quantize_probability(p);
    }
    const BinaryMap gt = config.mode == EvalMode::Thin ? thin(thick_gt) : thick_gt;
    std::vector<MatchCounts> out;
    out.reserve(config.thresholds.size());
    BinaryMap pred(prob.height, prob.width, 0);
    for (double t : config.thresholds) {
        for (std::size_t i = 0; i < q.size(); ++i) pred.data[i] = q[i] >= t;
        out.push_back(config.mode == EvalMode::Thin ? match_edges(thin(pred), gt, config)
                                                    : match_edges(pred, gt, config));
    }
    return out;
}

PRPoint pr_point(const MatchCounts& c, double threshold) {
    PRPoint p;
    p.threshold = threshold;
    p.precision = c.predicted() == 0 ? 1.0
                                     : static_cast<double>(c.tp_pred) / c.predicted();
    p.recall = c.ground_truth() == 0 ? 1.0
                                     : static_cast<double>(c.tp_gt) / c.ground_truth();
    const double s = p.precision + p.recall;
    p.f = s > 0 ? 2 * p.precision * p.recall / s : 0.0;
    return p;
}

ClassResult ods_fmeasure(const std::vector<std::vector<MatchCounts>>& per_image,
                         const std::vector<double>& thresholds) {
    if (per_image.empty()) throw std::invalid_argument("ods_fmeasure: empty dataset");
    std::vector<MatchCounts> total(thresholds.size());
    for (const auto& img : per_image) {
        if (img.size() != thresholds.size()) {
            throw std::invalid_argument("ods_fmeasure: per-image count length mismatch");
        }
        for (std::size_t t = 0; t < img.size(); ++t) total[t] += img[t];
    }
    ClassResult r;
    bool any_gt = false;
    bool any_pred = false;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        any_gt = any_gt || total[t].ground_truth() > 0;
        any_pred = any_pred || total[t].predicted() > 0;
        const PRPoint p = pr_point(total[t], thresholds[t]);
        r.curve.push_back(p);
        if (t == 0 || p.f > r.ods_f) {
            r.ods_f = p.f;
            r.ods_threshold = p.threshold;
        }
    }
    r.excluded = !any_gt && !any_pred;
    return r;
}

double mean_ods(const std::vector<ClassResult>& classes, std::size_t* included) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& c : classes) {
        if (c.excluded) continue;
        sum += c.ods_f;
        ++n;
    }
    if (included) *included = n;
    return n == 0 ? 0.0 : sum / n;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

void check_inputs(const std::vector<std::vector<ProbMap>>& probs,
                  const std::vector<EdgeGroundTruth>& gts) {
    if (probs.empty()) throw std::invalid_argument("evaluation: empty dataset");
    if (probs.size() != gts.size()) {
        throw std::invalid_argument("evaluation: " + std::to_string(probs.size()) +
                                    " predictions for " + std::to_string(gts.size()) +
                                    " ground truths");
    }
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i].size() != gts[i].per_class.size()) {
            throw std::invalid_argument("evaluation: image " + std::to_string(i) +
                                        " has " + std::to_string(probs[i].size()) +
                                        " class maps, expected " +
                                        std::to_string(gts[i].per_class.size()));
        }
    }
}

}  // namespace

EvalResult evaluate_classes(const std::vector<std::vector<ProbMap>>& probs,
                            const std::vector<EdgeGroundTruth>& gts,
                            const EvalConfig& config, unsigned threads) {
    config.validate();
    check_inputs(probs, gts);
    const std::size_t K = gts.front().per_class.size();
    // counts[k][i] = per-threshold counts for class k on image i.
    std::vector<std::vector<std::vector<MatchCounts>>> counts(
        K, std::vector<std::vector<MatchCounts>>(probs.size()));
    parallel_for(probs.size(), threads, [&](std::size_t i) {
        for (std::size_t k = 0; k < K; ++k) {
            counts[k][i] = pr_curve(probs[i][k], gts[i].per_class[k], config);
        }
    });
    EvalResult result;
    for (std::size_t k = 0; k < K; ++k) {
        result.classes.push_back(ods_fmeasure(counts[k], config.thresholds));
    }
    result.mean_ods_f = mean_ods(result.classes, &result.included_classes);
    return result;
}

ProbMap max_over_classes(const std::vector<ProbMap>& probs) {
    if (probs.empty()) throw std::invalid_argument("max_over_classes: no class maps");
    ProbMap out = probs.front();
    for (std::size_t k = 1; k < probs.size(); ++k) {
        if (!probs[k].same_dims(out)) {
            throw std::invalid_argument("max_over_classes: class map dims differ");
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
            out.data[i] = std::max(out.data[i], probs[k].data[i]);
        }
    }
    return out;
}

ClassResult class_agnostic_eval(const std::vector<std::vector<ProbMap>>& probs,
                                const std::vector<EdgeGroundTruth>& gts,
                                const EvalConfig& config, unsigned threads) {
    config.validate();
    check_inputs(probs, gts);
    std::vector<std::vector<MatchCounts>> counts(probs.size());
    parallel_for(probs.size(), threads, [&](std::size_t i) {
        counts[i] = pr_curve(max_over_classes(probs[i]), binary_union(gts[i]), config);
    });
    return ods_fmeasure(counts, config.thresholds);
}

}  // namespace dds
