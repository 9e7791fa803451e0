#include <gtest/gtest.h>

#include <random>

#include "dds/benchmark.hpp"
#include "test_util.hpp"

using namespace dds;

namespace {

ProbMap as_prob(const BinaryMap& m, double on = 1.0) {
    ProbMap p(m.height, m.width, 0);
    for (std::size_t i = 0; i < m.size(); ++i) p.data[i] = m.data[i] ? on : 0;
    return p;
}

EdgeGroundTruth square_gt(int size, int K) {
    SegmentationMap s{LabelGrid(size, size, 0), std::nullopt};
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const bool in = y >= size / 4 && y < 3 * size / 4 && x >= size / 4 && x < 3 * size / 4;
            if (in) s.labels.at(y, x) = 1 + (x >= size / 2 ? 1 : 0) % K;
        }
    }
    return semantic_boundaries(s, K);
}

}  // namespace

TEST(Border, ZeroesMargin) {
    const BinaryMap m = apply_border_ignore(BinaryMap(6, 6, 1), 1);
    EXPECT_EQ(count_on(m), 16u);
    EXPECT_EQ(apply_border_ignore(BinaryMap(6, 6, 1), 0), BinaryMap(6, 6, 1));
    EXPECT_THROW(apply_border_ignore(BinaryMap(6, 6, 1), 3), std::invalid_argument);
    EXPECT_THROW(apply_border_ignore(BinaryMap(6, 6, 1), -1), std::invalid_argument);
}

TEST(PrPoint, ZeroOverZeroConventions) {
    const PRPoint empty = pr_point(MatchCounts{0, 0, 0, 5}, 0.5);
    EXPECT_EQ(empty.precision, 1);
    EXPECT_EQ(empty.recall, 0);
    EXPECT_EQ(empty.f, 0);
    const PRPoint nothing = pr_point(MatchCounts{}, 0.5);
    EXPECT_EQ(nothing.precision, 1);
    EXPECT_EQ(nothing.recall, 1);
    const PRPoint noise = pr_point(MatchCounts{0, 3, 0, 0}, 0.5);
    EXPECT_EQ(noise.precision, 0);
    EXPECT_EQ(noise.recall, 1);
    EXPECT_EQ(noise.f, 0);
    const PRPoint half = pr_point(MatchCounts{1, 1, 1, 1}, 0.5);
    EXPECT_DOUBLE_EQ(half.f, 0.5);
}

TEST(PrCurve, ThinGroundTruthPredictionIsPerfect) {
    const EdgeGroundTruth gt = square_gt(32, 2);
    EvalConfig cfg;
    for (int k = 0; k < 2; ++k) {
        const auto curve = pr_curve(as_prob(thin(gt.per_class[k])), gt.per_class[k], cfg);
        for (const auto& c : curve) {
            EXPECT_EQ(c.fp, 0u);
            EXPECT_EQ(c.fn, 0u);
        }
    }
}

TEST(PrCurve, ThresholdsMonotone) {
    std::mt19937_64 rng(1);
    const EdgeGroundTruth gt = square_gt(32, 1);
    ProbMap p(32, 32, 0);
    for (auto& v : p.data) v = std::uniform_real_distribution<double>(0, 1)(rng);
    EvalConfig cfg;
    cfg.mode = EvalMode::Raw;
    const auto curve = pr_curve(p, gt.per_class[0], cfg);
    for (std::size_t t = 1; t < curve.size(); ++t) {
        EXPECT_LE(curve[t].predicted(), curve[t - 1].predicted());
    }
}

TEST(PrCurve, RawModeKeepsThickGroundTruth) {
    const EdgeGroundTruth gt = square_gt(32, 1);
    EvalConfig raw;
    raw.mode = EvalMode::Raw;
    raw.border_ignore = 0;
    const auto c = pr_curve(as_prob(gt.per_class[0]), gt.per_class[0], raw);
    EXPECT_EQ(c[0].ground_truth(), count_on(gt.per_class[0]));
    EXPECT_EQ(c[0].fp, 0u);
    EvalConfig th = raw;
    th.mode = EvalMode::Thin;
    const auto d = pr_curve(as_prob(gt.per_class[0]), gt.per_class[0], th);
    EXPECT_EQ(d[0].ground_truth(), count_on(thin(gt.per_class[0])));
}

TEST(PrCurve, RejectsBadProbability) {
    ProbMap p(16, 16, 0);
    p.at(3, 3) = 1.5;
    EXPECT_THROW(pr_curve(p, BinaryMap(16, 16, 0), EvalConfig{}), std::invalid_argument);
    EXPECT_THROW(pr_curve(ProbMap(16, 15, 0), BinaryMap(16, 16, 0), EvalConfig{}), std::invalid_argument);
}

TEST(Ods, MatchesBruteForceOverThresholds) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> d(0, 20);
    const std::vector<double> th{0.2, 0.4, 0.6, 0.8};
    std::vector<std::vector<MatchCounts>> per_image(3, std::vector<MatchCounts>(4));
    for (auto& img : per_image) {
        for (auto& c : img) {
            c.tp_pred = c.tp_gt = d(rng);
            c.fp = d(rng);
            c.fn = d(rng);
        }
    }
    double best = -1;
    double best_t = 0;
    for (std::size_t t = 0; t < 4; ++t) {
        MatchCounts sum;
        for (const auto& img : per_image) sum += img[t];
        const double f = pr_point(sum, th[t]).f;
        if (f > best) {
            best = f;
            best_t = th[t];
        }
    }
    const ClassResult r = ods_fmeasure(per_image, th);
    EXPECT_EQ(r.ods_f, best);
    EXPECT_EQ(r.ods_threshold, best_t);
    EXPECT_FALSE(r.excluded);
    EXPECT_THROW(ods_fmeasure({}, th), std::invalid_argument);
}

TEST(Ods, ExcludesClassWithNothing) {
    const std::vector<double> th{0.5};
    EXPECT_TRUE(ods_fmeasure({{MatchCounts{}}}, th).excluded);
    EXPECT_FALSE(ods_fmeasure({{MatchCounts{0, 1, 0, 0}}}, th).excluded);
    ClassResult a, b, c;
    a.ods_f = 0.5;
    b.ods_f = 1.0;
    c.excluded = true;
    std::size_t n = 0;
    EXPECT_DOUBLE_EQ(mean_ods({a, b, c}, &n), 0.75);
    EXPECT_EQ(n, 2u);
}

TEST(EvaluateClasses, PerfectPredictionScoresOne) {
    std::vector<std::vector<ProbMap>> probs;
    std::vector<EdgeGroundTruth> gts;
    for (int size : {32, 40}) {
        gts.push_back(square_gt(size, 2));
        probs.push_back({as_prob(thin(gts.back().per_class[0])), as_prob(thin(gts.back().per_class[1]))});
    }
    const EvalResult r = evaluate_classes(probs, gts, EvalConfig{}, 2);
    EXPECT_EQ(r.mean_ods_f, 1.0);
    EXPECT_EQ(r.included_classes, 2u);
}

TEST(EvaluateClasses, EmptyPredictionHasZeroRecall) {
    const EdgeGroundTruth gt = square_gt(32, 1);
    const EvalResult r = evaluate_classes({{ProbMap(32, 32, 0)}}, {gt}, EvalConfig{});
    for (const auto& p : r.classes[0].curve) {
        EXPECT_EQ(p.recall, 0);
        EXPECT_EQ(p.precision, 1);
    }
    EXPECT_EQ(r.mean_ods_f, 0);
}

TEST(EvaluateClasses, ThreadCountDoesNotMatter) {
    std::mt19937_64 rng(2);
    std::vector<std::vector<ProbMap>> probs;
    std::vector<EdgeGroundTruth> gts;
    for (int i = 0; i < 4; ++i) {
        gts.push_back(square_gt(32, 2));
        std::vector<ProbMap> maps(2, ProbMap(32, 32, 0));
        for (auto& m : maps) {
            for (auto& v : m.data) v = std::uniform_real_distribution<double>(0, 1)(rng);
        }
        probs.push_back(maps);
    }
    const EvalResult a = evaluate_classes(probs, gts, EvalConfig{}, 1);
    const EvalResult b = evaluate_classes(probs, gts, EvalConfig{}, 3);
    EXPECT_EQ(a.mean_ods_f, b.mean_ods_f);
}

TEST(EvaluateClasses, InputChecks) {
    const EdgeGroundTruth gt = square_gt(32, 2);
    EXPECT_THROW(evaluate_classes({}, {}, EvalConfig{}), std::invalid_argument);
    EXPECT_THROW(evaluate_classes({{ProbMap(32, 32, 0)}}, {gt}, EvalConfig{}), std::invalid_argument);
    EvalConfig bad;
    bad.tolerance = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = EvalConfig{};
    bad.thresholds = {0.5, 0.4};
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(ClassAgnostic, ComplementaryClassMapsScorePerfectly) {
    // Each class map covers only its own boundary; their maximum is the union.
    const EdgeGroundTruth gt = square_gt(32, 2);
    const auto thin_gt = thin(gt);
    const std::vector<ProbMap> maps{as_prob(thin_gt.per_class[0]), as_prob(thin_gt.per_class[1])};
    EvalConfig cfg;
    cfg.mode = EvalMode::Raw;
    const ClassResult r = class_agnostic_eval({maps}, {gt}, cfg);
    const ProbMap m = max_over_classes(maps);
    for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_EQ(m.data[i], std::max(maps[0].data[i], maps[1].data[i]));
    }
    EXPECT_GT(r.ods_f, 0.8);
    const EvalResult per_class = evaluate_classes({{maps[0], ProbMap(32, 32, 0)}}, {gt}, cfg);
    EXPECT_LT(per_class.classes[1].ods_f, 1e-12);
}

TEST(EvalModeNames, RoundTrip) {
    EXPECT_EQ(parse_eval_mode("thin"), EvalMode::Thin);
    EXPECT_EQ(parse_eval_mode(to_string(EvalMode::Raw)), EvalMode::Raw);
    EXPECT_THROW(parse_eval_mode("both"), std::invalid_argument);
}
