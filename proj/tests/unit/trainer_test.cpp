#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "dds/trainer.hpp"
#include "test_util.hpp"

using namespace dds;

namespace {

BackboneConfig tiny_backbone() {
    BackboneConfig b;
    b.stage_channels = {4, 4, 6, 6, 8};
    return b;
}

std::vector<Sample> tiny_dataset(int n = 3, int size = 16, int K = 2) {
    SceneSpec spec;
    spec.height = spec.width = size;
    spec.classes = K;
    spec.min_shapes = 1;
    spec.max_shapes = 2;
    spec.seed = 5;
    return make_dataset(generate(spec, n), K);
}

TrainConfig tiny_config() {
    TrainConfig c;
    c.base_lr = 1e-3;
    c.max_iter = 4;
    c.batch_size = 2;
    c.crop = 16;
    c.seed = 3;
    return c;
}

}  // namespace

TEST(PolyLr, Values) {
    EXPECT_DOUBLE_EQ(poly_lr(1e-7, 0, 1000, 0.9), 1e-7);
    EXPECT_NEAR(poly_lr(1e-6, 500, 1000, 0.9), 5.358867e-7, 1e-13);
    EXPECT_NEAR(poly_lr(5e-7, 500, 1000, 0.9), 2.679e-7, 1e-10);
    EXPECT_NEAR(poly_lr(1e-6, 750, 1000, 0.9), 2.871746e-7, 1e-13);
    EXPECT_EQ(poly_lr(1e-6, 1000, 1000, 0.9), 0);
    EXPECT_EQ(poly_lr(1e-6, 10, 100, 0), 1e-6);
}

TEST(PolyLr, RejectsOutOfRange) {
    EXPECT_THROW(poly_lr(1, -1, 10, 0.9), std::invalid_argument);
    EXPECT_THROW(poly_lr(1, 11, 10, 0.9), std::invalid_argument);
    EXPECT_THROW(poly_lr(1, 0, 0, 0.9), std::invalid_argument);
}

TEST(ScheduledLr, PretrainPhase) {
    TrainConfig c;
    c.max_iter = 10;
    c.pretrain_iters = 4;
    c.pretrain_lr = 1e-8;
    c.base_lr = 1e-3;
    c.power = 1;
    EXPECT_EQ(scheduled_lr(c, 0), 1e-8);
    EXPECT_EQ(scheduled_lr(c, 3), 1e-8);
    EXPECT_DOUBLE_EQ(scheduled_lr(c, 4), 1e-3);
    EXPECT_DOUBLE_EQ(scheduled_lr(c, 7), 5e-4);
}

TEST(Sgd, MomentumSequence) {
    std::vector<Parameter> params{{"w", Tensor(Shape{1, 1, 1, 1}, 0)}};
    OptimizerState state{{Tensor(Shape{1, 1, 1, 1})}};
    const std::vector<Tensor> g{Tensor(Shape{1, 1, 1, 1}, 1)};
    sgd_step(params, g, state, 0.1, 0.9, 0);
    EXPECT_DOUBLE_EQ(state.velocity[0][0], -0.1);
    EXPECT_DOUBLE_EQ(params[0].value[0], -0.1);
    sgd_step(params, g, state, 0.1, 0.9, 0);
    EXPECT_DOUBLE_EQ(state.velocity[0][0], -0.19);
    EXPECT_DOUBLE_EQ(params[0].value[0], -0.29);
}

TEST(Sgd, ZeroLrOnlyDecaysVelocity) {
    std::vector<Parameter> params{{"w", Tensor(Shape{1, 1, 1, 2}, 3)}};
    OptimizerState state{{Tensor(Shape{1, 1, 1, 2}, 1)}};
    sgd_step(params, {Tensor(Shape{1, 1, 1, 2}, 5)}, state, 0, 0.5, 0.1);
    EXPECT_EQ(state.velocity[0][0], 0.5);
    EXPECT_EQ(params[0].value[1], 3.5);
}

TEST(Sgd, WeightDecayShrinksTowardsZero) {
    std::vector<Parameter> params{{"w", Tensor(Shape{1, 1, 1, 2}, {2, -2})}};
    OptimizerState state{{Tensor(Shape{1, 1, 1, 2})}};
    sgd_step(params, {Tensor(Shape{1, 1, 1, 2})}, state, 0.1, 0, 0.5);
    EXPECT_DOUBLE_EQ(params[0].value[0], 1.9);
    EXPECT_DOUBLE_EQ(params[0].value[1], -1.9);
}

TEST(Sgd, NonFiniteGradientNamesParameterAndLeavesStateAlone) {
    std::vector<Parameter> params{{"a", Tensor(Shape{1, 1, 1, 1}, 1)},
                                  {"stage3.conv", Tensor(Shape{1, 1, 1, 1}, 1)}};
    OptimizerState state{{Tensor(Shape{1, 1, 1, 1}), Tensor(Shape{1, 1, 1, 1})}};
    const std::vector<Tensor> g{Tensor(Shape{1, 1, 1, 1}, 1),
                                Tensor(Shape{1, 1, 1, 1}, std::numeric_limits<Real>::quiet_NaN())};
    try {
        sgd_step(params, g, state, 0.1, 0.9, 0);
        FAIL() << "expected NonFiniteGradient";
    } catch (const NonFiniteGradient& e) {
        EXPECT_NE(std::string(e.what()).find("stage3.conv"), std::string::npos);
    }
    EXPECT_EQ(params[0].value[0], 1);
    EXPECT_EQ(state.velocity[0][0], 0);
}

TEST(Sgd, CountMismatch) {
    std::vector<Parameter> params{{"a", Tensor(Shape{1, 1, 1, 1})}};
    OptimizerState state{{Tensor(Shape{1, 1, 1, 1})}};
    EXPECT_THROW(sgd_step(params, {}, state, 0.1, 0.9, 0), ShapeError);
}

TEST(Batch, DeterministicForSeed) {
    const auto data = tiny_dataset(4, 32);
    std::mt19937_64 a(11), b(11), c(12);
    const BatchSpec sa = sample_batch_spec(data, 5, 16, a);
    EXPECT_EQ(sa, sample_batch_spec(data, 5, 16, b));
    EXPECT_NE(sa, sample_batch_spec(data, 5, 16, c));
    for (const auto& [y, x] : sa.offsets) {
        EXPECT_GE(y, 0);
        EXPECT_LE(y, 16);
        EXPECT_GE(x, 0);
        EXPECT_LE(x, 16);
    }
}

TEST(Batch, FullSizeCropIsWholeImage) {
    const auto data = tiny_dataset(2, 16);
    std::mt19937_64 rng(1);
    const Batch batch = sample_batch(data, 3, 16, 2, rng);
    for (std::size_t b = 0; b < 3; ++b) {
        EXPECT_EQ(batch.spec.offsets[b], (std::pair<int, int>{0, 0}));
        const Tensor full = image_tensor(data[batch.spec.images[b]].image);
        for (std::size_t i = 0; i < full.size(); ++i) {
            EXPECT_EQ(batch.images[b * full.size() + i], full[i]);
        }
    }
}

TEST(Batch, CropMatchesSourcePixels) {
    const auto data = tiny_dataset(2, 32, 3);
    const BatchSpec spec{{1, 0}, {{5, 9}, {16, 0}}, 16};
    const Batch batch = assemble_batch(data, spec, 3);
    for (int b = 0; b < 2; ++b) {
        const Sample& s = data[spec.images[b]];
        const auto [oy, ox] = spec.offsets[b];
        for (int y = 0; y < 16; ++y) {
            for (int x = 0; x < 16; ++x) {
                EXPECT_EQ(batch.targets.binary.at(b, 0, y, x), s.binary.at(oy + y, ox + x));
                for (int k = 0; k < 3; ++k) {
                    EXPECT_EQ(batch.targets.multilabel.at(b, k, y, x),
                              s.thick.per_class[k].at(oy + y, ox + x));
                }
                EXPECT_EQ(batch.images.at(b, 1, y, x), s.image.at(oy + y, ox + x, 1) / 255.0 - 0.5);
            }
        }
    }
}

TEST(Batch, Errors) {
    const auto data = tiny_dataset(1, 16);
    std::mt19937_64 rng(1);
    EXPECT_THROW(sample_batch_spec(data, 1, 32, rng), std::invalid_argument);
    EXPECT_THROW(sample_batch_spec({}, 1, 16, rng), std::invalid_argument);
    EXPECT_THROW(assemble_batch(data, BatchSpec{{0}, {{1, 0}}, 16}, 2), std::invalid_argument);
    EXPECT_THROW(assemble_batch(data, BatchSpec{{0}, {{0, 0}}, 16}, 3), std::invalid_argument);
}

TEST(BatchSpecJson, RoundTrip) {
    const BatchSpec spec{{3, 1}, {{0, 4}, {2, 2}}, 32};
    EXPECT_EQ(batch_spec_from_json(batch_spec_json(spec)), spec);
    EXPECT_THROW(batch_spec_from_json("{\"crop\":1}"), std::runtime_error);
}

TEST(TrainConfigValidate, Rejects) {
    TrainConfig c = tiny_config();
    EXPECT_NO_THROW(c.validate(8));
    c.crop = 20;
    EXPECT_THROW(c.validate(8), std::invalid_argument);
    c = tiny_config();
    c.momentum = 1;
    EXPECT_THROW(c.validate(8), std::invalid_argument);
    c = tiny_config();
    c.pretrain_iters = 5;
    EXPECT_THROW(c.validate(8), std::invalid_argument);
}

TEST(Train, ZeroIterationsLeavesModelUnchanged) {
    ModelGraph model = build_variant({Variant::DDS}, tiny_backbone(), 2, 1);
    const ModelGraph before = model;
    TrainConfig c = tiny_config();
    c.max_iter = 0;
    const TrainResult r = train(model, tiny_dataset(), c);
    EXPECT_EQ(r.status, TrainStatus::Completed);
    EXPECT_TRUE(r.trace.empty());
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        EXPECT_EQ(model.params[i].value, before.params[i].value);
    }
}

TEST(Train, TraceIsDeterministic) {
    const auto data = tiny_dataset();
    ModelGraph a = build_variant({Variant::DDS}, tiny_backbone(), 2, 1);
    ModelGraph b = build_variant({Variant::DDS}, tiny_backbone(), 2, 1);
    const TrainResult ra = train(a, data, tiny_config());
    const TrainResult rb = train(b, data, tiny_config());
    ASSERT_EQ(ra.trace.size(), 5u);
    for (std::size_t i = 0; i < ra.trace.size(); ++i) {
        EXPECT_EQ(ra.trace[i].total, rb.trace[i].total);
        EXPECT_EQ(ra.trace[i].terms, rb.trace[i].terms);
    }
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        EXPECT_EQ(a.params[i].value, b.params[i].value);
    }
}

TEST(Train, TraceRowsAndFinalReplay) {
    const auto data = tiny_dataset();
    ModelGraph model = build_variant({Variant::DDS}, tiny_backbone(), 2, 1);
    const TrainConfig c = tiny_config();
    const TrainResult r = train(model, data, c);
    ASSERT_EQ(r.status, TrainStatus::Completed);
    for (int i = 0; i < c.max_iter; ++i) {
        EXPECT_EQ(r.trace[i].iter, i);
        EXPECT_DOUBLE_EQ(r.trace[i].lr, scheduled_lr(c, i));
        Real sum = 0;
        for (const auto& t : r.trace[i].terms) {
            ASSERT_TRUE(t);
            sum += *t;
        }
        EXPECT_NEAR(sum, r.trace[i].total, 1e-9 * std::abs(sum));
    }
    const TraceRow& last = r.trace.back();
    EXPECT_EQ(last.iter, c.max_iter);
    EXPECT_EQ(last.lr, 0);
    ASSERT_TRUE(r.last_batch);
    const TraceRow replay = evaluate_batch(model, assemble_batch(data, *r.last_batch, 2), c.loss_mode);
    EXPECT_NEAR(replay.total, last.total, 1e-5 * std::abs(last.total));
}

TEST(Train, CasenetTraceHasEmptySideTerms) {
    ModelGraph model = build_variant({Variant::CASENet}, tiny_backbone(), 2, 1);
    TrainConfig c = tiny_config();
    c.max_iter = 1;
    const TrainResult r = train(model, tiny_dataset(), c);
    for (int m = 0; m < 4; ++m) EXPECT_FALSE(r.trace[0].terms[m]);
    EXPECT_TRUE(r.trace[0].terms[4]);
    EXPECT_TRUE(r.trace[0].terms[5]);
}

TEST(Train, HugeLearningRateDiverges) {
    ModelGraph model = build_variant({Variant::DDS}, tiny_backbone(), 2, 1);
    TrainConfig c = tiny_config();
    c.base_lr = 1e3;
    c.max_iter = 30;
    const TrainResult r = train(model, tiny_dataset(), c);
    EXPECT_EQ(r.status, TrainStatus::Diverged);
    EXPECT_FALSE(r.message.empty());
    EXPECT_TRUE(r.last_batch);
}

TEST(Train, ProgressSeesEveryRow) {
    ModelGraph model = build_variant({Variant::Basic}, tiny_backbone(), 2, 1);
    std::vector<int> seen;
    const TrainResult r = train(model, tiny_dataset(), tiny_config(),
                                [&](const TraceRow& row) { seen.push_back(row.iter); });
    EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3, 4}));
    EXPECT_EQ(r.trace.size(), seen.size());
}

TEST(TraceCsv, RoundTripIsExact) {
    ModelGraph model = build_variant({Variant::CASENet}, tiny_backbone(), 2, 1);
    const TrainResult r = train(model, tiny_dataset(), tiny_config());
    const auto path = (std::filesystem::temp_directory_path() / "dds_trace_test.csv").string();
    write_trace_csv(path, r.trace);
    const auto back = read_trace_csv(path);
    ASSERT_EQ(back.size(), r.trace.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].iter, r.trace[i].iter);
        EXPECT_EQ(back[i].lr, r.trace[i].lr);
        EXPECT_EQ(back[i].terms, r.trace[i].terms);
        EXPECT_EQ(back[i].total, r.trace[i].total);
    }
    std::filesystem::remove(path);
    EXPECT_THROW(read_trace_csv(path), IoError);
}
