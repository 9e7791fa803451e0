#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dds/dataset.hpp"
#include "dds/losses.hpp"
#include "dds/network.hpp"

namespace dds {

struct TrainConfig {
    double base_lr = 1e-3;
    double power = 0.9;
    int max_iter = 1000;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    int batch_size = 4;
    int crop = 64;
    std::uint64_t seed = 1;
    LossMode loss_mode = LossMode::Reweighted;
    /// Optional fixed-LR phase before the poly schedule starts.
    int pretrain_iters = 0;
    double pretrain_lr = 1e-8;
    /// Abort once the moving average of the total loss exceeds this multiple
    /// of the first loss.
    double divergence_factor = 10.0;
    double loss_average_decay = 0.9;

    /// Throws std::invalid_argument; `stride` is the backbone stride product.
    void validate(int stride) const;
};

/// base * (1 - iter/max_iter)^power. Throws std::invalid_argument unless
/// 0 <= iter <= max_iter.
double poly_lr(double base, int iter, int max_iter, double power);

/// Learning rate of step `iter` including the pretrain phase.
double scheduled_lr(const TrainConfig& config, int iter);

struct OptimizerState {
    std::vector<Tensor> velocity;
};

OptimizerState make_optimizer_state(const ModelGraph& model);

class NonFiniteGradient : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Caffe SGD: v <- momentum*v - lr*(g + wd*w); w <- w + v. Throws
/// NonFiniteGradient naming the first parameter whose gradient is not finite,
/// before anything is modified.
void sgd_step(std::vector<Parameter>& params, const std::vector<Tensor>& grads,
              OptimizerState& state, double lr, double momentum, double weight_decay);

/// Image indices and top-left crop corners of one batch.
struct BatchSpec {
    std::vector<std::size_t> images;
    std::vector<std::pair<int, int>> offsets;
    int crop = 0;

    bool operator==(const BatchSpec&) const = default;
};

struct Batch {
    Tensor images;
    Targets targets;
    BatchSpec spec;
};

/// Uniform image choice with replacement and a uniform crop corner per image.
/// Throws std::invalid_argument when an image is smaller than `crop`.
BatchSpec sample_batch_spec(const std::vector<Sample>& dataset, int batch_size, int crop,
                            std::mt19937_64& rng);
Batch assemble_batch(const std::vector<Sample>& dataset, const BatchSpec& spec, int K);
Batch sample_batch(const std::vector<Sample>& dataset, int batch_size, int crop, int K,
                   std::mt19937_64& rng);

struct TraceRow {
    int iter = 0;
    double lr = 0;
    std::array<std::optional<Real>, 6> terms;
    Real total = 0;
};

enum class TrainStatus { Completed, Diverged };

struct TrainResult {
    TrainStatus status = TrainStatus::Completed;
    /// One row per step (losses before the update), then a final row at
    /// iter = max_iter with lr 0 that scores the final parameters on the last
    /// batch.
    std::vector<TraceRow> trace;
    std::optional<BatchSpec> last_batch;
    std::string message;
};

using TrainProgress = std::function<void(const TraceRow&)>;

/// Trains `model` in place. Data order and crops come from config.seed.
TrainResult train(ModelGraph& model, const std::vector<Sample>& dataset,
                  const TrainConfig& config, const TrainProgress& progress = {});

/// Loss terms of the current parameters on a batch, without gradients.
TraceRow evaluate_batch(const ModelGraph& model, const Batch& batch, LossMode mode);

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);
std::vector<TraceRow> read_trace_csv(const std::string& path);

std::string batch_spec_json(const BatchSpec& spec);
BatchSpec batch_spec_from_json(const std::string& text);

}  // namespace dds
