#include "dds/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dds {

void TrainConfig::validate(int stride) const {
    if (!(base_lr >= 0)) throw std::invalid_argument("base_lr must be >= 0");
    if (!(power >= 0)) throw std::invalid_argument("power must be >= 0");
    if (max_iter < 0) throw std::invalid_argument("max_iter must be >= 0");
    if (!(momentum >= 0 && momentum < 1)) throw std::invalid_argument("momentum must lie in [0, 1)");
    if (!(weight_decay >= 0)) throw std::invalid_argument("weight_decay must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (crop < 1) throw std::invalid_argument("crop must be >= 1");
    if (crop % stride != 0) {
        throw std::invalid_argument("crop " + std::to_string(crop) +
                                    " is not divisible by the backbone stride " +
                                    std::to_string(stride));
    }
    if (pretrain_iters < 0 || pretrain_iters > max_iter) {
        throw std::invalid_argument("pretrain_iters must lie in [0, max_iter]");
    }
    if (!(pretrain_lr >= 0)) throw std::invalid_argument("pretrain_lr must be >= 0");
    if (!(divergence_factor > 1)) throw std::invalid_argument("divergence_factor must be > 1");
    if (!(loss_average_decay >= 0 && loss_average_decay < 1)) {
        throw std::invalid_argument("loss_average_decay must lie in [0, 1)");
    }
}

double poly_lr(double base, int iter, int max_iter, double power) {
    if (max_iter < 1) throw std::invalid_argument("poly_lr: max_iter must be >= 1");
    if (iter < 0 || iter > max_iter) {
        throw std::invalid_argument("poly_lr: iter " + std::to_string(iter) + " outside [0, " +
                                    std::to_string(max_iter) + "]");
    }
    return base * std::pow(1.0 - static_cast<double>(iter) / max_iter, power);
}

double scheduled_lr(const TrainConfig& config, int iter) {
    if (iter < config.pretrain_iters) return config.pretrain_lr;
    return poly_lr(config.base_lr, iter - config.pretrain_iters,
                   config.max_iter - config.pretrain_iters, config.power);
}

OptimizerState make_optimizer_state(const ModelGraph& model) {
    OptimizerState s;
    for (const auto& p : model.params) s.velocity.emplace_back(p.value.shape());
    return s;
}

void sgd_step(std::vector<Parameter>& params, const std::vector<Tensor>& grads,
              OptimizerState& state, double lr, double momentum, double weight_decay) {
    if (grads.size() != params.size() || state.velocity.size() != params.size()) {
        throw ShapeError("sgd_step: " + std::to_string(params.size()) + " parameters, " +
                         std::to_string(grads.size()) + " gradients, " +
                         std::to_string(state.velocity.size()) + " velocities");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(grads[i].shape() == params[i].value.shape()) ||
            !(state.velocity[i].shape() == params[i].value.shape())) {
            throw ShapeError("sgd_step: shape mismatch for '" + params[i].name + "'");
        }
        for (Real g : grads[i].data()) {
            if (!std::isfinite(g)) {
                throw NonFiniteGradient("non-finite gradient in parameter '" + params[i].name + "'");
            }
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto w = params[i].value.data();
        auto v = state.velocity[i].data();
        const auto g = grads[i].data();
        for (std::size_t j = 0; j < w.size(); ++j) {
            v[j] = momentum * v[j] - lr * (g[j] + weight_decay * w[j]);
            w[j] += v[j];
        }
    }
}

BatchSpec sample_batch_spec(const std::vector<Sample>& dataset, int batch_size, int crop,
                            std::mt19937_64& rng) {
    if (dataset.empty()) throw std::invalid_argument("sample_batch: empty dataset");
    if (batch_size < 1) throw std::invalid_argument("sample_batch: batch_size must be >= 1");
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& img = dataset[i].image;
        if (img.height < crop || img.width < crop) {
            throw std::invalid_argument("image " + std::to_string(i) + " (" +
                                        std::to_string(img.height) + "x" +
                                        std::to_string(img.width) + ") is smaller than crop " +
                                        std::to_string(crop));
        }
    }
    BatchSpec spec;
    spec.crop = crop;
    std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
    for (int b = 0; b < batch_size; ++b) {
        const std::size_t i = pick(rng);
        const auto& img = dataset[i].image;
        const int y = std::uniform_int_distribution<int>(0, img.height - crop)(rng);
        const int x = std::uniform_int_distribution<int>(0, img.width - crop)(rng);
        spec.images.push_back(i);
        spec.offsets.emplace_back(y, x);
    }
    return spec;
}

Batch assemble_batch(const std::vector<Sample>& dataset, const BatchSpec& spec, int K) {
    const int B = static_cast<int>(spec.images.size());
    const int c = spec.crop;
    if (B == 0 || spec.offsets.size() != spec.images.size()) {
        throw std::invalid_argument("assemble_batch: malformed batch spec");
    }
    Batch batch;
    batch.spec = spec;
    batch.images = Tensor(Shape{B, 3, c, c});
    batch.targets.binary = Tensor(Shape{B, 1, c, c});
    batch.targets.multilabel = Tensor(Shape{B, K, c, c});
    for (int b = 0; b < B; ++b) {
        if (spec.images[b] >= dataset.size()) {
            throw std::invalid_argument("assemble_batch: image index out of range");
        }
        const Sample& s = dataset[spec.images[b]];
        if (s.thick.classes() != K) {
            throw std::invalid_argument("assemble_batch: sample has " +
                                        std::to_string(s.thick.classes()) +
                                        " classes, expected " + std::to_string(K));
        }
        const auto [oy, ox] = spec.offsets[b];
        if (oy < 0 || ox < 0 || oy + c > s.image.height || ox + c > s.image.width) {
            throw std::invalid_argument("assemble_batch: crop outside image");
        }
        for (int y = 0; y < c; ++y) {
            for (int x = 0; x < c; ++x) {
                for (int ch = 0; ch < 3; ++ch) {
                    batch.images.at(b, ch, y, x) = s.image.at(oy + y, ox + x, ch) / Real{255} - Real{0.5};
                }
                batch.targets.binary.at(b, 0, y, x) = s.binary.at(oy + y, ox + x) ? 1 : 0;
                for (int k = 0; k < K; ++k) {
                    batch.targets.multilabel.at(b, k, y, x) =
                        s.thick.per_class[k].at(oy + y, ox + x) ? 1 : 0;
                }
            }
        }
    }
    return batch;
}

Batch sample_batch(const std::vector<Sample>& dataset, int batch_size, int crop, int K,
                   std::mt19937_64& rng) {
    return assemble_batch(dataset, sample_batch_spec(dataset, batch_size, crop, rng), K);
}

namespace {

TraceRow row_from(const LossTerms& terms, int iter, double lr) {
    TraceRow row;
    row.iter = iter;
    row.lr = lr;
    row.terms = terms.values();
    row.total = terms.total.value()[0];
    return row;
}

}  // namespace

TraceRow evaluate_batch(const ModelGraph& model, const Batch& batch, LossMode mode) {
    Tape tape;
    const SideOutputs out = forward(model, tape, batch.images);
    return row_from(total_loss(model.variant.kind, out, batch.targets, mode), 0, 0);
}

TrainResult train(ModelGraph& model, const std::vector<Sample>& dataset,
                  const TrainConfig& config, const TrainProgress& progress) {
    config.validate(model.backbone.stride_product());
    std::mt19937_64 rng(config.seed);
    OptimizerState state = make_optimizer_state(model);
    TrainResult result;
    std::optional<Batch> batch;
    Real initial = 0;
    Real average = 0;

    for (int iter = 0; iter < config.max_iter; ++iter) {
        batch = sample_batch(dataset, config.batch_size, config.crop, model.classes, rng);
        const double lr = scheduled_lr(config, iter);

        Tape tape;
        const BoundModel bound = bind(model, tape, true);
        const SideOutputs out = forward(model, bound, tape.constant(batch->images));
        const LossTerms terms = total_loss(model.variant.kind, out, batch->targets, config.loss_mode);
        const TraceRow row = row_from(terms, iter, lr);
        result.trace.push_back(row);
        if (progress) progress(row);

        if (iter == 0) {
            initial = row.total;
            average = row.total;
        } else {
            average = config.loss_average_decay * average +
                      (1 - config.loss_average_decay) * row.total;
        }
        if (!std::isfinite(row.total) ||
            (initial > 0 && average > config.divergence_factor * initial)) {
            result.status = TrainStatus::Diverged;
            result.message = "diverged at iteration " + std::to_string(iter) +
                              ": average loss " + std::to_string(average) +
                              " vs initial " + std::to_string(initial);
            result.last_batch = batch->spec;
            return result;
        }

        tape.backward(terms.total);
        std::vector<Tensor> grads;
        grads.reserve(model.params.size());
        for (std::size_t i = 0; i < model.params.size(); ++i) {
            const Tensor* g = tape.grad(bound.params[i]);
            grads.push_back(g ? *g : Tensor(model.params[i].value.shape()));
        }
        try {
            sgd_step(model.params, grads, state, lr, config.momentum, config.weight_decay);
        } catch (const NonFiniteGradient& e) {
            result.status = TrainStatus::Diverged;
            result.message = "iteration " + std::to_string(iter) + ": " + e.what();
            result.last_batch = batch->spec;
            return result;
        }
    }

    if (batch) {
        TraceRow last = evaluate_batch(model, *batch, config.loss_mode);
        last.iter = config.max_iter;
        last.lr = 0;
        result.trace.push_back(last);
        if (progress) progress(last);
        result.last_batch = batch->spec;
    }
    return result;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "iter,lr,side1,side2,side3,side4,side5,fused,total\n";
    for (const auto& r : trace) {
        out << r.iter << ',' << fmt(r.lr);
        for (const auto& t : r.terms) {
            out << ',';
            if (t) out << fmt(*t);
        }
        out << ',' << fmt(r.total) << '\n';
    }
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "iter,lr,side1,side2,side3,side4,side5,fused,total") {
        throw IoError("'" + path + "' is not a loss trace");
    }
    std::vector<TraceRow> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != 9) throw IoError("'" + path + "': malformed row '" + line + "'");
        TraceRow r;
        try {
            r.iter = std::stoi(cells[0]);
            r.lr = std::stod(cells[1]);
            for (int t = 0; t < 6; ++t) {
                if (!cells[2 + t].empty()) r.terms[t] = std::stod(cells[2 + t]);
            }
            r.total = std::stod(cells[8]);
        } catch (const std::logic_error&) {
            throw IoError("'" + path + "': malformed row '" + line + "'");
        }
        rows.push_back(r);
    }
    return rows;
}

std::string batch_spec_json(const BatchSpec& spec) {
    nlohmann::json j;
    j["crop"] = spec.crop;
    j["images"] = spec.images;
    j["offsets"] = spec.offsets;
    return j.dump();
}

BatchSpec batch_spec_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        BatchSpec spec;
        spec.crop = j.at("crop").get<int>();
        spec.images = j.at("images").get<std::vector<std::size_t>>();
        spec.offsets = j.at("offsets").get<std::vector<std::pair<int, int>>>();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed batch spec: ") + e.what());
    }
}

}  // namespace dds
