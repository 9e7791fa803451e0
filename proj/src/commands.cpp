#include "dds/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "dds/checkpoint.hpp"
#include "dds/dataset.hpp"
#include "dds/ops.hpp"

namespace dds {

namespace fs = std::filesystem;

namespace {

SceneSpec scene_of(const RunConfig& c) {
    SceneSpec s = c.scene;
    s.seed = c.seed;
    return s;
}

TrainConfig train_of(const RunConfig& c) {
    TrainConfig t = c.train;
    t.seed = c.seed;
    return t;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

void close_csv(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100 * v);
    return buf;
}

std::vector<EdgeGroundTruth> ground_truths(const std::vector<Sample>& data) {
    std::vector<EdgeGroundTruth> gts;
    for (const auto& s : data) gts.push_back(s.thick);
    return gts;
}

struct ModeResult {
    EvalMode mode;
    EvalResult classes;
    ClassResult agnostic;
};

std::vector<ModeResult> score(const std::vector<std::vector<ProbMap>>& probs,
                              const std::vector<EdgeGroundTruth>& gts, const RunConfig& c) {
    std::vector<EvalMode> modes;
    if (c.mode) {
        modes.push_back(*c.mode);
    } else {
        modes = {EvalMode::Thin, EvalMode::Raw};
    }
    std::vector<ModeResult> out;
    for (EvalMode m : modes) {
        EvalConfig ec = c.eval;
        ec.mode = m;
        out.push_back({m, evaluate_classes(probs, gts, ec, c.threads),
                       class_agnostic_eval(probs, gts, ec, c.threads)});
    }
    return out;
}

std::vector<std::vector<ProbMap>> predict_all(const ModelGraph& model,
                                              const std::vector<Sample>& data) {
    std::vector<std::vector<ProbMap>> probs;
    probs.reserve(data.size());
    for (const auto& s : data) probs.push_back(predict(model, s.image));
    return probs;
}

std::vector<std::vector<ProbMap>> read_predictions(const RunConfig& c,
                                                   const std::vector<Sample>& data) {
    std::vector<std::vector<ProbMap>> probs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (int k = 1; k <= c.classes(); ++k) {
            char name[64];
            std::snprintf(name, sizeof name, "pred_%04zu_c%d.pgm", i, k);
            ProbMap p = read_prob_pgm((fs::path(c.pred_dir) / name).string());
            if (p.height != data[i].image.height || p.width != data[i].image.width) {
                throw IoError(std::string(name) + " does not match its image size");
            }
            probs[i].push_back(std::move(p));
        }
    }
    return probs;
}

}  // namespace

std::vector<Sample> load_or_generate(const RunConfig& c) {
    if (!c.data_dir.empty()) return load_dataset(c.data_dir, c.classes());
    return make_dataset(generate(scene_of(c), static_cast<std::size_t>(c.num_images)),
                        c.classes());
}

ModelGraph build_from_config(const RunConfig& c) {
    return build_variant(c.variant, c.backbone, c.classes(), c.seed);
}

int cmd_gen(const RunConfig& c, std::ostream& log) {
    c.validate();
    const auto scenes = generate(scene_of(c), static_cast<std::size_t>(c.num_images));
    write_dataset(c.out, scenes, c.classes());
    log << "wrote " << scenes.size() << " scenes (" << c.scene.height << "x" << c.scene.width
        << ", K=" << c.classes() << ") to " << c.out << "\n";
    return kExitOk;
}

int cmd_train(const RunConfig& c, std::ostream& log) {
    c.validate();
    const auto data = load_or_generate(c);
    ModelGraph model = build_from_config(c);
    const TrainConfig tc = train_of(c);
    ensure_dir(c.out);
    log << "training " << c.variant.label() << " (" << model.parameter_count()
        << " parameters) for " << tc.max_iter << " iterations, loss "
        << to_string(tc.loss_mode) << "\n";
    const int every = std::max(1, tc.max_iter / 10);
    const TrainResult result = train(model, data, tc, [&](const TraceRow& r) {
        if (r.iter % every == 0 || r.iter == tc.max_iter) {
            log << "  iter " << r.iter << "  lr " << r.lr << "  total " << r.total << "\n";
        }
    });
    write_trace_csv(c.out + "/trace.csv", result.trace);

    Checkpoint ckpt;
    ckpt.model = std::move(model);
    ckpt.iteration = result.status == TrainStatus::Completed ? tc.max_iter
                                                             : static_cast<int>(result.trace.size()) - 1;
    std::string extra = "{\"status\":\"";
    extra += result.status == TrainStatus::Completed ? "completed" : "diverged";
    extra += "\",\"loss_mode\":\"" + to_string(tc.loss_mode) + "\"";
    if (result.last_batch) extra += ",\"last_batch\":" + batch_spec_json(*result.last_batch);
    extra += "}";
    ckpt.extra_json = extra;
    save_checkpoint(ckpt, c.checkpoint_path());

    if (result.status == TrainStatus::Diverged) {
        log << result.message << "\n";
        return kExitDiverged;
    }
    if (!result.trace.empty()) {
        log << "final total loss " << result.trace.back().total << " (initial "
            << result.trace.front().total << ")\n";
    }
    log << "wrote " << c.checkpoint_path() << " and " << c.out << "/trace.csv\n";
    return kExitOk;
}

int cmd_eval(const RunConfig& c, std::ostream& log) {
    c.validate();
    const auto data = load_or_generate(c);
    std::vector<std::vector<ProbMap>> probs;
    if (!c.pred_dir.empty()) {
        probs = read_predictions(c, data);
    } else {
        const Checkpoint ckpt = [&] {
            try {
                return load_checkpoint(c.checkpoint_path());
            } catch (const IoError&) {
                throw;
            } catch (const std::runtime_error& e) {
                throw IoError(e.what());
            }
        }();
        if (ckpt.model.classes != c.classes()) {
            throw ConfigError("checkpoint has " + std::to_string(ckpt.model.classes) +
                              " classes, config has " + std::to_string(c.classes()));
        }
        probs = predict_all(ckpt.model, data);
    }
    const auto results = score(probs, ground_truths(data), c);

    ensure_dir(c.out);
    const std::string path = c.out + "/results.csv";
    auto out = open_csv(path);
    out << "protocol,mode,class,ods_f,ods_threshold,excluded\n";
    for (const auto& r : results) {
        const std::string mode = to_string(r.mode);
        for (std::size_t k = 0; k < r.classes.classes.size(); ++k) {
            const auto& cr = r.classes.classes[k];
            out << "class," << mode << ',' << k + 1 << ',' << fmt(cr.ods_f) << ','
                << fmt(cr.ods_threshold) << ',' << (cr.excluded ? 1 : 0) << '\n';
        }
        out << "class," << mode << ",mean," << fmt(r.classes.mean_ods_f) << ",,0\n";
        out << "agnostic," << mode << ",all," << fmt(r.agnostic.ods_f) << ','
            << fmt(r.agnostic.ods_threshold) << ',' << (r.agnostic.excluded ? 1 : 0) << '\n';
        log << mode << ": mean ODS " << pct(r.classes.mean_ods_f) << "% over "
            << r.classes.included_classes << " classes, class-agnostic ODS "
            << pct(r.agnostic.ods_f) << "%\n";
    }
    close_csv(out, path);
    log << "wrote " << path << "\n";
    return kExitOk;
}

namespace {

Tensor random_tensor(Shape s, std::mt19937_64& rng, Real lo, Real hi) {
    Tensor t(s);
    std::uniform_real_distribution<Real> d(lo, hi);
    for (auto& v : t.data()) v = d(rng);
    return t;
}

Tensor random_binary(Shape s, std::mt19937_64& rng, double p) {
    Tensor t(s);
    std::bernoulli_distribution d(p);
    for (auto& v : t.data()) v = d(rng) ? 1 : 0;
    return t;
}

// Moves every parameter off its initial value so no head or fusion weight is
// exactly zero and every bias is active.
void perturb(ModelGraph& model, std::mt19937_64& rng) {
    std::normal_distribution<Real> small(0.0, 0.1);
    std::normal_distribution<Real> head(0.0, 0.5);
    for (auto& p : model.params) {
        const bool is_bias = p.name.ends_with(".bias");
        const bool is_head = p.name.rfind("head", 0) == 0 || p.name.rfind("fusion", 0) == 0;
        for (auto& v : p.value.data()) {
            v += is_head ? head(rng) : small(rng);
            if (is_bias) v = small(rng);
        }
    }
}

}  // namespace

std::vector<GradCheckEntry> run_gradchecks(const RunConfig& c) {
    std::vector<GradCheckEntry> entries;
    std::mt19937_64 rng(c.seed);
    GradCheckOptions opts;

    // Full network, both loss modes.
    const int size = c.gradcheck_size;
    const int K = c.gradcheck_classes;
    BackboneConfig bb = c.backbone;
    bb.stage_channels = c.gradcheck_channels;
    ModelGraph model = build_variant(VariantId{}, bb, K, c.seed);
    perturb(model, rng);
    SceneSpec spec;
    spec.height = spec.width = size;
    spec.classes = std::min(K, kMaxSynthClasses);
    spec.min_shapes = 2;
    spec.max_shapes = 3;
    spec.seed = c.seed;
    const Sample sample = make_dataset(generate(spec, 1), K).front();
    BatchSpec bs;
    bs.images = {0};
    bs.offsets = {{0, 0}};
    bs.crop = size;
    const Batch batch = assemble_batch({sample}, bs, K);

    std::vector<Tensor> params;
    for (const auto& p : model.params) params.push_back(p.value);
    for (LossMode mode : {LossMode::Reweighted, LossMode::Unweighted}) {
        auto builder = [&](Tape& tape, std::span<const Var> vars) {
            BoundModel bound{std::vector<Var>(vars.begin(), vars.end())};
            const SideOutputs out = forward(model, bound, tape.constant(batch.images));
            return total_loss(Variant::DDS, out, batch.targets, mode).total;
        };
        entries.push_back({"dds_total_" + to_string(mode), grad_check(builder, params, opts), 1e-4});
    }

    // Individual losses on random activations.
    const Shape one{2, 1, 8, 8};
    const Shape many{2, 3, 8, 8};
    const Tensor x1 = random_tensor(one, rng, -3, 3);
    const Tensor y1 = random_binary(one, rng, 0.2);
    const Tensor xk = random_tensor(many, rng, -3, 3);
    const Tensor yk = random_binary(many, rng, 0.2);
    // Fused map: grouped 1x1 fusion over a shared concatenation of four side
    // maps and three class maps.
    const Tensor sides = random_tensor(Shape{2, 4, 8, 8}, rng, -3, 3);
    ConvSpec fuse;
    fuse.in_channels = 15;
    fuse.out_channels = 3;
    fuse.groups = 3;
    const Tensor fw = random_tensor(fuse.weight_shape(), rng, -1, 1);
    const Tensor fb = random_tensor(Shape{1, 3, 1, 1}, rng, -1, 1);

    for (LossMode mode : {LossMode::Reweighted, LossMode::Unweighted}) {
        const std::string m = to_string(mode);
        entries.push_back({"side_binary_" + m,
                           grad_check([&](Tape&, std::span<const Var> v) {
                               return side_binary_loss(v[0], y1, mode);
                           }, {x1}, opts),
                           1e-6});
        entries.push_back({"side5_multilabel_" + m,
                           grad_check([&](Tape&, std::span<const Var> v) {
                               return multilabel_loss(v[0], yk, mode);
                           }, {xk}, opts),
                           1e-6});
        entries.push_back(
            {"fused_multilabel_" + m,
             grad_check([&](Tape&, std::span<const Var> v) {
                 std::vector<Var> s;
                 for (int i = 0; i < 4; ++i) s.push_back(ops::slice_channels(v[0], i, 1));
                 Var stacked = shared_concat(s, v[1]);
                 return multilabel_loss(ops::conv2d(stacked, v[2], v[3], fuse), yk, mode);
             }, {sides, xk, fw, fb}, opts),
             1e-6});
    }
    Tensor labels(Shape{2, 1, 8, 8});
    {
        std::uniform_int_distribution<int> d(0, 3);
        for (auto& v : labels.data()) v = d(rng);
    }
    entries.push_back({"softmax",
                       grad_check([&](Tape&, std::span<const Var> v) {
                           return softmax_loss(v[0], labels);
                       }, {random_tensor(Shape{2, 4, 8, 8}, rng, -3, 3)}, opts),
                       1e-6});
    return entries;
}

int cmd_gradcheck(const RunConfig& c, std::ostream& log) {
    c.validate();
    const auto entries = run_gradchecks(c);
    ensure_dir(c.out);
    const std::string path = c.out + "/gradcheck.csv";
    auto out = open_csv(path);
    out << "check,max_rel_error,compared,skipped,tolerance,passed\n";
    bool ok = true;
    for (const auto& e : entries) {
        out << e.name << ',' << fmt(e.report.max_rel_error) << ',' << e.report.compared << ','
            << e.report.skipped << ',' << fmt(e.tolerance) << ',' << (e.passed() ? 1 : 0) << '\n';
        char line[160];
        std::snprintf(line, sizeof line, "%-28s max rel error %.3e  (%zu compared, %zu skipped)  %s\n",
                      e.name.c_str(), e.report.max_rel_error, e.report.compared,
                      e.report.skipped, e.passed() ? "ok" : "FAILED");
        log << line;
        ok = ok && e.passed();
    }
    close_csv(out, path);
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_ablate(const RunConfig& c, std::ostream& log) {
    c.validate();
    const auto data = load_or_generate(c);
    const auto gts = ground_truths(data);
    ensure_dir(c.out);
    const std::string path = c.out + "/ablation.csv";
    auto out = open_csv(path);
    out << "variant,loss_mode,mean_ods_thin,mean_ods_raw,diverged_flag\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %-11s %9s %9s %s\n", "variant", "loss", "thin(%)",
                  "raw(%)", "diverged");
    log << line;
    for (Variant v : c.ablate_variants) {
        std::vector<LossMode> modes = c.ablate_losses;
        // The softmax variant has a single loss of its own.
        if (v == Variant::Softmax) modes = {LossMode::Reweighted};
        for (LossMode mode : modes) {
            RunConfig rc = c;
            rc.variant = VariantId{};
            rc.variant.kind = v;
            if (rc.variant.has_converters()) {
                rc.variant.converter_units = c.variant.converter_units;
                rc.variant.converter_residual = c.variant.converter_residual;
            }
            rc.train.loss_mode = mode;
            ModelGraph model = build_from_config(rc);
            const TrainResult r = train(model, data, train_of(rc));
            const bool diverged = r.status == TrainStatus::Diverged;
            std::string thin, raw;
            if (!diverged) {
                const auto probs = predict_all(model, data);
                EvalConfig ec = c.eval;
                ec.mode = EvalMode::Thin;
                thin = fmt(evaluate_classes(probs, gts, ec, c.threads).mean_ods_f);
                ec.mode = EvalMode::Raw;
                raw = fmt(evaluate_classes(probs, gts, ec, c.threads).mean_ods_f);
            }
            const std::string loss = v == Variant::Softmax ? "softmax" : to_string(mode);
            out << rc.variant.label() << ',' << loss << ',' << thin << ',' << raw << ','
                << (diverged ? 1 : 0) << '\n';
            std::snprintf(line, sizeof line, "%-12s %-11s %9s %9s %s\n",
                          rc.variant.label().c_str(), loss.c_str(),
                          diverged ? "-" : pct(std::stod(thin)).c_str(),
                          diverged ? "-" : pct(std::stod(raw)).c_str(), diverged ? "yes" : "no");
            log << line << std::flush;
        }
    }
    close_csv(out, path);
    log << "wrote " << path << "\n";
    return kExitOk;
}

int run_command(const std::string& name, const RunConfig& config, std::ostream& log,
                std::ostream& err) {
    try {
        if (name == "gen") return cmd_gen(config, log);
        if (name == "train") return cmd_train(config, log);
        if (name == "eval") return cmd_eval(config, log);
        if (name == "gradcheck") return cmd_gradcheck(config, log);
        if (name == "ablate") return cmd_ablate(config, log);
        err << "error: unknown command '" << name << "'\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    }
}

}  // namespace dds
