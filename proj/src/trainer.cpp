#include "fognet/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "fognet/checkpoint.hpp"
#include "fognet/errors.hpp"
#include "fognet/losses.hpp"
#include "fognet/rng.hpp"

namespace fognet {

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("train: epochs must be >= 1");
    if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
    if (warmup_epochs >= epochs) {
        throw ConfigError("train: warmup_epochs " + std::to_string(warmup_epochs) +
                          " must be < epochs " + std::to_string(epochs));
    }
    if (!(min_lr >= 0.0)) throw ConfigError("train: min_lr must be >= 0");
    if (!(peak_lr >= min_lr)) throw ConfigError("train: peak_lr must be >= min_lr");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw ConfigError("train: adam betas must lie in [0,1)");
    }
    if (!(adam_eps > 0.0)) throw ConfigError("train: adam_eps must be positive");
    if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
    if (lambda < 0.0 || beta < 0.0) throw ConfigError("train: loss weights must be >= 0");
    if (grad_clip < 0.0) throw ConfigError("train: grad_clip must be >= 0");
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
    if (step >= total_steps) {
        throw ParameterError("lr_at: step " + std::to_string(step) + " out of range [0," +
                             std::to_string(total_steps) + ")");
    }
    const std::size_t warmup_steps = (total_steps * cfg.warmup_epochs) / cfg.epochs;
    if (step < warmup_steps) {
        return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
    }
    const std::size_t span = total_steps - warmup_steps;
    const double progress =
        span == 0 ? 0.0 : static_cast<double>(step - warmup_steps) / static_cast<double>(span);
    return cfg.min_lr + 0.5 * (cfg.peak_lr - cfg.min_lr) *
                            (1.0 + std::cos(3.14159265358979323846 * progress));
}

OptimizerState OptimizerState::init(const std::vector<std::pair<std::string, Tensor>>& params) {
    OptimizerState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& [name, p] : params) {
        s.m.emplace_back(p.size(), 0.0);
        s.v.emplace_back(p.size(), 0.0);
    }
    return s;
}

void adamw_step(const std::vector<std::pair<std::string, Tensor>>& params, OptimizerState& state,
                double lr, const TrainConfig& cfg) {
    if (lr < 0.0) throw ParameterError("adamw: lr must be >= 0");
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw DimensionError("adamw: state tracks " + std::to_string(state.m.size()) +
                             " tensors, got " + std::to_string(params.size()));
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
    const double decay = 1.0 - lr * cfg.weight_decay;

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor p = params[i].second;
        auto& data = p.raw();
        if (state.m[i].size() != data.size()) {
            throw DimensionError("adamw: state for '" + params[i].first + "' has " +
                                 std::to_string(state.m[i].size()) + " entries, parameter has " +
                                 std::to_string(data.size()));
        }
        const bool has_grad = p.has_grad();
        const std::vector<double>* grads = has_grad ? &p.grad() : nullptr;
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double g = has_grad ? (*grads)[j] : 0.0;
            state.m[i][j] = cfg.adam_beta1 * state.m[i][j] + (1.0 - cfg.adam_beta1) * g;
            state.v[i][j] = cfg.adam_beta2 * state.v[i][j] + (1.0 - cfg.adam_beta2) * g * g;
            const double m_hat = state.m[i][j] / bc1;
            const double v_hat = state.v[i][j] / bc2;
            data[j] = data[j] * decay - lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    }
}

void apply_update(ModelParams& params, OptimizerState& state, double lr, const TrainConfig& cfg) {
    const auto trainable = params.trainable();
    adamw_step(trainable, state, lr, cfg);
    params.clamp_logit_scale();
}

double evaluate_top1(const std::vector<PairedSample>& samples, Split split,
                     const ModelParams& params, const ForwardOptions& opts) {
    std::size_t total = 0, hits = 0;
    for (const PairedSample& s : samples) {
        if (s.split != split) continue;
        ++total;
        if (forward_infer(s.foggy, params, opts).predicted == s.label) ++hits;
    }
    if (total == 0) throw ConfigError("evaluate: split has no samples");
    return static_cast<double>(hits) / static_cast<double>(total);
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void clip_gradients(const std::vector<std::pair<std::string, Tensor>>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, p] : params) {
        if (!p.has_grad()) continue;
        for (const double g : p.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double factor = max_norm / norm;
    for (const auto& [name, p] : params) {
        Tensor t = p;
        if (!t.has_grad()) continue;
        auto node = t.node();
        for (double& g : node->grad) g *= factor;
    }
}

} // namespace

void write_train_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("train: cannot open " + path.string() + " for writing");
    os << "epoch,lr,l_all,l_f,l_c,l_temp,train_top1,test_top1\n";
    for (const EpochLog& row : log) {
        os << row.epoch << "," << fmt_double(row.lr) << "," << fmt_double(row.l_all) << ","
           << fmt_double(row.l_f) << "," << fmt_double(row.l_c) << "," << fmt_double(row.l_temp)
           << "," << fmt_double(row.train_top1) << "," << fmt_double(row.test_top1) << "\n";
    }
    if (!os) throw IoError("train: short write to " + path.string());
}

TrainResult train(const std::vector<PairedSample>& samples, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir, std::ostream* progress) {
    cfg.validate();

    std::vector<std::size_t> train_indices;
    std::set<std::size_t> train_labels;
    bool has_test = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].split == Split::Train) {
            train_indices.push_back(i);
            train_labels.insert(samples[i].label);
        } else {
            has_test = true;
        }
    }
    if (train_indices.empty()) throw ConfigError("train: empty train split");
    if (train_labels.size() < 2) throw ConfigError("train: need at least 2 classes in the train split");
    if (!has_test) throw ConfigError("train: empty test split");

    std::size_t num_classes = 0;
    for (const PairedSample& s : samples) num_classes = std::max(num_classes, s.label + 1);
    const Clip& probe = samples[train_indices[0]].foggy;
    const std::size_t input_pixels = probe.height * probe.width;

    ModelConfig mc;
    mc.embed_dim = cfg.embed_dim;
    mc.num_classes = num_classes;
    mc.input_pixels = input_pixels;
    mc.heads = cfg.heads;
    mc.encoder = cfg.encoder;
    mc.seed = cfg.seed;
    ModelParams params = ModelParams::init(mc);

    OptimizerState state = OptimizerState::init(params.trainable());

    const double effective_beta = cfg.ablation.csa ? 0.0 : cfg.beta;
    const ForwardOptions train_opts = cfg.ablation.forward_options(effective_beta != 0.0);
    const ForwardOptions infer_opts = cfg.ablation.forward_options(false);

    const std::size_t n_train = train_indices.size();
    const std::size_t steps_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = steps_per_epoch * cfg.epochs;

    std::filesystem::create_directories(out_dir);
    TrainResult result;
    result.best_test_top1 = -1.0;
    result.checkpoint_final = out_dir / "checkpoint_final";
    result.checkpoint_best = out_dir / "checkpoint_best";

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = train_indices;
        Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", {epoch}));
        shuffle_rng.shuffle(order);

        EpochLog row;
        row.epoch = epoch;
        row.lr = lr_at(step, total_steps, cfg);
        std::size_t train_hits = 0;

        for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
            const std::size_t last = std::min(first + cfg.batch_size, order.size());
            const std::size_t bsz = last - first;
            const double lr = lr_at(step, total_steps, cfg);

            for (const auto& [name, p] : params.trainable()) Tensor(p).zero_grad();

            std::vector<Tensor> logits_f_rows, logits_c_rows, consistency;
            std::vector<std::size_t> labels;
            logits_f_rows.reserve(bsz);
            logits_c_rows.reserve(bsz);
            labels.reserve(bsz);
            for (std::size_t i = first; i < last; ++i) {
                const PairedSample& s = samples[order[i]];
                TrainForward fwd = forward_train(s, params, train_opts);
                if (classify(fwd.logits_foggy) == s.label) ++train_hits;
                logits_f_rows.push_back(fwd.logits_foggy);
                logits_c_rows.push_back(fwd.logits_clean);
                if (train_opts.want_consistency) consistency.push_back(fwd.consistency);
                labels.push_back(s.label);
            }

            const LossBreakdown lb =
                total_loss(vstack(logits_f_rows), vstack(logits_c_rows), consistency, labels,
                           cfg.lambda, effective_beta);
            lb.l_all.backward();
            if (cfg.grad_clip > 0.0) clip_gradients(params.trainable(), cfg.grad_clip);
            apply_update(params, state, lr, cfg);
            ++step;

            const double w = static_cast<double>(bsz);
            row.l_all += lb.l_all.value() * w;
            row.l_f += lb.l_f.value() * w;
            row.l_c += lb.l_c.value() * w;
            row.l_temp += lb.l_temp.value() * w;
        }

        const double inv_n = 1.0 / static_cast<double>(n_train);
        row.l_all *= inv_n;
        row.l_f *= inv_n;
        row.l_c *= inv_n;
        row.l_temp *= inv_n;
        row.train_top1 = static_cast<double>(train_hits) * inv_n;
        row.test_top1 = evaluate_top1(samples, Split::Test, params, infer_opts);

        if (row.test_top1 > result.best_test_top1) {
            result.best_test_top1 = row.test_top1;
            save_checkpoint(result.checkpoint_best, params, cfg.ablation);
        }
        result.log.push_back(row);
        if (progress) {
            (*progress) << "epoch " << epoch << " lr " << row.lr << " l_all " << row.l_all
                        << " train_top1 " << row.train_top1 << " test_top1 " << row.test_top1
                        << "\n";
        }
    }

    result.final_test_top1 = result.log.back().test_top1;
    result.params = params;
    save_checkpoint(result.checkpoint_final, params, cfg.ablation);
    write_train_log(out_dir / "log.csv", result.log);
    return result;
}

TrainResult train(const std::filesystem::path& manifest_path, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir, std::ostream* progress) {
    const std::vector<ManifestEntry> entries = read_manifest(manifest_path);
    const std::filesystem::path dir = manifest_path.parent_path();
    std::vector<PairedSample> samples;
    samples.reserve(entries.size());
    for (const ManifestEntry& e : entries) {
        samples.push_back(load_paired_sample(dir, e, /*with_depth=*/false));
    }
    return train(samples, cfg, out_dir, progress);
}

} // namespace fognet
