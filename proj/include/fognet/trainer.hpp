#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "fognet/model.hpp"

namespace fognet {

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    double peak_lr = 5e-5;
    std::size_t warmup_epochs = 5;
    double min_lr = 0.0;
    double weight_decay = 0.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double lambda = 0.4;
    double beta = 0.1;
    double grad_clip = 0.0; // 0 disables clipping
    std::uint64_t seed = 42;
    Ablation ablation;

    // model geometry
    std::size_t embed_dim = 32;
    int heads = 1;
    EncoderKind encoder = EncoderKind::Learnable;

    void validate() const;
};

/// Linear warm-up from zero over the warm-up span, then cosine annealing
/// from peak_lr down toward min_lr over the remaining steps. Continuous at
/// the junction (both branches evaluate to peak_lr there).
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

struct OptimizerState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t step = 0;

    static OptimizerState init(const std::vector<std::pair<std::string, Tensor>>& params);
};

/// Bias-corrected adaptive update plus decoupled decay: parameters are first
/// scaled by (1 - lr * weight_decay), independent of the gradient term.
/// Parameters with no recorded gradient are treated as zero-gradient.
void adamw_step(const std::vector<std::pair<std::string, Tensor>>& params, OptimizerState& state,
                double lr, const TrainConfig& cfg);

/// adamw_step over the model's trainable set, then the logit-scale clamp.
void apply_update(ModelParams& params, OptimizerState& state, double lr, const TrainConfig& cfg);

struct EpochLog {
    std::size_t epoch = 0;
    double lr = 0.0;
    double l_all = 0.0;
    double l_f = 0.0;
    double l_c = 0.0;
    double l_temp = 0.0;
    double train_top1 = 0.0;
    double test_top1 = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochLog> log;
    double best_test_top1 = 0.0;
    double final_test_top1 = 0.0;
    std::filesystem::path checkpoint_final;
    std::filesystem::path checkpoint_best;
};

/// Full training run over in-memory samples. Writes log.csv,
/// checkpoint_final/ and checkpoint_best/ under out_dir; identical seed and
/// config replay bit-identical trajectories.
TrainResult train(const std::vector<PairedSample>& samples, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

/// Convenience entry: loads every manifest sample (frames only) and trains.
TrainResult train(const std::filesystem::path& manifest_path, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

/// Top-1 accuracy of foggy-only inference over one split.
double evaluate_top1(const std::vector<PairedSample>& samples, Split split,
                     const ModelParams& params, const ForwardOptions& opts);

void write_train_log(const std::filesystem::path& path, const std::vector<EpochLog>& log);

} // namespace fognet
