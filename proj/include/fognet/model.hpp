#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fognet/fogsynth.hpp"
#include "fognet/tensor.hpp"

namespace fognet {

enum class EncoderKind { Learnable, FrozenRandom };

std::string to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(const std::string& s);

struct ModelConfig {
    std::size_t embed_dim = 32;      // d
    std::size_t num_classes = 6;     // C
    std::size_t input_pixels = 1024; // flattened frame size H*W
    int heads = 1;
    EncoderKind encoder = EncoderKind::Learnable;
    std::uint64_t seed = 42;
};

/// All learnable state: per-frame linear encoder, class text-embedding
/// table, the shared cross-attention projections (used by both enhancement
/// directions), and the cosine logit scale.
struct ModelParams {
    ModelConfig config;
    Tensor enc_weight;  // [d, HW]
    Tensor enc_bias;    // [1, d]
    Tensor text_table;  // [C, d]
    Tensor wq, wk, wv;  // [d, d]
    Tensor logit_scale; // [1, 1], kept in [1, 100]

    static ModelParams init(const ModelConfig& config);

    std::vector<std::pair<std::string, Tensor>> named() const;
    std::vector<std::pair<std::string, Tensor>> trainable() const;
    void clamp_logit_scale();
};

/// Which components to run; disabling one bypasses it (selection passes the
/// streams through unchanged, enhancement returns its inputs).
struct ForwardOptions {
    bool use_selection = true;   // fog-aware selection
    bool use_enhancement = true; // mutual enhancement
    bool want_consistency = true;
};

/// Component toggles as exposed on the trainer/CLI surface (true = ablated).
struct Ablation {
    bool fas = false;
    bool me = false;
    bool csa = false;

    ForwardOptions forward_options(bool want_consistency = true) const {
        return {!fas, !me, want_consistency && !csa};
    }
    std::vector<std::string> tokens() const;
};

Ablation parse_ablation(const std::vector<std::string>& tokens);

/// Per-frame embedding: flatten each frame, apply the linear encoder, tanh.
/// Output is [T, d].
Tensor encode_frames(const Clip& clip, const ModelParams& params);

/// Parameter-free global self-attention over one token sequence:
/// softmax(X X^T / sqrt(d)) X.
Tensor attention_mix(const Tensor& tokens);

/// Joint self-attention over the concatenated clean+foggy sequence (2T
/// tokens), split back into (clean, foggy) halves.
std::pair<Tensor, Tensor> fog_aware_selection(const Tensor& v_clean, const Tensor& v_foggy);

/// Single attention pass softmax(Q K^T / sqrt(d_h)) V with the model's head
/// count; inputs are already-projected Q, K, V.
Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v, int heads);

/// Bidirectional cross-attention with residuals: each stream queries the
/// other through the shared Wq/Wk/Wv projections and adds itself back.
/// Returns (clean_enhanced, foggy_enhanced).
std::pair<Tensor, Tensor> mutual_enhancement(const Tensor& v_clean_sel, const Tensor& v_foggy_sel,
                                             const ModelParams& params);

/// Frame-level cosine matrix between enhanced streams; entry (i, j) compares
/// foggy frame i with clean frame j.
Tensor consistency_matrix(const Tensor& v_foggy_enh, const Tensor& v_clean_enh);

/// Mean over frames, L2-normalized -> [1, d].
Tensor pool_embedding(const Tensor& seq);
/// logit_scale * cosine(pooled sequence embedding, each class embedding) -> [1, C].
Tensor pool_and_logits(const Tensor& seq, const ModelParams& params);
Tensor logits_for_pooled(const Tensor& pooled, const ModelParams& params);

/// Argmax over a [1, C] logits row; ties go to the lowest class index.
std::size_t classify(const Tensor& logits_row);

struct TrainForward {
    Tensor v_foggy_enh;  // [T, d]
    Tensor v_clean_enh;  // [T, d]
    Tensor logits_foggy; // [1, C]
    Tensor logits_clean; // [1, C]
    Tensor consistency;  // [T, T]; undefined when not requested
};

/// Training-time two-stream pass over a clip pair.
TrainForward forward_train(const Clip& foggy, const Clip& clean, const ModelParams& params,
                           const ForwardOptions& opts = {});
TrainForward forward_train(const PairedSample& sample, const ModelParams& params,
                           const ForwardOptions& opts = {});

struct InferResult {
    std::size_t predicted = 0;
    Tensor pooled; // [1, d], unit norm
    Tensor logits; // [1, C]
};

/// Inference-time pass: the foggy stream substitutes for the clean one
/// everywhere, so selection attends over two foggy copies and enhancement
/// queries, keys, and values all come from the foggy stream. No clean data
/// is consumed.
InferResult forward_infer(const Clip& foggy, const ModelParams& params,
                          const ForwardOptions& opts = {});

} // namespace fognet
