#include "fognet/model.hpp"

#include <algorithm>
#include <cmath>

#include "fognet/errors.hpp"
#include "fognet/rng.hpp"

namespace fognet {

std::string to_string(EncoderKind kind) {
    return kind == EncoderKind::Learnable ? "learnable" : "frozen-random";
}

EncoderKind parse_encoder_kind(const std::string& s) {
    if (s == "learnable") return EncoderKind::Learnable;
    if (s == "frozen-random" || s == "frozen") return EncoderKind::FrozenRandom;
    throw ParameterError("unknown encoder kind '" + s + "' (expected learnable|frozen)");
}

std::vector<std::string> Ablation::tokens() const {
    std::vector<std::string> out;
    if (fas) out.push_back("fas");
    if (me) out.push_back("me");
    if (csa) out.push_back("csa");
    return out;
}

Ablation parse_ablation(const std::vector<std::string>& tokens) {
    Ablation a;
    for (const std::string& t : tokens) {
        if (t == "fas") a.fas = true;
        else if (t == "me") a.me = true;
        else if (t == "csa") a.csa = true;
        else throw ParameterError("unknown ablation token '" + t + "' (expected fas|me|csa)");
    }
    return a;
}

ModelParams ModelParams::init(const ModelConfig& config) {
    if (config.embed_dim == 0 || config.num_classes == 0 || config.input_pixels == 0) {
        throw ConfigError("model: embed_dim, num_classes and input_pixels must be positive");
    }
    if (config.heads <= 0 || config.embed_dim % static_cast<std::size_t>(config.heads) != 0) {
        throw ConfigError("model: head count " + std::to_string(config.heads) +
                          " must divide embed_dim " + std::to_string(config.embed_dim));
    }
    const std::size_t d = config.embed_dim, c = config.num_classes, hw = config.input_pixels;
    Rng rng(derive_seed(config.seed, "init"));

    ModelParams p;
    p.config = config;

    const bool train_encoder = config.encoder == EncoderKind::Learnable;
    const double enc_scale = 1.0 / std::sqrt(static_cast<double>(hw));
    std::vector<double> w(d * hw);
    for (double& v : w) v = enc_scale * rng.normal();
    p.enc_weight = Tensor({d, hw}, std::move(w), train_encoder);
    p.enc_bias = Tensor::zeros({1, d}, train_encoder);

    std::vector<double> text(c * d);
    for (double& v : text) v = 0.02 * rng.normal();
    p.text_table = Tensor({c, d}, std::move(text), true);

    for (Tensor* t : {&p.wq, &p.wk, &p.wv}) {
        std::vector<double> m(d * d);
        for (double& v : m) v = 0.02 * rng.normal();
        *t = Tensor({d, d}, std::move(m), true);
    }

    p.logit_scale = Tensor({1, 1}, {1.0 / 0.07}, true);
    return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
    return {{"enc_weight", enc_weight}, {"enc_bias", enc_bias}, {"text_table", text_table},
            {"wq", wq},                 {"wk", wk},             {"wv", wv},
            {"logit_scale", logit_scale}};
}

std::vector<std::pair<std::string, Tensor>> ModelParams::trainable() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (auto& [name, t] : named()) {
        if (t.requires_grad()) out.emplace_back(name, t);
    }
    return out;
}

void ModelParams::clamp_logit_scale() {
    double& v = logit_scale.raw()[0];
    v = std::clamp(v, 1.0, 100.0);
}

Tensor encode_frames(const Clip& clip, const ModelParams& params) {
    const std::size_t hw = clip.height * clip.width;
    if (hw != params.config.input_pixels) {
        throw DimensionError("encode_frames: clip has " + std::to_string(hw) +
                             " pixels per frame, encoder expects " +
                             std::to_string(params.config.input_pixels));
    }
    if (clip.frames.size() != clip.frame_count * hw) {
        throw DimensionError("encode_frames: malformed clip buffer");
    }
    const Tensor x({clip.frame_count, hw}, clip.frames);
    return tanh(add_rowvec(matmul(x, transpose(params.enc_weight)), params.enc_bias));
}

Tensor attention_mix(const Tensor& tokens) {
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(tokens.cols()));
    const Tensor weights = softmax_rows(scale(matmul(tokens, transpose(tokens)), inv_sqrt_d));
    return matmul(weights, tokens);
}

std::pair<Tensor, Tensor> fog_aware_selection(const Tensor& v_clean, const Tensor& v_foggy) {
    if (v_clean.shape() != v_foggy.shape()) {
        throw DimensionError("fog_aware_selection: stream shapes differ, " +
                             shape_str(v_clean.shape()) + " vs " + shape_str(v_foggy.shape()));
    }
    const Tensor mixed = attention_mix(concat_rows(v_clean, v_foggy));
    return chunk2(mixed);
}

Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v, int heads) {
    if (q.cols() != k.cols() || k.shape() != v.shape() || q.cols() != v.cols()) {
        throw DimensionError("attention: incompatible shapes " + shape_str(q.shape()) + ", " +
                             shape_str(k.shape()) + ", " + shape_str(v.shape()));
    }
    const std::size_t d = q.cols();
    if (heads <= 0 || d % static_cast<std::size_t>(heads) != 0) {
        throw DimensionError("attention: head count " + std::to_string(heads) +
                             " must divide width " + std::to_string(d));
    }
    const std::size_t dh = d / static_cast<std::size_t>(heads);
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor out;
    for (int h = 0; h < heads; ++h) {
        const std::size_t first = static_cast<std::size_t>(h) * dh;
        const Tensor qh = heads == 1 ? q : slice_cols(q, first, dh);
        const Tensor kh = heads == 1 ? k : slice_cols(k, first, dh);
        const Tensor vh = heads == 1 ? v : slice_cols(v, first, dh);
        const Tensor attn = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt_dh));
        const Tensor mixed = matmul(attn, vh);
        out = out.defined() ? concat_cols(out, mixed) : mixed;
    }
    return out;
}

std::pair<Tensor, Tensor> mutual_enhancement(const Tensor& v_clean_sel, const Tensor& v_foggy_sel,
                                             const ModelParams& params) {
    if (v_clean_sel.shape() != v_foggy_sel.shape()) {
        throw DimensionError("mutual_enhancement: stream shapes differ, " +
                             shape_str(v_clean_sel.shape()) + " vs " + shape_str(v_foggy_sel.shape()));
    }
    const int heads = params.config.heads;

    const Tensor q_clean = matmul(v_clean_sel, params.wq);
    const Tensor k_foggy = matmul(v_foggy_sel, params.wk);
    const Tensor v_foggy = matmul(v_foggy_sel, params.wv);
    const Tensor foggy_enh = add(attention_core(q_clean, k_foggy, v_foggy, heads), v_foggy_sel);

    const Tensor q_foggy = matmul(v_foggy_sel, params.wq);
    const Tensor k_clean = matmul(v_clean_sel, params.wk);
    const Tensor v_clean = matmul(v_clean_sel, params.wv);
    const Tensor clean_enh = add(attention_core(q_foggy, k_clean, v_clean, heads), v_clean_sel);

    return {clean_enh, foggy_enh};
}

Tensor consistency_matrix(const Tensor& v_foggy_enh, const Tensor& v_clean_enh) {
    if (v_foggy_enh.shape() != v_clean_enh.shape()) {
        throw DimensionError("consistency_matrix: stream shapes differ, " +
                             shape_str(v_foggy_enh.shape()) + " vs " + shape_str(v_clean_enh.shape()));
    }
    return cosine_sim_matrix(v_foggy_enh, v_clean_enh);
}

Tensor pool_embedding(const Tensor& seq) { return l2_normalize_rows(mean_rows(seq)); }

Tensor logits_for_pooled(const Tensor& pooled, const ModelParams& params) {
    const Tensor sims = matmul(pooled, transpose(l2_normalize_rows(params.text_table)));
    return mul_scalar(sims, params.logit_scale);
}

Tensor pool_and_logits(const Tensor& seq, const ModelParams& params) {
    return logits_for_pooled(pool_embedding(seq), params);
}

std::size_t classify(const Tensor& logits_row) {
    if (logits_row.ndim() != 2 || logits_row.rows() != 1 || logits_row.cols() == 0) {
        throw DegenerateInputError("classify: expected a nonempty [1,C] logits row, got " +
                                   shape_str(logits_row.shape()));
    }
    return argmax_rows(logits_row)[0];
}

TrainForward forward_train(const Clip& foggy, const Clip& clean, const ModelParams& params,
                           const ForwardOptions& opts) {
    Tensor v_foggy = encode_frames(foggy, params);
    Tensor v_clean = encode_frames(clean, params);

    if (opts.use_selection) {
        auto [clean_sel, foggy_sel] = fog_aware_selection(v_clean, v_foggy);
        v_clean = clean_sel;
        v_foggy = foggy_sel;
    }
    if (opts.use_enhancement) {
        auto [clean_enh, foggy_enh] = mutual_enhancement(v_clean, v_foggy, params);
        v_clean = clean_enh;
        v_foggy = foggy_enh;
    }

    TrainForward out;
    out.v_foggy_enh = v_foggy;
    out.v_clean_enh = v_clean;
    if (opts.want_consistency) out.consistency = consistency_matrix(v_foggy, v_clean);
    out.logits_foggy = pool_and_logits(v_foggy, params);
    out.logits_clean = pool_and_logits(v_clean, params);
    return out;
}

TrainForward forward_train(const PairedSample& sample, const ModelParams& params,
                           const ForwardOptions& opts) {
    return forward_train(sample.foggy, sample.clean, params, opts);
}

InferResult forward_infer(const Clip& foggy, const ModelParams& params, const ForwardOptions& opts) {
    Tensor v = encode_frames(foggy, params);

    if (opts.use_selection) {
        // The foggy stream stands in for both halves of the joint sequence.
        auto [first_half, second_half] = fog_aware_selection(v, v);
        (void)first_half;
        v = second_half;
    }
    if (opts.use_enhancement) {
        const Tensor q = matmul(v, params.wq);
        const Tensor k = matmul(v, params.wk);
        const Tensor val = matmul(v, params.wv);
        v = add(attention_core(q, k, val, params.config.heads), v);
    }

    InferResult out;
    out.pooled = pool_embedding(v);
    out.logits = logits_for_pooled(out.pooled, params);
    out.predicted = classify(out.logits);
    return out;
}

} // namespace fognet
