#include "fognet/losses.hpp"

#include <string>

#include "fognet/errors.hpp"

namespace fognet {

namespace {

void check_labels(const Tensor& logits, const std::vector<std::size_t>& labels, const char* op) {
    if (logits.ndim() != 2 || logits.rows() == 0 || logits.cols() == 0) {
        throw DegenerateInputError(std::string(op) + ": empty batch, logits shape " +
                                   shape_str(logits.shape()));
    }
    if (labels.size() != logits.rows()) {
        throw DimensionError(std::string(op) + ": " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(logits.rows()) + " logit rows");
    }
    for (const std::size_t l : labels) {
        if (l >= logits.cols()) {
            throw DimensionError(std::string(op) + ": label " + std::to_string(l) +
                                 " out of range for " + std::to_string(logits.cols()) + " classes");
        }
    }
}

std::vector<std::size_t> positives_count(const std::vector<std::size_t>& labels) {
    std::vector<std::size_t> count(labels.size(), 0);
    for (std::size_t b = 0; b < labels.size(); ++b) {
        for (const std::size_t l : labels) {
            if (l == labels[b]) ++count[b];
        }
    }
    return count;
}

} // namespace

Tensor temporal_loss(const Tensor& consistency) {
    if (consistency.ndim() != 2 || consistency.rows() != consistency.cols()) {
        throw DimensionError("temporal_loss: expected a square matrix, got shape " +
                             shape_str(consistency.shape()));
    }
    const std::size_t t = consistency.rows();
    Tensor diag_mask = Tensor::zeros({t, t});
    for (std::size_t i = 0; i < t; ++i) diag_mask.raw()[i * t + i] = 1.0 / static_cast<double>(t);
    return scale(sum_all(mul(log_softmax_rows(consistency), diag_mask)), -1.0);
}

Tensor infonce_t2v(const Tensor& logits, const std::vector<std::size_t>& labels) {
    check_labels(logits, labels, "infonce_t2v");
    const std::size_t b = logits.rows();

    // scores[b_i, j] = similarity of video j against class label(b_i).
    const Tensor scores = transpose(gather_columns(logits, labels));
    const std::vector<std::size_t> k_count = positives_count(labels);

    Tensor weights = Tensor::zeros({b, b});
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t k = 0; k < b; ++k) {
            if (labels[k] == labels[i]) {
                weights.raw()[i * b + k] =
                    1.0 / (static_cast<double>(b) * static_cast<double>(k_count[i]));
            }
        }
    }
    return scale(sum_all(mul(log_softmax_rows(scores), weights)), -1.0);
}

Tensor infonce_v2t(const Tensor& logits, const std::vector<std::size_t>& labels) {
    check_labels(logits, labels, "infonce_v2t");
    const std::size_t b = logits.rows();
    const std::size_t c = logits.cols();
    const std::vector<std::size_t> k_count = positives_count(labels);

    Tensor weights = Tensor::zeros({b, c});
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t k = 0; k < b; ++k) {
            if (labels[k] == labels[i]) {
                weights.raw()[k * c + labels[i]] +=
                    1.0 / (static_cast<double>(b) * static_cast<double>(k_count[i]));
            }
        }
    }
    return scale(sum_all(mul(log_softmax_rows(logits), weights)), -1.0);
}

LossBreakdown total_loss(const Tensor& logits_foggy, const Tensor& logits_clean,
                         const std::vector<Tensor>& consistency,
                         const std::vector<std::size_t>& labels, double lambda, double beta) {
    if (logits_foggy.shape() != logits_clean.shape()) {
        throw DimensionError("total_loss: foggy/clean logits shapes differ, " +
                             shape_str(logits_foggy.shape()) + " vs " +
                             shape_str(logits_clean.shape()));
    }
    if (beta != 0.0 && consistency.size() != labels.size()) {
        throw DimensionError("total_loss: " + std::to_string(consistency.size()) +
                             " consistency matrices for batch of " + std::to_string(labels.size()));
    }

    LossBreakdown out;
    out.lambda = lambda;
    out.beta = beta;

    out.l_f_t2v = infonce_t2v(logits_foggy, labels);
    out.l_f_v2t = infonce_v2t(logits_foggy, labels);
    out.l_c_t2v = infonce_t2v(logits_clean, labels);
    out.l_c_v2t = infonce_v2t(logits_clean, labels);
    out.l_f = add(out.l_f_t2v, out.l_f_v2t);
    out.l_c = add(out.l_c_t2v, out.l_c_v2t);

    if (beta != 0.0) {
        Tensor acc;
        for (const Tensor& s : consistency) {
            const Tensor term = temporal_loss(s);
            acc = acc.defined() ? add(acc, term) : term;
        }
        out.l_temp = scale(acc, 1.0 / static_cast<double>(consistency.size()));
    } else {
        out.l_temp = Tensor::zeros({1, 1});
    }

    out.l_all = add(add(out.l_f, scale(out.l_c, lambda)), scale(out.l_temp, beta));
    return out;
}

} // namespace fognet
