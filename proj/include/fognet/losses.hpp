#pragma once

#include <cstddef>
#include <vector>

#include "fognet/tensor.hpp"

namespace fognet {

/// All objective components of one batch. Scalars are graph nodes so the
/// total stays differentiable; value() reads any component.
struct LossBreakdown {
    Tensor l_temp;
    Tensor l_f_t2v;
    Tensor l_f_v2t;
    Tensor l_c_t2v;
    Tensor l_c_v2t;
    Tensor l_f;
    Tensor l_c;
    Tensor l_all;
    double lambda = 0.4;
    double beta = 0.1;
};

/// Frame-alignment loss over a square consistency matrix: mean over rows of
/// the negative log-softmax probability of the diagonal entry. Zero when the
/// diagonal dominates every row; always >= 0.
Tensor temporal_loss(const Tensor& consistency);

/// Multi-positive InfoNCE, text-to-video direction: for each sample, the
/// candidates are the batch entries scored against the sample's own class
/// column, and every batch entry of the same class (itself included) is a
/// positive. Negated log-probability form, >= 0.
Tensor infonce_t2v(const Tensor& logits, const std::vector<std::size_t>& labels);

/// Video-to-text direction: softmax runs over each positive video's class
/// logits. Negated, >= 0.
Tensor infonce_v2t(const Tensor& logits, const std::vector<std::size_t>& labels);

/// Full objective: L_all = L_f + lambda * L_c + beta * L_temp where each
/// stream loss is its T2V + V2T pair and the temporal term is the batch mean.
/// consistency may be empty when beta == 0.
LossBreakdown total_loss(const Tensor& logits_foggy, const Tensor& logits_clean,
                         const std::vector<Tensor>& consistency,
                         const std::vector<std::size_t>& labels, double lambda = 0.4,
                         double beta = 0.1);

} // namespace fognet
