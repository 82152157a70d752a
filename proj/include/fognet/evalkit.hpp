#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fognet/manifest.hpp"
#include "fognet/model.hpp"

namespace fognet {

struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::size_t> counts; // C*C, rows = true class, columns = predicted

    std::size_t at(std::size_t truth, std::size_t predicted) const {
        return counts[truth * num_classes + predicted];
    }
    std::size_t total() const;
    std::size_t trace() const;
};

/// Fraction of rows whose true label ranks among the k best logits; ties at
/// the k-th value admit the lowest class indices first.
double topk_accuracy(const Tensor& logits, const std::vector<std::size_t>& labels, std::size_t k);

ConfusionMatrix confusion(const std::vector<std::size_t>& predictions,
                          const std::vector<std::size_t>& labels, std::size_t num_classes);

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm);

/// Normalized histogram over [0, 1], additive-epsilon smoothed.
struct Histogram {
    std::vector<double> bins;

    static Histogram from_values(const std::vector<double>& values, std::size_t bin_count,
                                 double epsilon = 1e-8);
};

/// Sum over bins of p * ln(p / q); >= 0, zero iff the histograms coincide.
double kl_divergence(const Histogram& p, const Histogram& q);

/// Pooled per-pixel intensity histogram over a seeded per-class subsample of
/// the manifest's clips (foggy or clean stream).
enum class StreamKind { Foggy, Clean };
StreamKind parse_stream(const std::string& s);

Histogram dataset_histogram(const std::filesystem::path& manifest_path, StreamKind stream,
                            std::size_t bin_count, std::size_t samples_per_class,
                            std::uint64_t seed);

struct EvalReport {
    std::vector<std::size_t> predictions;
    std::vector<std::size_t> labels;
    Tensor logits; // [B, C]
};

/// Foggy-only inference over one manifest split (or everything when split is
/// empty). Results follow manifest order.
EvalReport evaluate_manifest(const std::filesystem::path& manifest_path,
                             const ModelParams& params, const ForwardOptions& opts,
                             std::optional<Split> split);

/// CSV export of pooled inference embeddings: id, label, split, then the
/// embedding entries at storage (32-bit) precision.
void export_embeddings(const std::filesystem::path& manifest_path, const ModelParams& params,
                       const ForwardOptions& opts, const std::filesystem::path& out_csv);

} // namespace fognet
