#include "fognet/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "fognet/errors.hpp"
#include "fognet/rng.hpp"

namespace fognet {

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const std::size_t c : counts) n += c;
    return n;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < num_classes; ++i) n += counts[i * num_classes + i];
    return n;
}

double topk_accuracy(const Tensor& logits, const std::vector<std::size_t>& labels, std::size_t k) {
    if (logits.ndim() != 2 || logits.rows() == 0) {
        throw DegenerateInputError("topk: empty logits, shape " + shape_str(logits.shape()));
    }
    const std::size_t b = logits.rows(), c = logits.cols();
    if (k < 1 || k > c) {
        throw ParameterError("topk: k " + std::to_string(k) + " out of range [1," +
                             std::to_string(c) + "]");
    }
    if (labels.size() != b) {
        throw DimensionError("topk: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(b) + " rows");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < b; ++i) {
        const std::size_t label = labels[i];
        if (label >= c) {
            throw ParameterError("topk: label " + std::to_string(label) + " out of range");
        }
        const double lv = logits.at(i, label);
        // Rank of the label under (value desc, index asc) ordering.
        std::size_t rank = 0;
        for (std::size_t j = 0; j < c; ++j) {
            const double v = logits.at(i, j);
            if (v > lv || (v == lv && j < label)) ++rank;
        }
        if (rank < k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(b);
}

ConfusionMatrix confusion(const std::vector<std::size_t>& predictions,
                          const std::vector<std::size_t>& labels, std::size_t num_classes) {
    if (predictions.size() != labels.size()) {
        throw DimensionError("confusion: " + std::to_string(predictions.size()) +
                             " predictions for " + std::to_string(labels.size()) + " labels");
    }
    ConfusionMatrix cm;
    cm.num_classes = num_classes;
    cm.counts.assign(num_classes * num_classes, 0);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] >= num_classes || labels[i] >= num_classes) {
            throw ParameterError("confusion: index out of range at sample " + std::to_string(i));
        }
        ++cm.counts[labels[i] * num_classes + predictions[i]];
    }
    return cm;
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("confusion: cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < cm.num_classes; ++i) {
        for (std::size_t j = 0; j < cm.num_classes; ++j) {
            os << cm.at(i, j) << (j + 1 == cm.num_classes ? "\n" : ",");
        }
    }
}

Histogram Histogram::from_values(const std::vector<double>& values, std::size_t bin_count,
                                 double epsilon) {
    if (bin_count == 0) throw ParameterError("histogram: bin_count must be >= 1");
    if (values.empty()) throw DegenerateInputError("histogram: no values");
    std::vector<double> raw(bin_count, 0.0);
    for (const double v : values) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        std::size_t bin = static_cast<std::size_t>(clamped * static_cast<double>(bin_count));
        if (bin >= bin_count) bin = bin_count - 1;
        raw[bin] += 1.0;
    }
    const double total = static_cast<double>(values.size());
    double mass = 0.0;
    for (double& b : raw) {
        b = b / total + epsilon;
        mass += b;
    }
    for (double& b : raw) b /= mass;
    Histogram h;
    h.bins = std::move(raw);
    return h;
}

double kl_divergence(const Histogram& p, const Histogram& q) {
    if (p.bins.size() != q.bins.size()) {
        throw DimensionError("kl: bin counts differ, " + std::to_string(p.bins.size()) + " vs " +
                             std::to_string(q.bins.size()));
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.bins.size(); ++i) {
        if (!(p.bins[i] > 0.0 && q.bins[i] > 0.0)) {
            throw DegenerateInputError("kl: histograms must be smoothed (zero mass at bin " +
                                       std::to_string(i) + ")");
        }
        kl += p.bins[i] * std::log(p.bins[i] / q.bins[i]);
    }
    return kl;
}

StreamKind parse_stream(const std::string& s) {
    if (s == "foggy") return StreamKind::Foggy;
    if (s == "clean") return StreamKind::Clean;
    throw ParameterError("unknown stream '" + s + "' (expected foggy|clean)");
}

Histogram dataset_histogram(const std::filesystem::path& manifest_path, StreamKind stream,
                            std::size_t bin_count, std::size_t samples_per_class,
                            std::uint64_t seed) {
    if (samples_per_class == 0) throw ParameterError("histogram: samples_per_class must be >= 1");
    const std::vector<ManifestEntry> entries = read_manifest(manifest_path);
    if (entries.empty()) throw DegenerateInputError("histogram: empty manifest " + manifest_path.string());
    const std::filesystem::path dir = manifest_path.parent_path();

    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < entries.size(); ++i) by_class[entries[i].label].push_back(i);

    std::vector<double> values;
    for (const auto& [label, members] : by_class) {
        std::vector<std::size_t> order = members;
        Rng rng(derive_seed(seed, "histogram", {label}));
        rng.shuffle(order);
        const std::size_t take = std::min(samples_per_class, order.size());
        for (std::size_t i = 0; i < take; ++i) {
            const ManifestEntry& e = entries[order[i]];
            const std::string& stem = stream == StreamKind::Foggy ? e.foggy_path : e.clean_path;
            const Clip clip = load_clip(dir / stem, /*with_depth=*/false);
            values.insert(values.end(), clip.frames.begin(), clip.frames.end());
        }
    }
    return Histogram::from_values(values, bin_count);
}

EvalReport evaluate_manifest(const std::filesystem::path& manifest_path,
                             const ModelParams& params, const ForwardOptions& opts,
                             std::optional<Split> split) {
    const std::vector<ManifestEntry> entries = read_manifest(manifest_path);
    const std::filesystem::path dir = manifest_path.parent_path();

    EvalReport report;
    std::vector<Tensor> rows;
    for (const ManifestEntry& e : entries) {
        if (split && e.split != *split) continue;
        const Clip foggy = load_clip(dir / e.foggy_path, /*with_depth=*/false);
        InferResult r = forward_infer(foggy, params, opts);
        report.predictions.push_back(r.predicted);
        report.labels.push_back(e.label);
        rows.push_back(r.logits);
    }
    if (rows.empty()) {
        throw ConfigError("eval: no samples in the requested split of " + manifest_path.string());
    }
    report.logits = vstack(rows);
    return report;
}

void export_embeddings(const std::filesystem::path& manifest_path, const ModelParams& params,
                       const ForwardOptions& opts, const std::filesystem::path& out_csv) {
    const std::vector<ManifestEntry> entries = read_manifest(manifest_path);
    const std::filesystem::path dir = manifest_path.parent_path();
    std::ofstream os(out_csv, std::ios::trunc);
    if (!os) throw IoError("export: cannot open " + out_csv.string() + " for writing");

    os << "id,label,split";
    for (std::size_t j = 0; j < params.config.embed_dim; ++j) os << ",e" << j;
    os << "\n";

    char buf[40];
    for (const ManifestEntry& e : entries) {
        const Clip foggy = load_clip(dir / e.foggy_path, /*with_depth=*/false);
        const InferResult r = forward_infer(foggy, params, opts);
        os << e.id << "," << e.label << "," << to_string(e.split);
        for (std::size_t j = 0; j < r.pooled.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(static_cast<float>(r.pooled.at(j))));
            os << "," << buf;
        }
        os << "\n";
    }
    if (!os) throw IoError("export: short write to " + out_csv.string());
}

} // namespace fognet
