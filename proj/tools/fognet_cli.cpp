#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fognet/checkpoint.hpp"
#include "fognet/errors.hpp"
#include "fognet/evalkit.hpp"
#include "fognet/fogsynth.hpp"
#include "fognet/model.hpp"
#include "fognet/trainer.hpp"
#include "fognet/verification.hpp"

namespace fs = std::filesystem;
using namespace fognet;

namespace {

struct GenerateArgs {
    std::size_t classes = 6;
    std::size_t clips_per_class = 40;
    std::size_t frames = 8;
    std::size_t size = 32;
    std::vector<std::string> intensities = {"light", "dense"};
    int views = 4;
    double split_ratio = 0.8;
    std::string out;
};

struct TrainArgs {
    std::string manifest;
    std::size_t epochs = 30;
    std::size_t batch = 16;
    double lr = 5e-5;
    std::size_t warmup_epochs = 5;
    double lambda = 0.4;
    double beta = 0.1;
    std::vector<std::string> ablate;
    std::size_t dim = 32;
    std::string encoder = "learnable";
    double weight_decay = 0.0;
    double min_lr = 0.0;
    int heads = 1;
    double grad_clip = 0.0;
    std::string out;
};

struct EvalArgs {
    std::string checkpoint;
    std::string manifest;
    std::string split = "test";
    std::vector<std::size_t> topk = {1, 5};
    std::string confusion;
};

struct GradcheckArgs {
    double tolerance = 1e-4;
};

struct KlArgs {
    std::string a;
    std::string b;
    std::string stream = "foggy";
    std::size_t bins = 64;
    std::size_t samples_per_class = 2;
};

struct ExportArgs {
    std::string checkpoint;
    std::string manifest;
    std::string out;
};

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) {
        throw IoError(std::string(what) + " not found: " + path);
    }
}

int cmd_generate(const GenerateArgs& args, std::uint64_t seed, const fs::path& out_dir) {
    const std::vector<ActionClassSpec> builtin = builtin_action_classes(args.size, args.frames);
    if (args.classes < 2 || args.classes > builtin.size()) {
        throw ParameterError("--classes must be in [2," + std::to_string(builtin.size()) + "]");
    }
    if (args.views < 1 || args.views > 4) throw ParameterError("--views must be in [1,4]");
    if (args.frames < 2) throw ParameterError("--frames must be >= 2");
    if (args.size < 8) throw ParameterError("--size must be >= 8");

    DatasetConfig cfg;
    cfg.classes.assign(builtin.begin(), builtin.begin() + static_cast<std::ptrdiff_t>(args.classes));
    cfg.clips_per_class = args.clips_per_class;
    cfg.intensities.clear();
    for (const std::string& name : args.intensities) {
        const FogIntensity level = parse_intensity(name);
        for (const IntensitySpec& preset : default_intensities()) {
            if (preset.level == level) cfg.intensities.push_back(preset);
        }
    }
    cfg.views.clear();
    for (int v = 0; v < args.views; ++v) cfg.views.push_back(v);
    cfg.split_ratio = args.split_ratio;
    cfg.seed = seed;
    cfg.frame_count = args.frames;
    cfg.height = args.size;
    cfg.width = args.size;

    const fs::path out = args.out.empty() ? out_dir / "dataset" : fs::path(args.out);
    const std::vector<ManifestEntry> entries = generate_dataset(cfg, out);

    std::size_t train_count = 0;
    for (const ManifestEntry& e : entries) train_count += e.split == Split::Train ? 1 : 0;
    std::cout << "wrote " << entries.size() << " paired samples (" << train_count << " train / "
              << entries.size() - train_count << " test) across " << cfg.classes.size()
              << " classes to " << out.string() << "\n";
    std::cout << "manifest: " << (out / "manifest.jsonl").string() << "\n";
    return 0;
}

int cmd_train(const TrainArgs& args, std::uint64_t seed, const fs::path& out_dir) {
    const Ablation ablation = parse_ablation(args.ablate); // bad token -> usage error
    const EncoderKind encoder = parse_encoder_kind(args.encoder);
    require_file(args.manifest, "manifest");

    TrainConfig cfg;
    cfg.epochs = args.epochs;
    cfg.batch_size = args.batch;
    cfg.peak_lr = args.lr;
    cfg.warmup_epochs = args.warmup_epochs;
    cfg.min_lr = args.min_lr;
    cfg.weight_decay = args.weight_decay;
    cfg.lambda = args.lambda;
    cfg.beta = args.beta;
    cfg.grad_clip = args.grad_clip;
    cfg.seed = seed;
    cfg.ablation = ablation;
    cfg.embed_dim = args.dim;
    cfg.heads = args.heads;
    cfg.encoder = encoder;
    cfg.validate();

    const fs::path out = args.out.empty() ? out_dir / "run" : fs::path(args.out);
    const TrainResult result = train(fs::path(args.manifest), cfg, out, &std::cout);
    std::cout << "final test top1 " << result.final_test_top1 << ", best " << result.best_test_top1
              << "\n";
    std::cout << "checkpoints: " << result.checkpoint_final.string() << ", "
              << result.checkpoint_best.string() << "\n";
    std::cout << "log: " << (out / "log.csv").string() << "\n";
    return 0;
}

int cmd_eval(const EvalArgs& args) {
    std::optional<Split> split;
    if (args.split == "train") split = Split::Train;
    else if (args.split == "test") split = Split::Test;
    else if (args.split == "all") split = std::nullopt;
    else throw ParameterError("--split must be train|test|all, got '" + args.split + "'");

    require_file((fs::path(args.checkpoint) / "metadata.json").string(), "checkpoint");
    require_file(args.manifest, "manifest");
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);
    const std::size_t c = ckpt.params.config.num_classes;
    for (const std::size_t k : args.topk) {
        if (k < 1 || k > c) {
            throw ParameterError("--topk value " + std::to_string(k) + " out of range [1," +
                                 std::to_string(c) + "]");
        }
    }

    const EvalReport report = evaluate_manifest(args.manifest, ckpt.params,
                                                ckpt.ablation.forward_options(false), split);

    nlohmann::ordered_json j;
    for (const std::size_t k : args.topk) {
        j["top" + std::to_string(k)] = topk_accuracy(report.logits, report.labels, k);
    }
    std::vector<double> per_class(c, 0.0);
    std::vector<std::size_t> per_class_total(c, 0);
    for (std::size_t i = 0; i < report.labels.size(); ++i) {
        ++per_class_total[report.labels[i]];
        if (report.predictions[i] == report.labels[i]) per_class[report.labels[i]] += 1.0;
    }
    for (std::size_t i = 0; i < c; ++i) {
        per_class[i] = per_class_total[i] == 0 ? 0.0 : per_class[i] / static_cast<double>(per_class_total[i]);
    }
    j["per_class"] = per_class;
    std::cout << j.dump(2) << "\n";

    if (!args.confusion.empty()) {
        write_confusion_csv(args.confusion, confusion(report.predictions, report.labels, c));
    }
    return 0;
}

int cmd_gradcheck(const GradcheckArgs& args, std::uint64_t seed) {
    const GradSuiteReport report = run_gradcheck_suite(seed, args.tolerance);
    std::printf("%-14s %-12s %s\n", "component", "max_rel_err", "status");
    for (const ComponentCheck& c : report.components) {
        std::printf("%-14s %-12.3e %s\n", c.name.c_str(), c.max_rel_err, c.pass ? "pass" : "FAIL");
    }
    std::printf("overall %.3e (tolerance %.1e): %s\n", report.max_rel_err, report.tol,
                report.pass ? "pass" : "FAIL");
    return report.pass ? 0 : 1;
}

int cmd_klcompare(const KlArgs& args, std::uint64_t seed) {
    const StreamKind stream = parse_stream(args.stream);
    if (args.bins == 0) throw ParameterError("--bins must be >= 1");
    if (args.samples_per_class == 0) throw ParameterError("--samples-per-class must be >= 1");
    require_file(args.a, "manifest A");
    require_file(args.b, "manifest B");
    const Histogram ha = dataset_histogram(args.a, stream, args.bins, args.samples_per_class, seed);
    const Histogram hb = dataset_histogram(args.b, stream, args.bins, args.samples_per_class, seed);
    std::printf("KL(A||B) = %.6f\n", kl_divergence(ha, hb));
    std::printf("KL(B||A) = %.6f\n", kl_divergence(hb, ha));
    return 0;
}

int cmd_export(const ExportArgs& args, const fs::path& out_dir) {
    require_file((fs::path(args.checkpoint) / "metadata.json").string(), "checkpoint");
    require_file(args.manifest, "manifest");
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);
    const fs::path out = args.out.empty() ? out_dir / "embeddings.csv" : fs::path(args.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    export_embeddings(args.manifest, ckpt.params, ckpt.ablation.forward_options(false), out);
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fognet: fog-invariant action recognition on synthetic paired clips"};
    app.require_subcommand(1);

    std::uint64_t seed = 42;
    std::string out_dir = "out";
    app.add_option("--seed", seed, "master seed for every random sub-stream")->capture_default_str();
    app.add_option("--out-dir", out_dir, "default output directory")->capture_default_str();

    GenerateArgs gen;
    auto* c_gen = app.add_subcommand("generate", "render a paired clean/foggy dataset");
    c_gen->fallthrough();
    c_gen->add_option("--classes", gen.classes, "number of built-in action classes")->capture_default_str();
    c_gen->add_option("--clips-per-class", gen.clips_per_class, "clip pairs per class")->capture_default_str();
    c_gen->add_option("--frames", gen.frames, "frames per clip")->capture_default_str();
    c_gen->add_option("--size", gen.size, "frame side length in pixels")->capture_default_str();
    c_gen->add_option("--intensities", gen.intensities, "fog intensities (light,dense)")
        ->delimiter(',')->capture_default_str();
    c_gen->add_option("--views", gen.views, "number of camera views (1..4)")->capture_default_str();
    c_gen->add_option("--split-ratio", gen.split_ratio, "train fraction per class")->capture_default_str();
    c_gen->add_option("--out", gen.out, "dataset directory (default <out-dir>/dataset)");

    TrainArgs tra;
    auto* c_train = app.add_subcommand("train", "train on a generated dataset");
    c_train->fallthrough();
    c_train->add_option("--manifest", tra.manifest, "dataset manifest")->required();
    c_train->add_option("--epochs", tra.epochs)->capture_default_str();
    c_train->add_option("--batch", tra.batch)->capture_default_str();
    c_train->add_option("--lr", tra.lr, "peak learning rate")->capture_default_str();
    c_train->add_option("--warmup-epochs", tra.warmup_epochs)->capture_default_str();
    c_train->add_option("--lambda", tra.lambda, "clean-stream loss weight")->capture_default_str();
    c_train->add_option("--beta", tra.beta, "temporal alignment loss weight")->capture_default_str();
    c_train->add_option("--ablate", tra.ablate, "disable components (fas,me,csa)")->delimiter(',');
    c_train->add_option("--dim", tra.dim, "embedding width")->capture_default_str();
    c_train->add_option("--encoder", tra.encoder, "learnable|frozen")->capture_default_str();
    c_train->add_option("--weight-decay", tra.weight_decay)->capture_default_str();
    c_train->add_option("--min-lr", tra.min_lr)->capture_default_str();
    c_train->add_option("--heads", tra.heads, "attention head count")->capture_default_str();
    c_train->add_option("--grad-clip", tra.grad_clip, "global gradient norm cap (0 = off)")->capture_default_str();
    c_train->add_option("--out", tra.out, "run directory (default <out-dir>/run)");

    EvalArgs eva;
    auto* c_eval = app.add_subcommand("eval", "evaluate a checkpoint (foggy stream only)");
    c_eval->fallthrough();
    c_eval->add_option("--checkpoint", eva.checkpoint)->required();
    c_eval->add_option("--manifest", eva.manifest)->required();
    c_eval->add_option("--split", eva.split, "train|test|all")->capture_default_str();
    c_eval->add_option("--topk", eva.topk, "accuracy cutoffs")->delimiter(',')->capture_default_str();
    c_eval->add_option("--confusion", eva.confusion, "write the confusion matrix CSV here");

    GradcheckArgs grc;
    auto* c_grad = app.add_subcommand("gradcheck", "finite-difference check of every gradient path");
    c_grad->fallthrough();
    c_grad->add_option("--tolerance", grc.tolerance)->capture_default_str();

    KlArgs klc;
    auto* c_kl = app.add_subcommand("klcompare", "KL divergence between two dataset histograms");
    c_kl->fallthrough();
    c_kl->add_option("--a", klc.a, "first manifest")->required();
    c_kl->add_option("--b", klc.b, "second manifest")->required();
    c_kl->add_option("--stream", klc.stream, "foggy|clean")->capture_default_str();
    c_kl->add_option("--bins", klc.bins)->capture_default_str();
    c_kl->add_option("--samples-per-class", klc.samples_per_class)->capture_default_str();

    ExportArgs exp;
    auto* c_exp = app.add_subcommand("export-embeddings", "dump pooled inference embeddings as CSV");
    c_exp->fallthrough();
    c_exp->add_option("--checkpoint", exp.checkpoint)->required();
    c_exp->add_option("--manifest", exp.manifest)->required();
    c_exp->add_option("--out", exp.out, "output CSV (default <out-dir>/embeddings.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*c_gen) return cmd_generate(gen, seed, out_dir);
        if (*c_train) return cmd_train(tra, seed, out_dir);
        if (*c_eval) return cmd_eval(eva);
        if (*c_grad) return cmd_gradcheck(grc, seed);
        if (*c_kl) return cmd_klcompare(klc, seed);
        if (*c_exp) return cmd_export(exp, out_dir);
    } catch (const ParameterError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
