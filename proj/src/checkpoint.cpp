#include "fognet/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

#include "fognet/errors.hpp"
#include "fognet/tensor_io.hpp"

namespace fognet {

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params,
                     const Ablation& ablation) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, t] : params.named()) {
        write_fvt(dir / (name + ".fvt"), t);
    }
    nlohmann::ordered_json meta;
    meta["d"] = params.config.embed_dim;
    meta["C"] = params.config.num_classes;
    meta["heads"] = params.config.heads;
    meta["encoder_kind"] = to_string(params.config.encoder);
    meta["seed"] = params.config.seed;
    meta["logit_scale"] = params.logit_scale.value();
    meta["ablation"] = ablation.tokens();
    meta["input_pixels"] = params.config.input_pixels;
    std::ofstream os(dir / "metadata.json", std::ios::trunc);
    if (!os) throw IoError("checkpoint: cannot open " + (dir / "metadata.json").string());
    os << meta.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    const std::filesystem::path meta_path = dir / "metadata.json";
    std::ifstream is(meta_path);
    if (!is) throw IoError("checkpoint: cannot open " + meta_path.string());
    nlohmann::json meta;
    try {
        is >> meta;
    } catch (const nlohmann::json::exception& ex) {
        throw IoError("checkpoint: malformed " + meta_path.string() + ": " + ex.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.params.config.embed_dim = meta.at("d").get<std::size_t>();
        ckpt.params.config.num_classes = meta.at("C").get<std::size_t>();
        ckpt.params.config.heads = meta.at("heads").get<int>();
        ckpt.params.config.encoder = parse_encoder_kind(meta.at("encoder_kind").get<std::string>());
        ckpt.params.config.seed = meta.at("seed").get<std::uint64_t>();
        ckpt.params.config.input_pixels = meta.at("input_pixels").get<std::size_t>();
        ckpt.ablation = parse_ablation(meta.at("ablation").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& ex) {
        throw IoError("checkpoint: missing metadata field in " + meta_path.string() + ": " + ex.what());
    }

    const std::size_t d = ckpt.params.config.embed_dim;
    const std::size_t c = ckpt.params.config.num_classes;
    const std::size_t hw = ckpt.params.config.input_pixels;
    const bool train_encoder = ckpt.params.config.encoder == EncoderKind::Learnable;

    const auto load = [&dir](const std::string& name, std::vector<std::size_t> want,
                             bool requires_grad) {
        Tensor t = read_fvt(dir / (name + ".fvt"));
        if (t.shape() != want) {
            throw IoError("checkpoint: tensor " + name + " has shape " + shape_str(t.shape()) +
                          ", expected " + shape_str(want));
        }
        t.set_requires_grad(requires_grad);
        return t;
    };

    ckpt.params.enc_weight = load("enc_weight", {d, hw}, train_encoder);
    ckpt.params.enc_bias = load("enc_bias", {1, d}, train_encoder);
    ckpt.params.text_table = load("text_table", {c, d}, true);
    ckpt.params.wq = load("wq", {d, d}, true);
    ckpt.params.wk = load("wk", {d, d}, true);
    ckpt.params.wv = load("wv", {d, d}, true);
    ckpt.params.logit_scale = load("logit_scale", {1, 1}, true);
    return ckpt;
}

} // namespace fognet
