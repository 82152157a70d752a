#pragma once

#include <filesystem>

#include "fognet/model.hpp"

namespace fognet {

struct Checkpoint {
    ModelParams params;
    Ablation ablation;
};

/// A checkpoint is a directory of FVT1 tensors (one per named parameter)
/// plus metadata.json with {d, C, heads, encoder_kind, seed, logit_scale,
/// ablation, input_pixels}. Parameter storage is 32-bit like every tensor
/// payload.
void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params,
                     const Ablation& ablation = {});
Checkpoint load_checkpoint(const std::filesystem::path& dir);

} // namespace fognet
