#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fognet/manifest.hpp"

namespace fognet {

/// Grayscale video clip with a static per-pixel depth map.
struct Clip {
    std::size_t frame_count = 0; // T
    std::size_t height = 0;      // H
    std::size_t width = 0;       // W
    std::vector<double> frames;  // T*H*W, row-major, intensities in [0,1]
    std::vector<double> depth;   // H*W, strictly positive
    int fps = 25;                // informational

    double at(std::size_t t, std::size_t y, std::size_t x) const {
        return frames[(t * height + y) * width + x];
    }
    double depth_at(std::size_t y, std::size_t x) const { return depth[y * width + x]; }

    /// Enforces the clip invariants (bounds, positivity, T >= 2).
    void validate() const;
};

/// Atmospheric scattering parameters: per-depth-unit scattering coefficient
/// and atmospheric light.
struct FogParams {
    double beta_fog = 0.0; // >= 0
    double airlight = 1.0; // in [0, 1]
};

enum class MotionKind {
    OscillateHorizontal,
    OscillateVertical,
    Circle,
    Diagonal,
    GrowShrink,
    StaticJitter,
};

/// Procedural action class: a Gaussian-blob sprite following one motion
/// pattern over a textured static background.
struct ActionClassSpec {
    std::string name;
    MotionKind motion_kind = MotionKind::StaticJitter;
    double amplitude = 0.0; // pixels (sigma modulation depth for GrowShrink)
    double period = 8.0;    // frames per motion cycle
};

struct PairedSample {
    std::string id;
    Clip foggy;
    Clip clean;
    std::size_t label = 0;
    FogIntensity intensity = FogIntensity::Light;
    int view = 0;
    Split split = Split::Train;
};

struct IntensitySpec {
    FogIntensity level = FogIntensity::Light;
    FogParams fog;
};

/// Local presets: light beta 0.3, dense beta 0.8, airlight 0.9 for both.
std::vector<IntensitySpec> default_intensities();

/// The six built-in motion classes sized for frame_size x frame_size frames.
std::vector<ActionClassSpec> builtin_action_classes(std::size_t frame_size, std::size_t frames);

/// Scattering model: per pixel, I = J * t + A * (1 - t) with
/// t = exp(-beta_fog * depth). Depth map is copied unchanged; beta_fog = 0
/// reproduces the input bit-exactly.
Clip fog_apply(const Clip& clean, const FogParams& fog);

/// Renders one clean clip, deterministic in (spec, seed, view, T, H, W).
/// Views 0..3 apply identity / horizontal flip / vertical flip / 180-degree
/// rotation to frames and depth alike. Sprite pixels get depth 1.0,
/// background 3.0.
Clip render_action_clip(const ActionClassSpec& spec, std::uint64_t seed, int view,
                        std::size_t frames, std::size_t height, std::size_t width);

struct DatasetConfig {
    std::vector<ActionClassSpec> classes;
    std::size_t clips_per_class = 2;
    std::vector<IntensitySpec> intensities = default_intensities();
    std::vector<int> views = {0};
    double split_ratio = 0.8;
    std::uint64_t seed = 42;
    std::size_t frame_count = 8;
    std::size_t height = 32;
    std::size_t width = 32;
};

/// Renders the full paired dataset under out_dir (clips/ plus
/// manifest.jsonl) and returns the manifest entries. The train/test split is
/// a seeded per-class shuffle of clip indices shared across intensities and
/// views, so every (class, intensity, view) cell splits identically and every
/// class appears in both splits.
std::vector<ManifestEntry> generate_dataset(const DatasetConfig& cfg,
                                            const std::filesystem::path& out_dir);

/// Clip payload I/O; base is the path stem without the .frames/.depth suffix.
void save_clip(const std::filesystem::path& base, const Clip& clip);
Clip load_clip(const std::filesystem::path& base, bool with_depth = true);

/// Loads the clip pair referenced by a manifest entry.
PairedSample load_paired_sample(const std::filesystem::path& manifest_dir, const ManifestEntry& entry,
                                bool with_depth = true);

} // namespace fognet
