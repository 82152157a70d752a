#include "fognet/fogsynth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fognet/errors.hpp"
#include "fognet/rng.hpp"
#include "fognet/tensor.hpp"
#include "fognet/tensor_io.hpp"

namespace fognet {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Render geometry, as fractions of the short frame side.
constexpr double kCenterJitterFrac = 0.10;
constexpr double kSigmaLoFrac = 0.09;
constexpr double kSigmaHiFrac = 0.12;
constexpr double kSpritePeak = 0.95;
constexpr double kBackgroundBase = 0.18;
constexpr double kBackgroundWaveAmp = 0.10;
constexpr double kBackgroundNoiseAmp = 0.05;
constexpr double kDepthSprite = 1.0;
constexpr double kDepthBackground = 3.0;
constexpr double kSpriteOccupancy = 0.35; // blob weight above which a pixel counts as sprite

struct SpriteTrack {
    double dx = 0.0;
    double dy = 0.0;
    double sigma = 0.0;
};

void apply_view_inplace(std::vector<double>& plane, std::size_t h, std::size_t w, int view) {
    if (view == 0) return;
    std::vector<double> src = plane;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            std::size_t sy = y, sx = x;
            if (view == 1) sx = w - 1 - x;
            if (view == 2) sy = h - 1 - y;
            if (view == 3) { sx = w - 1 - x; sy = h - 1 - y; }
            plane[y * w + x] = src[sy * w + sx];
        }
    }
}

std::string format_index(std::size_t i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%03zu", i);
    return buf;
}

// Clip payloads are stored as 32-bit floats. Rounding the clean clip through
// storage precision before fogging keeps "foggy == fog(stored clean)" exact
// at the byte level, not just up to a rounding ulp.
void round_to_storage(Clip& clip) {
    for (double& v : clip.frames) v = static_cast<double>(static_cast<float>(v));
    for (double& v : clip.depth) v = static_cast<double>(static_cast<float>(v));
}

} // namespace

void Clip::validate() const {
    if (frame_count < 2) {
        throw ParameterError("clip: needs at least 2 frames, got " + std::to_string(frame_count));
    }
    if (frames.size() != frame_count * height * width) {
        throw DimensionError("clip: frame buffer size " + std::to_string(frames.size()) +
                             " does not match " + std::to_string(frame_count) + "x" +
                             std::to_string(height) + "x" + std::to_string(width));
    }
    if (depth.size() != height * width) {
        throw DimensionError("clip: depth buffer size " + std::to_string(depth.size()) +
                             " does not match " + std::to_string(height) + "x" + std::to_string(width));
    }
    for (const double v : frames) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ParameterError("clip: intensity " + std::to_string(v) + " outside [0,1]");
        }
    }
    for (const double d : depth) {
        if (!(d > 0.0)) throw ParameterError("clip: non-positive depth " + std::to_string(d));
    }
}

std::vector<IntensitySpec> default_intensities() {
    return {
        {FogIntensity::Light, FogParams{0.3, 0.9}},
        {FogIntensity::Dense, FogParams{0.8, 0.9}},
    };
}

std::vector<ActionClassSpec> builtin_action_classes(std::size_t frame_size, std::size_t frames) {
    const double s = static_cast<double>(frame_size);
    const double period = static_cast<double>(frames);
    return {
        {"wave", MotionKind::OscillateHorizontal, 0.20 * s, period},
        {"jump", MotionKind::OscillateVertical, 0.20 * s, period},
        {"spin", MotionKind::Circle, 0.16 * s, period},
        {"drift", MotionKind::Diagonal, 0.16 * s, period},
        {"pulse", MotionKind::GrowShrink, 0.045 * s, period},
        {"stand", MotionKind::StaticJitter, 0.03 * s, period},
    };
}

Clip fog_apply(const Clip& clean, const FogParams& fog) {
    if (fog.beta_fog < 0.0) {
        throw ParameterError("fog_apply: beta_fog must be >= 0, got " + std::to_string(fog.beta_fog));
    }
    if (!(fog.airlight >= 0.0 && fog.airlight <= 1.0)) {
        throw ParameterError("fog_apply: airlight must be in [0,1], got " + std::to_string(fog.airlight));
    }
    clean.validate();

    const std::size_t hw = clean.height * clean.width;
    std::vector<double> transmission(hw);
    for (std::size_t i = 0; i < hw; ++i) transmission[i] = std::exp(-fog.beta_fog * clean.depth[i]);

    Clip out = clean;
    for (std::size_t t = 0; t < clean.frame_count; ++t) {
        for (std::size_t i = 0; i < hw; ++i) {
            const double tr = transmission[i];
            out.frames[t * hw + i] = clean.frames[t * hw + i] * tr + fog.airlight * (1.0 - tr);
        }
    }
    return out;
}

Clip render_action_clip(const ActionClassSpec& spec, std::uint64_t seed, int view,
                        std::size_t frames, std::size_t height, std::size_t width) {
    if (frames < 2) throw ParameterError("render: needs at least 2 frames");
    if (view < 0 || view >= 4) {
        throw ParameterError("render: view must be in [0,4), got " + std::to_string(view));
    }
    if (!(spec.period > 0.0)) throw ParameterError("render: period must be positive");
    if (spec.amplitude < 0.0) throw ParameterError("render: amplitude must be >= 0");

    const double s = static_cast<double>(std::min(height, width));
    const double jitter = kCenterJitterFrac * s;
    const double sigma_hi = kSigmaHiFrac * s;
    // Worst-case sprite excursion must stay inside the frame for any draw.
    const double excursion = spec.amplitude + jitter +
                             (spec.motion_kind == MotionKind::GrowShrink ? sigma_hi + spec.amplitude : sigma_hi);
    if (excursion > s / 2.0 - 1.0) {
        throw ParameterError("render: amplitude " + std::to_string(spec.amplitude) +
                             " pushes the sprite outside a " + std::to_string(height) + "x" +
                             std::to_string(width) + " frame");
    }
    if (spec.motion_kind == MotionKind::GrowShrink && spec.amplitude >= kSigmaLoFrac * s - 0.5) {
        throw ParameterError("render: grow_shrink amplitude " + std::to_string(spec.amplitude) +
                             " collapses the sprite");
    }

    Rng rng(seed);

    // Static textured background.
    const double kx = 1.0 + static_cast<double>(rng.below(3));
    const double ky = 1.0 + static_cast<double>(rng.below(3));
    const double bg_phase = rng.uniform(0.0, kTwoPi);
    const std::size_t hw = height * width;
    std::vector<double> background(hw);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double wave = std::sin(kTwoPi * (kx * static_cast<double>(x) / static_cast<double>(width) +
                                                   ky * static_cast<double>(y) / static_cast<double>(height)) +
                                         bg_phase);
            double v = kBackgroundBase + kBackgroundWaveAmp * wave +
                       kBackgroundNoiseAmp * rng.uniform(-1.0, 1.0);
            background[y * width + x] = std::clamp(v, 0.02, 0.40);
        }
    }

    // Sprite trajectory.
    const double cx0 = static_cast<double>(width) / 2.0 + rng.uniform(-jitter, jitter);
    const double cy0 = static_cast<double>(height) / 2.0 + rng.uniform(-jitter, jitter);
    const double phase = rng.uniform(0.0, kTwoPi);
    const double sigma0 = rng.uniform(kSigmaLoFrac * s, kSigmaHiFrac * s);
    const double inv_sqrt2 = 0.70710678118654752440;

    std::vector<SpriteTrack> track(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        const double theta = kTwoPi * static_cast<double>(t) / spec.period + phase;
        SpriteTrack p;
        p.sigma = sigma0;
        switch (spec.motion_kind) {
            case MotionKind::OscillateHorizontal: p.dx = spec.amplitude * std::sin(theta); break;
            case MotionKind::OscillateVertical: p.dy = spec.amplitude * std::sin(theta); break;
            case MotionKind::Circle:
                p.dx = spec.amplitude * std::cos(theta);
                p.dy = spec.amplitude * std::sin(theta);
                break;
            case MotionKind::Diagonal:
                p.dx = spec.amplitude * std::sin(theta) * inv_sqrt2;
                p.dy = spec.amplitude * std::sin(theta) * inv_sqrt2;
                break;
            case MotionKind::GrowShrink: p.sigma = sigma0 + spec.amplitude * std::sin(theta); break;
            case MotionKind::StaticJitter:
                p.dx = spec.amplitude * rng.uniform(-1.0, 1.0);
                p.dy = spec.amplitude * rng.uniform(-1.0, 1.0);
                break;
        }
        track[t] = p;
    }

    Clip clip;
    clip.frame_count = frames;
    clip.height = height;
    clip.width = width;
    clip.frames.assign(frames * hw, 0.0);
    std::vector<double> occupancy(hw, 0.0);

    for (std::size_t t = 0; t < frames; ++t) {
        const double cx = cx0 + track[t].dx;
        const double cy = cy0 + track[t].dy;
        const double inv2s2 = 1.0 / (2.0 * track[t].sigma * track[t].sigma);
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                const double ddx = static_cast<double>(x) - cx;
                const double ddy = static_cast<double>(y) - cy;
                const double w = std::exp(-(ddx * ddx + ddy * ddy) * inv2s2);
                const double bg = background[y * width + x];
                clip.frames[(t * height + y) * width + x] = bg + (kSpritePeak - bg) * w;
                occupancy[y * width + x] = std::max(occupancy[y * width + x], w);
            }
        }
    }

    clip.depth.resize(hw);
    for (std::size_t i = 0; i < hw; ++i) {
        clip.depth[i] = occupancy[i] > kSpriteOccupancy ? kDepthSprite : kDepthBackground;
    }

    for (std::size_t t = 0; t < frames; ++t) {
        std::vector<double> plane(clip.frames.begin() + static_cast<std::ptrdiff_t>(t * hw),
                                  clip.frames.begin() + static_cast<std::ptrdiff_t>((t + 1) * hw));
        apply_view_inplace(plane, height, width, view);
        std::copy(plane.begin(), plane.end(), clip.frames.begin() + static_cast<std::ptrdiff_t>(t * hw));
    }
    apply_view_inplace(clip.depth, height, width, view);
    return clip;
}

void save_clip(const std::filesystem::path& base, const Clip& clip) {
    Tensor frames({clip.frame_count, clip.height, clip.width}, clip.frames);
    Tensor depth({clip.height, clip.width}, clip.depth);
    write_fvt(base.string() + ".frames.fvt", frames);
    write_fvt(base.string() + ".depth.fvt", depth);
}

Clip load_clip(const std::filesystem::path& base, bool with_depth) {
    const Tensor frames = read_fvt(base.string() + ".frames.fvt");
    if (frames.ndim() != 3) {
        throw IoError("clip: expected 3-D frame tensor in " + base.string() + ".frames.fvt, got " +
                      shape_str(frames.shape()));
    }
    Clip clip;
    clip.frame_count = frames.shape()[0];
    clip.height = frames.shape()[1];
    clip.width = frames.shape()[2];
    clip.frames = frames.raw();
    if (with_depth) {
        const Tensor depth = read_fvt(base.string() + ".depth.fvt");
        if (depth.ndim() != 2 || depth.shape()[0] != clip.height || depth.shape()[1] != clip.width) {
            throw IoError("clip: depth shape " + shape_str(depth.shape()) + " does not match frames in " +
                          base.string());
        }
        clip.depth = depth.raw();
    } else {
        clip.depth.assign(clip.height * clip.width, kDepthBackground);
    }
    return clip;
}

PairedSample load_paired_sample(const std::filesystem::path& manifest_dir, const ManifestEntry& entry,
                                bool with_depth) {
    PairedSample s;
    s.id = entry.id;
    s.foggy = load_clip(manifest_dir / entry.foggy_path, with_depth);
    s.clean = load_clip(manifest_dir / entry.clean_path, with_depth);
    s.label = entry.label;
    s.intensity = entry.intensity;
    s.view = entry.view;
    s.split = entry.split;
    if (s.foggy.frame_count != s.clean.frame_count || s.foggy.height != s.clean.height ||
        s.foggy.width != s.clean.width) {
        throw IoError("sample " + entry.id + ": foggy/clean clip geometry mismatch");
    }
    return s;
}

std::vector<ManifestEntry> generate_dataset(const DatasetConfig& cfg,
                                            const std::filesystem::path& out_dir) {
    if (cfg.classes.empty()) throw ParameterError("generate: empty class list");
    if (cfg.intensities.empty()) throw ParameterError("generate: empty intensity list");
    if (cfg.views.empty()) throw ParameterError("generate: empty view list");
    if (cfg.clips_per_class < 2) {
        throw ParameterError("generate: clips_per_class must be >= 2, got " +
                             std::to_string(cfg.clips_per_class));
    }
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) {
        throw ParameterError("generate: split_ratio must be in (0,1), got " +
                             std::to_string(cfg.split_ratio));
    }
    for (const int v : cfg.views) {
        if (v < 0 || v >= 4) throw ParameterError("generate: view " + std::to_string(v) + " not in [0,4)");
    }

    std::filesystem::create_directories(out_dir / "clips");

    // Per-class index split shared across intensities and views.
    const std::size_t m = cfg.clips_per_class;
    std::size_t n_train = static_cast<std::size_t>(std::floor(cfg.split_ratio * static_cast<double>(m)));
    n_train = std::clamp<std::size_t>(n_train, 1, m - 1);

    std::vector<std::vector<Split>> split_of(cfg.classes.size(), std::vector<Split>(m, Split::Test));
    for (std::size_t c = 0; c < cfg.classes.size(); ++c) {
        std::vector<std::size_t> order(m);
        for (std::size_t i = 0; i < m; ++i) order[i] = i;
        Rng rng(derive_seed(cfg.seed, "split", {c}));
        rng.shuffle(order);
        for (std::size_t i = 0; i < n_train; ++i) split_of[c][order[i]] = Split::Train;
    }

    std::vector<ManifestEntry> entries;
    entries.reserve(cfg.classes.size() * m * cfg.intensities.size() * cfg.views.size());

    for (std::size_t c = 0; c < cfg.classes.size(); ++c) {
        const ActionClassSpec& cls = cfg.classes[c];
        for (std::size_t i = 0; i < m; ++i) {
            const std::uint64_t clip_seed = derive_seed(cfg.seed, "generation", {c, i});
            for (const int view : cfg.views) {
                Clip clean = render_action_clip(cls, clip_seed, view, cfg.frame_count,
                                                cfg.height, cfg.width);
                round_to_storage(clean);
                const std::string clean_stem =
                    "clips/" + cls.name + "_" + format_index(i) + "_v" + std::to_string(view) + "_clean";
                save_clip(out_dir / clean_stem, clean);

                for (const IntensitySpec& intensity : cfg.intensities) {
                    const Clip foggy = fog_apply(clean, intensity.fog);
                    const std::string id = cls.name + "_" + format_index(i) + "_" +
                                           to_string(intensity.level) + "_v" + std::to_string(view);
                    const std::string foggy_stem = "clips/" + id + "_foggy";
                    save_clip(out_dir / foggy_stem, foggy);

                    ManifestEntry e;
                    e.id = id;
                    e.foggy_path = foggy_stem;
                    e.clean_path = clean_stem;
                    e.label = c;
                    e.label_name = cls.name;
                    e.intensity = intensity.level;
                    e.view = view;
                    e.split = split_of[c][i];
                    entries.push_back(std::move(e));
                }
            }
        }
    }

    write_manifest(out_dir / "manifest.jsonl", entries);
    return entries;
}

} // namespace fognet
