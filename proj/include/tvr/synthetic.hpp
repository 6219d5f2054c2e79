#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tvr/common.hpp"
#include "tvr/video.hpp"

namespace tvr {

enum class SynthMode { Velocity, Order };

struct SynthSpec {
    SynthMode mode = SynthMode::Velocity;
    int classes = 3;          // order mode: must be even (forward/reversed pairs)
    int clips_per_class = 20;
    int resolution = 64;
    int base_length = 60;     // script length in frames at speed factor 1
    int groups = 5;
    double blob_radius = 5.0;
    double jitter_px = 0.45;   // per-frame position noise (velocity mode)
    double flicker_px = 1.2;   // period-2 alternating offset (velocity mode)
    int period_frames = 24;    // oscillation period in script frames (velocity mode)
    int gap_length = 24;       // blank script frames around each phase (order mode)
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Symmetric triangle wave with period `period`, range [-1, 1], zero at 0.
inline double triangle(double tau, double period) {
    double u = tau / period - std::floor(tau / period);  // [0,1)
    return u < 0.25 ? 4 * u : (u < 0.75 ? 2 - 4 * u : 4 * u - 4);
}

inline std::vector<std::uint8_t> textured_background(int res, Rng& rng) {
    std::vector<std::uint8_t> bg(static_cast<std::size_t>(res) * res);
    for (auto& v : bg) v = static_cast<std::uint8_t>(30 + rng.below(70));
    return bg;
}

// Anti-aliased shaded disc composited over the background.
inline void render_blob(std::vector<std::uint8_t>& frame, const std::vector<std::uint8_t>& bg,
                        int res, double cx, double cy, double radius) {
    frame = bg;
    int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
    int x1 = std::min(res - 1, static_cast<int>(std::ceil(cx + radius + 1)));
    int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
    int y1 = std::min(res - 1, static_cast<int>(std::ceil(cy + radius + 1)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double dx = x - cx, dy = y - cy;
            double d = std::sqrt(dx * dx + dy * dy);
            double cover = std::clamp(radius + 0.5 - d, 0.0, 1.0);
            if (cover <= 0) continue;
            // radial shading gives trackable texture inside the disc
            double fg = 150.0 + 105.0 * std::exp(-(d / radius) * (d / radius));
            double v = frame[static_cast<std::size_t>(y) * res + x] * (1.0 - cover) + fg * cover;
            frame[static_cast<std::size_t>(y) * res + x] =
                static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
}

}  // namespace detail

// Velocity-mode motion script: the blob oscillates along a class-specific
// axis at constant path speed; playback speed factor s compresses the script
// so per-frame displacement scales with s while frame count shrinks by 1/s.
// Two observation-noise terms do NOT scale with s: uniform per-frame jitter,
// and a period-2 alternating "flicker" along a random per-clip axis. The
// flicker dominates per-step displacements at stride 1 but aliases to zero
// at stride 2, so multi-stride sampling recovers the motion direction that
// the native frame rate buries.
inline VideoClip render_velocity_clip(const SynthSpec& spec, int cls, double speed,
                                      std::uint64_t clip_seed) {
    Rng rng(clip_seed);
    const int res = spec.resolution;
    const double theta = 3.14159265358979 * cls / std::max(2, spec.classes);  // axis per class
    const double ux = std::cos(theta), uy = std::sin(theta);
    const double period = spec.period_frames;         // several cycles per script
    const double amplitude = 0.5 * period / 4.0;      // path speed 4A/P = 0.5 px/script-frame
    const double phase = rng.uniform(0.0, period);
    const double cx0 = res / 2.0 + rng.uniform(-3.0, 3.0);
    const double cy0 = res / 2.0 + rng.uniform(-3.0, 3.0);
    const double ntheta = rng.uniform(0.0, 2.0 * 3.14159265358979);  // flicker axis
    const double nx = std::cos(ntheta), ny = std::sin(ntheta);
    auto bg = detail::textured_background(res, rng);

    VideoClip clip;
    clip.width = res;
    clip.height = res;
    const int T = std::max(2, static_cast<int>(std::lround(spec.base_length / speed)));
    clip.frames.resize(T);
    for (int t = 0; t < T; ++t) {
        double tau = t * speed + phase;
        double off = amplitude * detail::triangle(tau, period);
        double jx = rng.uniform(-spec.jitter_px, spec.jitter_px);
        double jy = rng.uniform(-spec.jitter_px, spec.jitter_px);
        double flick = (t % 2 == 0 ? 1.0 : -1.0) * spec.flicker_px;
        detail::render_blob(clip.frames[t], bg, res, cx0 + ux * off + nx * flick + jx,
                            cy0 + uy * off + ny * flick + jy, spec.blob_radius);
    }
    return clip;
}

// Order-mode forward script: two palindromic phases. Phase 1 sweeps
// horizontally in the upper half, phase 2 vertically in the lower half.
// Each phase is a constant-speed out-and-back whose frame positions are an
// exact frame-level palindrome (u_k = min(k, P-1-k) * step), so a phase
// played backwards is the identical frame sequence. Blank-background gaps
// longer than the tracking window surround each phase. Reversing the whole
// clip therefore yields exactly the frames of a clip with the phases in the
// opposite order: the bag of (appearance, position, motion) observations is
// identical between the paired classes and only the temporal order of the
// two phases separates them.
inline VideoClip render_order_clip(const SynthSpec& spec, double speed, std::uint64_t clip_seed) {
    Rng rng(clip_seed);
    const int res = spec.resolution;
    // band geometry keeps the two phases (plus the blob and the flow
    // estimator's patch reach) in disjoint horizontal bands, so neither
    // phase's tracking state depends on the other having played
    const double amp = res * 0.15 + rng.uniform(-1.0, 1.0);
    const double cxa = res / 2.0 + rng.uniform(-2.0, 2.0);
    const double cya = res * 0.25 + rng.uniform(-1.0, 1.0);
    const double cxb = res / 2.0 + rng.uniform(-2.0, 2.0);
    const double cyb = res * 0.7 + rng.uniform(-1.0, 1.0);
    auto bg = detail::textured_background(res, rng);

    // playback-frame counts: speed compresses both phases and gaps
    const int P = std::max(4, static_cast<int>(std::lround(spec.base_length / 2.0 / speed)));
    const int G = std::max(2, static_cast<int>(std::lround(spec.gap_length / speed)));
    const double step = 2.0 * amp / (P - 1);  // px per frame, out-and-back

    // Dense-grid tracking reseeds an undisturbed cell every track_length
    // frames (a seed placed at t emits after gaining its 15th displacement
    // and the cell reseeds at t+15), so a phase's trajectory timing depends
    // on its start frame modulo that cycle. Pad the middle gap until both
    // phases start at the same cycle offset; with the phases also spatially
    // disjoint this makes the tracked features of a phase identical whether
    // it plays first or second, which keeps the forward/reversed bags equal.
    const int cycle = 15;
    const int mid_gap = G + (cycle - (G + P) % cycle) % cycle;

    VideoClip clip;
    clip.width = res;
    clip.height = res;
    clip.frames.resize(static_cast<std::size_t>(2 * G + mid_gap + 2 * P));
    int t = 0;
    auto blank = [&](int n) {
        for (int i = 0; i < n; ++i) clip.frames[t++] = bg;
    };
    auto phase = [&](double cx, double cy, bool horizontal) {
        for (int k = 0; k < P; ++k) {
            double off = step * std::min(k, P - 1 - k);
            detail::render_blob(clip.frames[t++], bg, res, cx + (horizontal ? off : 0.0),
                                cy + (horizontal ? 0.0 : off), spec.blob_radius);
        }
    };
    blank(G);
    phase(cxa, cya, true);
    blank(mid_gap);
    phase(cxb, cyb, false);
    blank(G);
    return clip;
}

// Per-class playback-speed sampler for velocity mode: every class spans the
// full 1x-3x factor range, but the distribution shape differs -- higher
// class indices skew toward slow playback (s = 1 + 2u^p with a larger
// exponent p), which stretches durations and widens each class's relative
// duration spread.
inline double velocity_speed_exponent(const SynthSpec& spec, int cls) {
    // exponents 0.5 .. 2.5 spread evenly across classes
    if (spec.classes == 1) return 1.0;
    return 0.5 + 2.0 * cls / (spec.classes - 1);
}

inline double sample_velocity_speed(const SynthSpec& spec, int cls, Rng& rng) {
    double u = rng.uniform(0.0, 1.0);
    return 1.0 + 2.0 * std::pow(u, velocity_speed_exponent(spec, cls));
}

// Generates the clips on disk (packed containers) plus the manifest.
// Pure function of (spec, seed): identical inputs give byte-identical files.
inline DatasetManifest generate_synthetic_dataset(const SynthSpec& spec, std::uint64_t seed,
                                                  const std::filesystem::path& out_dir) {
    if (spec.classes < 2) throw ConfigError("synthetic dataset needs >= 2 classes");
    if (spec.clips_per_class < 2) throw ConfigError("synthetic dataset needs >= 2 clips per class");
    if (spec.mode == SynthMode::Order && spec.classes % 2 != 0)
        throw ConfigError("order mode needs an even class count (forward/reversed pairs)");
    std::filesystem::create_directories(out_dir);

    DatasetManifest manifest;
    manifest.root = out_dir;
    for (int cls = 0; cls < spec.classes; ++cls) {
        for (int i = 0; i < spec.clips_per_class; ++i) {
            VideoClip clip;
            std::string label;
            if (spec.mode == SynthMode::Velocity) {
                std::uint64_t cs = detail::mix_seed(seed, cls * 100003ULL + i);
                Rng srng(detail::mix_seed(cs, 17));
                double speed = sample_velocity_speed(spec, cls, srng);
                clip = render_velocity_clip(spec, cls, speed, cs);
                label = "class" + std::to_string(cls);
            } else {
                // paired classes share the per-clip seed so class 2j+1 is the
                // exact frame reversal of class 2j
                int pair = cls / 2;
                bool reversed = (cls % 2) != 0;
                std::uint64_t cs = detail::mix_seed(seed, pair * 100003ULL + i);
                Rng srng(detail::mix_seed(cs, 17));
                double speed = srng.uniform(1.0, 1.3);
                clip = render_order_clip(spec, speed, cs);
                if (reversed) std::reverse(clip.frames.begin(), clip.frames.end());
                label = (reversed ? "rev" : "fwd") + std::to_string(pair);
            }
            char name[64];
            std::snprintf(name, sizeof(name), "clip_c%02d_i%04d.vclp", cls, i);
            auto path = out_dir / name;
            clip.source_id = path.string();
            save_clip(path, clip);

            ManifestEntry e;
            e.clip_path = name;  // relative to the manifest directory
            e.label = label;
            e.group = "g" + std::to_string(i % spec.groups);
            e.duration_frames = clip.frame_count();
            manifest.entries.push_back(std::move(e));
        }
    }
    save_manifest(out_dir / "manifest.tsv", manifest);
    return manifest;
}

}  // namespace tvr
