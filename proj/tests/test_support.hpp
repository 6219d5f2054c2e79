#pragma once

#include <filesystem>
#include <string>

#include "tvr/common.hpp"
#include "tvr/video.hpp"

namespace tvr_test {

// Scoped temp directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("tvr_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline tvr::VideoClip flat_clip(int w, int h, int frames, std::uint8_t value) {
    tvr::VideoClip clip;
    clip.width = w;
    clip.height = h;
    clip.frames.assign(frames, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, value));
    clip.source_id = "flat";
    return clip;
}

inline tvr::VideoClip noise_clip(int w, int h, int frames, std::uint64_t seed) {
    tvr::Rng rng(seed);
    tvr::VideoClip clip;
    clip.width = w;
    clip.height = h;
    clip.source_id = "noise";
    for (int t = 0; t < frames; ++t) {
        std::vector<std::uint8_t> f(static_cast<std::size_t>(w) * h);
        for (auto& v : f) v = static_cast<std::uint8_t>(rng.below(256));
        clip.frames.push_back(std::move(f));
    }
    return clip;
}

// Static textured clip: the same noise frame repeated.
inline tvr::VideoClip static_textured_clip(int w, int h, int frames, std::uint64_t seed) {
    auto one = noise_clip(w, h, 1, seed);
    tvr::VideoClip clip;
    clip.width = w;
    clip.height = h;
    clip.source_id = "static";
    clip.frames.assign(frames, one.frames[0]);
    return clip;
}

}  // namespace tvr_test

#include "tvr/synthetic.hpp"

namespace tvr_test {

// Bright dot translating at a scripted per-frame velocity on a flat
// background; the script itself is the ground-truth oracle.
inline tvr::VideoClip moving_dot_clip(int res, int frames, double x0, double y0, double vx,
                                      double vy) {
    tvr::VideoClip clip;
    clip.width = res;
    clip.height = res;
    clip.source_id = "dot";
    std::vector<std::uint8_t> bg(static_cast<std::size_t>(res) * res, 40);
    clip.frames.resize(frames);
    for (int t = 0; t < frames; ++t)
        tvr::detail::render_blob(clip.frames[t], bg, res, x0 + vx * t, y0 + vy * t, 4.0);
    return clip;
}

}  // namespace tvr_test
