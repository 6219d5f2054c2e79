#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tvr/common.hpp"

namespace tvr {

// A fixed-resolution grayscale frame sequence. Frames are H*W luminance
// planes, row-major. Immutable by convention after construction.
struct VideoClip {
    int width = 0;
    int height = 0;
    std::vector<std::vector<std::uint8_t>> frames;
    std::string source_id;

    int frame_count() const { return static_cast<int>(frames.size()); }

    std::uint8_t at(int t, int x, int y) const {
        return frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(y) * width + x];
    }

    void validate() const {
        if (frames.empty()) throw DataError("clip has zero frames: " + source_id);
        if (width < 1 || height < 1) throw DataError("clip has empty resolution: " + source_id);
        const std::size_t plane = static_cast<std::size_t>(width) * height;
        for (const auto& f : frames)
            if (f.size() != plane)
                throw DataError("frame size mismatch in clip: " + source_id);
    }
};

struct ManifestEntry {
    std::string clip_path;
    std::string label;
    std::string group;
    int duration_frames = 0;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::filesystem::path root;  // base for relative clip paths; not serialized

    std::filesystem::path clip_file(std::size_t i) const {
        std::filesystem::path p(entries[i].clip_path);
        return p.is_absolute() ? p : root / p;
    }

    std::vector<std::string> class_labels() const {
        std::vector<std::string> out;
        for (const auto& e : entries)
            if (std::find(out.begin(), out.end(), e.label) == out.end()) out.push_back(e.label);
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<std::string> group_ids() const {
        std::vector<std::string> out;
        for (const auto& e : entries)
            if (std::find(out.begin(), out.end(), e.group) == out.end()) out.push_back(e.group);
        std::sort(out.begin(), out.end());
        return out;
    }

    void validate() const {
        if (entries.empty()) throw DataError("manifest has no entries");
        for (const auto& e : entries) {
            if (e.duration_frames < 1)
                throw DataError("non-positive duration for clip " + e.clip_path);
            if (e.group.empty()) throw DataError("empty group id for clip " + e.clip_path);
            if (e.label.empty()) throw DataError("empty label for clip " + e.clip_path);
        }
    }
};

// ---------------------------------------------------------------------------
// PGM (P5, 8-bit) frame files
// ---------------------------------------------------------------------------

namespace detail {

inline int pgm_read_token(std::istream& is) {
    // Skips whitespace and '#' comment lines, then reads one integer.
    for (;;) {
        int c = is.peek();
        if (c == '#') {
            std::string line;
            std::getline(is, line);
        } else if (std::isspace(c)) {
            is.get();
        } else {
            break;
        }
    }
    int v;
    if (!(is >> v)) throw DataError("malformed PGM header");
    return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> load_pgm(const std::filesystem::path& path, int& width, int& height) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open PGM file: " + path.string());
    char p, five;
    is.get(p);
    is.get(five);
    if (p != 'P' || five != '5') throw DataError("not a P5 PGM file: " + path.string());
    width = detail::pgm_read_token(is);
    height = detail::pgm_read_token(is);
    int maxval = detail::pgm_read_token(is);
    if (maxval != 255) throw DataError("only 8-bit PGM supported: " + path.string());
    is.get();  // single whitespace after maxval
    std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height);
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!is) throw DataError("truncated PGM file: " + path.string());
    return data;
}

inline void save_pgm(const std::filesystem::path& path, const std::uint8_t* data, int width,
                     int height) {
    atomic_write(path, [&](std::ostream& os) {
        os << "P5\n" << width << " " << height << "\n255\n";
        os.write(reinterpret_cast<const char*>(data),
                 static_cast<std::streamsize>(static_cast<std::size_t>(width) * height));
    });
}

// ---------------------------------------------------------------------------
// Packed clip container: "VCLP", u32 width, u32 height, u32 frame_count,
// then raw u8 luminance, frame-major.
// ---------------------------------------------------------------------------

inline void save_clip(const std::filesystem::path& path, const VideoClip& clip) {
    clip.validate();
    atomic_write(path, [&](std::ostream& os) {
        os.write("VCLP", 4);
        write_u32(os, static_cast<std::uint32_t>(clip.width));
        write_u32(os, static_cast<std::uint32_t>(clip.height));
        write_u32(os, static_cast<std::uint32_t>(clip.frames.size()));
        for (const auto& f : clip.frames)
            os.write(reinterpret_cast<const char*>(f.data()),
                     static_cast<std::streamsize>(f.size()));
    });
}

inline VideoClip load_clip_container(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open clip container: " + path.string());
    expect_magic(is, "VCLP", "clip container");
    VideoClip clip;
    clip.width = static_cast<int>(read_u32(is));
    clip.height = static_cast<int>(read_u32(is));
    std::uint32_t n = read_u32(is);
    clip.source_id = path.string();
    const std::size_t plane = static_cast<std::size_t>(clip.width) * clip.height;
    clip.frames.resize(n);
    for (auto& f : clip.frames) {
        f.resize(plane);
        is.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(plane));
        if (!is) throw DataError("truncated clip container: " + path.string());
    }
    clip.validate();
    return clip;
}

// Loads either a packed container or a directory of PGM frames
// (lexicographic filename order defines time).
inline VideoClip load_frame_sequence(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) throw DataError("no such clip path: " + path.string());
    if (fs::is_regular_file(path)) return load_clip_container(path);

    std::vector<fs::path> files;
    for (const auto& ent : fs::directory_iterator(path))
        if (ent.is_regular_file()) files.push_back(ent.path());
    std::sort(files.begin(), files.end());

    VideoClip clip;
    clip.source_id = path.string();
    for (const auto& f : files) {
        int w, h;
        auto data = load_pgm(f, w, h);
        if (clip.frames.empty()) {
            clip.width = w;
            clip.height = h;
        } else if (w != clip.width || h != clip.height) {
            throw DataError("frame dimension mismatch in " + path.string() + " at " + f.string());
        }
        clip.frames.push_back(std::move(data));
    }
    if (clip.frames.empty()) throw DataError("no frames found in " + path.string());
    return clip;
}

// ---------------------------------------------------------------------------
// Temporal transforms
// ---------------------------------------------------------------------------

// Keeps frames 0, stride, 2*stride, ... Output length = ceil(T/stride).
inline VideoClip temporal_subsample(const VideoClip& clip, int stride) {
    if (stride < 1) throw DataError("subsample stride must be >= 1");
    VideoClip out;
    out.width = clip.width;
    out.height = clip.height;
    out.source_id = clip.source_id;
    for (int t = 0; t < clip.frame_count(); t += stride) out.frames.push_back(clip.frames[t]);
    return out;
}

// Per-pixel temporal Gaussian with std dev alpha, kernel truncated at
// 3*alpha and renormalized at clip boundaries. alpha = 0 is the identity.
inline VideoClip temporal_smooth(const VideoClip& clip, double alpha) {
    if (alpha < 0) throw DataError("smoothing alpha must be >= 0");
    clip.validate();
    if (alpha == 0.0) return clip;

    const int radius = static_cast<int>(std::ceil(3.0 * alpha));
    std::vector<double> kernel(2 * radius + 1);
    for (int k = -radius; k <= radius; ++k)
        kernel[k + radius] = std::exp(-0.5 * (k * k) / (alpha * alpha));

    const int T = clip.frame_count();
    const std::size_t plane = static_cast<std::size_t>(clip.width) * clip.height;
    VideoClip out;
    out.width = clip.width;
    out.height = clip.height;
    out.source_id = clip.source_id;
    out.frames.assign(T, std::vector<std::uint8_t>(plane));

    std::vector<double> acc(plane);
    for (int t = 0; t < T; ++t) {
        std::fill(acc.begin(), acc.end(), 0.0);
        double wsum = 0.0;
        for (int k = -radius; k <= radius; ++k) {
            int s = t + k;
            if (s < 0 || s >= T) continue;
            double w = kernel[k + radius];
            wsum += w;
            const auto& src = clip.frames[s];
            for (std::size_t i = 0; i < plane; ++i) acc[i] += w * src[i];
        }
        auto& dst = out.frames[t];
        for (std::size_t i = 0; i < plane; ++i) {
            double v = acc[i] / wsum;
            dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest: UTF-8 lines of clip_path<TAB>label<TAB>group<TAB>duration_frames
// ---------------------------------------------------------------------------

inline void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    atomic_write(path, [&](std::ostream& os) {
        for (const auto& e : manifest.entries)
            os << e.clip_path << '\t' << e.label << '\t' << e.group << '\t' << e.duration_frames
               << '\n';
    });
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open manifest: " + path.string());
    DatasetManifest m;
    m.root = path.parent_path();
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        ManifestEntry e;
        std::string dur;
        if (!std::getline(ss, e.clip_path, '\t') || !std::getline(ss, e.label, '\t') ||
            !std::getline(ss, e.group, '\t') || !std::getline(ss, dur))
            throw DataError("malformed manifest line " + std::to_string(lineno) + " in " +
                            path.string());
        e.duration_frames = std::stoi(dur);
        m.entries.push_back(std::move(e));
    }
    m.validate();
    return m;
}

}  // namespace tvr
