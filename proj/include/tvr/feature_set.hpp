#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "tvr/common.hpp"

namespace tvr {

using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixD = Eigen::MatrixXd;

// Fixed descriptor channel order used throughout the pipeline.
inline const std::vector<std::string>& channel_order() {
    static const std::vector<std::string> names{"traj", "hog", "hof", "mbh"};
    return names;
}

struct FeatureLocation {
    float x_norm = 0, y_norm = 0, t_norm = 0;
    std::uint32_t frame_index = 0;
    std::uint32_t stride_tag = 0;  // TSP level v that produced the row
};

// A clip's bag of local features: named per-channel descriptor matrices,
// row-aligned across channels, plus per-row locations.
struct FeatureSet {
    std::vector<std::string> channel_names;
    std::vector<MatrixF> channels;
    std::vector<FeatureLocation> locations;
    std::uint32_t clip_frame_count = 0;
    bool ted_applied = false;
    std::uint64_t processed_frames = 0;  // extraction cost counter, not persisted

    Eigen::Index rows() const { return channels.empty() ? 0 : channels.front().rows(); }

    int channel_index(const std::string& name) const {
        for (std::size_t i = 0; i < channel_names.size(); ++i)
            if (channel_names[i] == name) return static_cast<int>(i);
        return -1;
    }

    void validate() const {
        if (channels.size() != channel_names.size())
            throw DataError("feature set channel name/matrix count mismatch");
        for (const auto& c : channels)
            if (c.rows() != rows()) throw DataError("feature set channels not row-aligned");
        if (static_cast<Eigen::Index>(locations.size()) != rows())
            throw DataError("feature set locations not row-aligned");
    }

    // Stride-major concatenation of two row-aligned sets is handled by the
    // caller; this appends rows of `other` (same channel layout) after ours.
    void append(const FeatureSet& other) {
        if (channels.empty()) {
            *this = other;
            return;
        }
        if (other.channel_names != channel_names)
            throw DataError("cannot append feature sets with different channel layouts");
        for (std::size_t c = 0; c < channels.size(); ++c) {
            MatrixF merged(channels[c].rows() + other.channels[c].rows(), channels[c].cols());
            merged.topRows(channels[c].rows()) = channels[c];
            merged.bottomRows(other.channels[c].rows()) = other.channels[c];
            channels[c] = std::move(merged);
        }
        locations.insert(locations.end(), other.locations.begin(), other.locations.end());
        processed_frames += other.processed_frames;
    }
};

// TFEA file: magic, u32 version, u8 ted_applied, u32 clip_frame_count,
// u32 n_rows, u32 n_channels; per channel: name, u32 dim, rows*dim f32;
// then per row: f32 x_norm, y_norm, t_norm, u32 frame_index, u32 stride_tag.
inline void save_feature_set(const std::filesystem::path& path, const FeatureSet& fs) {
    fs.validate();
    atomic_write(path, [&](std::ostream& os) {
        os.write("TFEA", 4);
        write_u32(os, 1);
        char flag = fs.ted_applied ? 1 : 0;
        os.write(&flag, 1);
        write_u32(os, fs.clip_frame_count);
        write_u32(os, static_cast<std::uint32_t>(fs.rows()));
        write_u32(os, static_cast<std::uint32_t>(fs.channels.size()));
        for (std::size_t c = 0; c < fs.channels.size(); ++c) {
            write_string(os, fs.channel_names[c]);
            write_u32(os, static_cast<std::uint32_t>(fs.channels[c].cols()));
            write_f32_block(os, fs.channels[c].data(),
                            static_cast<std::size_t>(fs.channels[c].size()));
        }
        for (const auto& loc : fs.locations) {
            write_f32(os, loc.x_norm);
            write_f32(os, loc.y_norm);
            write_f32(os, loc.t_norm);
            write_u32(os, loc.frame_index);
            write_u32(os, loc.stride_tag);
        }
    });
}

inline FeatureSet load_feature_set(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open feature file: " + path.string());
    expect_magic(is, "TFEA", "feature set");
    std::uint32_t version = read_u32(is);
    if (version != 1) throw DataError("unsupported feature file version in " + path.string());
    FeatureSet fs;
    char flag;
    is.read(&flag, 1);
    fs.ted_applied = flag != 0;
    fs.clip_frame_count = read_u32(is);
    std::uint32_t n_rows = read_u32(is);
    std::uint32_t n_channels = read_u32(is);
    for (std::uint32_t c = 0; c < n_channels; ++c) {
        fs.channel_names.push_back(read_string(is));
        std::uint32_t dim = read_u32(is);
        MatrixF m(n_rows, dim);
        read_f32_block(is, m.data(), static_cast<std::size_t>(m.size()));
        fs.channels.push_back(std::move(m));
    }
    fs.locations.resize(n_rows);
    for (auto& loc : fs.locations) {
        loc.x_norm = read_f32(is);
        loc.y_norm = read_f32(is);
        loc.t_norm = read_f32(is);
        loc.frame_index = read_u32(is);
        loc.stride_tag = read_u32(is);
    }
    if (!is) throw DataError("truncated feature file: " + path.string());
    fs.validate();
    return fs;
}

}  // namespace tvr
