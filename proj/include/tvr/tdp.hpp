#pragma once

#include <vector>

#include "tvr/feature_set.hpp"
#include "tvr/fisher.hpp"
#include "tvr/trajectory.hpp"

namespace tvr {

enum class TdpMode { Single, Pyramid };

// Splits rows into n temporal regions by t_norm: row goes to region
// floor(t_norm * n), clamped to n-1 (half-open intervals, last one closed).
inline std::vector<FeatureSet> partition_features(const FeatureSet& features, int divisions) {
    if (divisions != 1 && divisions != 2 && divisions != 4 && divisions != 8)
        throw ConfigError("TDP divisions must be one of 1, 2, 4, 8");
    features.validate();

    std::vector<std::vector<Eigen::Index>> region_rows(static_cast<std::size_t>(divisions));
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        int region = static_cast<int>(features.locations[static_cast<std::size_t>(r)].t_norm *
                                      divisions);
        region = std::clamp(region, 0, divisions - 1);
        region_rows[static_cast<std::size_t>(region)].push_back(r);
    }

    std::vector<FeatureSet> out;
    for (const auto& rows : region_rows) {
        FeatureSet fs;
        fs.channel_names = features.channel_names;
        fs.clip_frame_count = features.clip_frame_count;
        fs.ted_applied = features.ted_applied;
        for (const auto& ch : features.channels) {
            MatrixF m(static_cast<Eigen::Index>(rows.size()), ch.cols());
            for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = ch.row(rows[i]);
            fs.channels.push_back(std::move(m));
        }
        for (Eigen::Index r : rows) fs.locations.push_back(features.locations[static_cast<std::size_t>(r)]);
        out.push_back(std::move(fs));
    }
    return out;
}

// Fisher-encodes one feature set as a single region: per channel encode +
// normalize, then concatenate in the fixed channel order.
inline Encoding encode_region(const FeatureSet& features, const GmmCodebook& book, int level,
                              int region) {
    std::vector<Eigen::VectorXd> vecs;
    for (std::size_t c = 0; c < features.channels.size(); ++c) {
        const auto& g = book.channel(features.channel_names[c]);
        Eigen::VectorXd fv = fisher_encode(features.channels[c].cast<double>(), g);
        vecs.push_back(normalize_encoding(fv));
    }
    return concat_channels(channel_order(), features.channel_names, vecs, level, region);
}

// Temporal division pyramid. Single mode concatenates the n regions of one
// level; pyramid mode concatenates single-mode representations of all
// power-of-two levels up to `level` (dimensions 1D, 3D, 7D, 15D).
inline Encoding tdp_encode(const FeatureSet& features, const GmmCodebook& book, int level,
                           TdpMode mode) {
    if (level != 1 && level != 2 && level != 4 && level != 8)
        throw ConfigError("TDP level must be one of 1, 2, 4, 8");

    std::vector<int> levels;
    if (mode == TdpMode::Single)
        levels.push_back(level);
    else
        for (int l = 1; l <= level; l *= 2) levels.push_back(l);

    Encoding out;
    Eigen::Index total = 0;
    std::vector<Encoding> parts;
    for (int l : levels) {
        auto regions = partition_features(features, l);
        for (int r = 0; r < l; ++r) {
            parts.push_back(encode_region(regions[static_cast<std::size_t>(r)], book, l, r));
            total += parts.back().vector.size();
        }
    }
    out.vector.resize(total);
    Eigen::Index off = 0;
    for (const auto& p : parts) {
        out.vector.segment(off, p.vector.size()) = p.vector;
        for (auto b : p.layout) {
            b.offset += off;
            out.layout.push_back(b);
        }
        off += p.vector.size();
    }
    return out;
}

}  // namespace tvr
