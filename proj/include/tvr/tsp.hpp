#pragma once

#include <functional>

#include "tvr/feature_set.hpp"
#include "tvr/video.hpp"

namespace tvr {

// Processed-frame count of a level-V pyramid over a T-frame clip:
// sum over strides v+1 of ceil(T / (v+1)).
inline std::uint64_t frame_cost(int level, std::uint64_t frame_count) {
    if (level < 0) throw ConfigError("TSP level must be >= 0");
    if (frame_count < 1) throw ConfigError("frame count must be >= 1");
    std::uint64_t total = 0;
    for (int v = 0; v <= level; ++v) {
        std::uint64_t s = static_cast<std::uint64_t>(v) + 1;
        total += (frame_count + s - 1) / s;
    }
    return total;
}

using ClipExtractor = std::function<FeatureSet(const VideoClip&)>;

// Temporal scale pyramid: extract features from the clip subsampled at
// strides 1..V+1 and take the union (stride-major concatenation). Each row
// carries its stride tag; t_norm stays relative to the subsampled clip so it
// remains in [0,1) at every level. Levels whose subsampled clip is too short
// for tracking contribute zero rows.
inline FeatureSet tsp_extract(const VideoClip& clip, int level, const ClipExtractor& extractor) {
    if (level < 0 || level > 5) throw ConfigError("TSP level must be in [0, 5]");
    FeatureSet unioned;
    for (int v = 0; v <= level; ++v) {
        VideoClip sub = v == 0 ? clip : temporal_subsample(clip, v + 1);
        FeatureSet fs = extractor(sub);
        for (auto& loc : fs.locations) loc.stride_tag = static_cast<std::uint32_t>(v);
        unioned.append(fs);
    }
    unioned.clip_frame_count = static_cast<std::uint32_t>(clip.frame_count());
    return unioned;
}

}  // namespace tvr
