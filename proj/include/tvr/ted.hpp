#pragma once

#include "tvr/feature_set.hpp"

namespace tvr {

// Temporal extension: append the row's normalized time as one extra column
// on every channel. Applying it twice is an error (the flag is persisted in
// the feature file header).
inline FeatureSet ted_augment(const FeatureSet& features) {
    features.validate();
    if (features.ted_applied) throw DataError("TED already applied to this feature set");
    FeatureSet out;
    out.channel_names = features.channel_names;
    out.clip_frame_count = features.clip_frame_count;
    out.locations = features.locations;
    out.processed_frames = features.processed_frames;
    out.ted_applied = true;
    for (const auto& ch : features.channels) {
        MatrixF aug(ch.rows(), ch.cols() + 1);
        aug.leftCols(ch.cols()) = ch;
        for (Eigen::Index r = 0; r < ch.rows(); ++r)
            aug(r, ch.cols()) = features.locations[static_cast<std::size_t>(r)].t_norm;
        out.channels.push_back(std::move(aug));
    }
    return out;
}

}  // namespace tvr
