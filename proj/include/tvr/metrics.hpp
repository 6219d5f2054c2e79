#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "tvr/common.hpp"
#include "tvr/video.hpp"

namespace tvr {

// Per-class accuracy and the unweighted mean over classes.
inline double mean_class_accuracy(const std::vector<std::string>& predictions,
                                  const std::vector<std::string>& labels,
                                  std::map<std::string, double>* per_class = nullptr) {
    if (predictions.size() != labels.size() || labels.empty())
        throw DataError("prediction/label size mismatch or empty input");
    std::map<std::string, std::pair<int, int>> counts;  // label -> (correct, total)
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& c = counts[labels[i]];
        c.second += 1;
        if (predictions[i] == labels[i]) c.first += 1;
    }
    double sum = 0;
    for (const auto& [label, c] : counts) {
        double acc = static_cast<double>(c.first) / c.second;
        if (per_class) (*per_class)[label] = acc;
        sum += acc;
    }
    return sum / counts.size();
}

// Average precision of one ranked list: sum of precision-at-rank over
// positive positions divided by the positive count. Descending score order,
// ties broken by stable input order.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& positives) {
    if (scores.size() != positives.size() || scores.empty())
        throw DataError("score/label size mismatch or empty input");
    int n_pos = std::accumulate(positives.begin(), positives.end(), 0);
    if (n_pos == 0) throw DataError("average precision needs at least one positive");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double ap = 0;
    int hits = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (positives[order[rank]]) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return ap / n_pos;
}

// Temporal scale variation factor of one class: population standard
// deviation of clip durations divided by their mean.
inline double tsvf(const std::vector<double>& durations) {
    if (durations.size() < 2) throw DataError("TSVF needs at least 2 durations");
    double mean = std::accumulate(durations.begin(), durations.end(), 0.0) / durations.size();
    if (mean <= 0) throw DataError("TSVF needs a positive mean duration");
    double var = 0;
    for (double d : durations) {
        if (d <= 0) throw DataError("TSVF durations must be positive");
        var += (d - mean) * (d - mean);
    }
    var /= durations.size();
    return std::sqrt(var) / mean;
}

// Unweighted mean TSVF over classes.
inline double mtsvf(const DatasetManifest& manifest, std::map<std::string, double>* per_class = nullptr) {
    std::map<std::string, std::vector<double>> by_class;
    for (const auto& e : manifest.entries)
        by_class[e.label].push_back(static_cast<double>(e.duration_frames));
    double sum = 0;
    for (const auto& [label, durs] : by_class) {
        double v = tsvf(durs);
        if (per_class) (*per_class)[label] = v;
        sum += v;
    }
    return sum / by_class.size();
}

}  // namespace tvr
