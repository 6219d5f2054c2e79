#include <catch2/catch_amalgamated.hpp>
#include <map>

#include "test_support.hpp"
#include "tvr/ted.hpp"
#include "tvr/trajectory.hpp"
#include "tvr/tsp.hpp"

using namespace tvr;
using tvr_test::moving_dot_clip;

namespace {

ClipExtractor raw_extractor(const ExtractParams& params) {
    return [params](const VideoClip& c) { return extract_raw_feature_set(c, params); };
}

bool same_features(const FeatureSet& a, const FeatureSet& b) {
    if (a.rows() != b.rows() || a.channel_names != b.channel_names) return false;
    for (std::size_t c = 0; c < a.channels.size(); ++c)
        if (!(a.channels[c].array() == b.channels[c].array()).all()) return false;
    for (std::size_t i = 0; i < a.locations.size(); ++i) {
        const auto& la = a.locations[i];
        const auto& lb = b.locations[i];
        if (la.x_norm != lb.x_norm || la.y_norm != lb.y_norm || la.t_norm != lb.t_norm ||
            la.frame_index != lb.frame_index)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("frame cost arithmetic") {
    CHECK(frame_cost(2, 600) == 1100);
    CHECK(frame_cost(0, 600) == 600);
    CHECK(frame_cost(2, 7) == 14);

    // level-2 cost stays under twice the frame count
    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        std::uint64_t T = 16 + rng.below(1985);
        CHECK(frame_cost(2, T) <= 2 * T);
    }
}

TEST_CASE("TSP level 0 equals plain extraction") {
    auto clip = moving_dot_clip(64, 40, 10, 32, 1.0, 0.3);
    ExtractParams params;
    auto plain = extract_raw_feature_set(clip, params);
    auto tsp0 = tsp_extract(clip, 0, raw_extractor(params));
    CHECK(same_features(plain, tsp0));
    CHECK(tsp0.processed_frames == plain.processed_frames);
}

TEST_CASE("TSP union equals independent per-stride extractions") {
    auto clip = moving_dot_clip(64, 50, 8, 32, 0.8, 0.4);
    ExtractParams params;
    auto tsp2 = tsp_extract(clip, 2, raw_extractor(params));

    // oracle: run the three extractions independently and concatenate
    std::vector<FeatureSet> per_stride;
    Eigen::Index total = 0;
    for (int v = 0; v <= 2; ++v) {
        per_stride.push_back(extract_raw_feature_set(temporal_subsample(clip, v + 1), params));
        total += per_stride.back().rows();
    }
    REQUIRE(tsp2.rows() == total);

    Eigen::Index off = 0;
    for (int v = 0; v <= 2; ++v) {
        const auto& fv = per_stride[static_cast<std::size_t>(v)];
        for (Eigen::Index r = 0; r < fv.rows(); ++r) {
            for (std::size_t c = 0; c < fv.channels.size(); ++c)
                CHECK((tsp2.channels[c].row(off + r).array() == fv.channels[c].row(r).array()).all());
            CHECK(tsp2.locations[static_cast<std::size_t>(off + r)].stride_tag ==
                  static_cast<std::uint32_t>(v));
        }
        off += fv.rows();
    }
    CHECK(tsp2.processed_frames == frame_cost(2, 50));
    CHECK(tsp2.clip_frame_count == 50);
}

TEST_CASE("strides too short for the tracking window contribute nothing") {
    auto clip = moving_dot_clip(64, 20, 10, 32, 1.0, 0.0);
    ExtractParams params;  // L = 15, stride 3 leaves 7 frames
    auto tsp2 = tsp_extract(clip, 2, raw_extractor(params));
    auto f0 = extract_raw_feature_set(clip, params);
    auto f1 = extract_raw_feature_set(temporal_subsample(clip, 2), params);
    CHECK(tsp2.rows() == f0.rows() + f1.rows());
    for (const auto& loc : tsp2.locations) CHECK(loc.stride_tag <= 1);
}

TEST_CASE("level monotonicity and t_norm range") {
    auto clip = moving_dot_clip(64, 50, 8, 32, 1.0, 0.2);
    ExtractParams params;
    auto prev = tsp_extract(clip, 0, raw_extractor(params));
    for (int level = 1; level <= 2; ++level) {
        auto cur = tsp_extract(clip, level, raw_extractor(params));
        // rows of the lower level are a prefix of the higher level
        REQUIRE(cur.rows() >= prev.rows());
        for (std::size_t c = 0; c < cur.channels.size(); ++c)
            CHECK((cur.channels[c].topRows(prev.rows()).array() ==
                   prev.channels[c].array()).all());
        for (const auto& loc : cur.locations) {
            CHECK(loc.t_norm >= 0.f);
            CHECK(loc.t_norm < 1.f);
        }
        prev = cur;
    }
}

TEST_CASE("TED appends exactly one time column per channel") {
    auto clip = moving_dot_clip(64, 40, 10, 32, 1.0, 0.0);
    ExtractParams params;
    auto fs = extract_raw_feature_set(clip, params);
    REQUIRE(fs.rows() > 0);
    auto ted = ted_augment(fs);

    for (std::size_t c = 0; c < fs.channels.size(); ++c) {
        CHECK(ted.channels[c].cols() == fs.channels[c].cols() + 1);
        // prefix bitwise unchanged
        CHECK((ted.channels[c].leftCols(fs.channels[c].cols()).array() ==
               fs.channels[c].array()).all());
        for (Eigen::Index r = 0; r < fs.rows(); ++r)
            CHECK(ted.channels[c](r, fs.channels[c].cols()) ==
                  fs.locations[static_cast<std::size_t>(r)].t_norm);
    }
    CHECK(ted.ted_applied);
    CHECK_THROWS_AS(ted_augment(ted), DataError);
}

TEST_CASE("TED time values follow the t/T convention") {
    FeatureSet fs;
    fs.channel_names = {"traj"};
    fs.channels = {MatrixF::Zero(2, 4)};
    fs.clip_frame_count = 100;
    fs.locations.resize(2);
    fs.locations[0].t_norm = 30.f / 100.f;
    fs.locations[0].frame_index = 30;
    fs.locations[1].t_norm = 0.f;
    fs.locations[1].frame_index = 0;
    auto ted = ted_augment(fs);
    CHECK(ted.channels[0](0, 4) == Catch::Approx(0.30).epsilon(1e-6));
    CHECK(ted.channels[0](1, 4) == 0.f);
}
