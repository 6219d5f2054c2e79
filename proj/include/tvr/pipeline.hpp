#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tvr/eval.hpp"
#include "tvr/fisher.hpp"
#include "tvr/gmm.hpp"
#include "tvr/pca.hpp"
#include "tvr/synthetic.hpp"
#include "tvr/tdp.hpp"
#include "tvr/ted.hpp"
#include "tvr/trajectory.hpp"
#include "tvr/tsp.hpp"
#include "tvr/video.hpp"

namespace tvr {

// Declarative experiment configuration. Everything the pipeline does is a
// pure function of this struct plus the input files.
struct PipelineConfig {
    std::string manifest;
    std::string out_dir = "out";
    int workers = 1;
    std::uint64_t seed = 42;

    // extraction
    int tsp_level = 0;
    double smooth_alpha = 0.0;
    bool ted = false;
    ExtractParams extract;

    // codebook
    int gmm_k = 16;
    Eigen::Index gmm_samples = 256000;
    int max_fit_clips = 0;  // 0 = all
    GmmFitParams gmm;

    // encoding
    int tdp_level = 1;
    TdpMode tdp_mode = TdpMode::Single;

    // evaluation
    double svm_c = 100.0;
    std::string protocol = "logo";      // logo | fixed
    std::string metric = "macc";        // macc | map
    std::string test_groups;            // comma-separated, for fixed protocol
    std::string baseline_report;        // optional, for the improvement split
};

inline PipelineConfig parse_config_text(std::istream& is) {
    PipelineConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
            if (!blank) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t\r");
            auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "manifest") cfg.manifest = val;
            else if (key == "out_dir") cfg.out_dir = val;
            else if (key == "workers") cfg.workers = std::stoi(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "tsp_level") cfg.tsp_level = std::stoi(val);
            else if (key == "smooth_alpha") cfg.smooth_alpha = std::stod(val);
            else if (key == "ted") cfg.ted = (val == "on" || val == "true" || val == "1");
            else if (key == "sample_step") cfg.extract.sample_step = std::stoi(val);
            else if (key == "track_length") cfg.extract.track_length = std::stoi(val);
            else if (key == "prune_threshold") cfg.extract.prune_threshold = std::stod(val);
            else if (key == "min_flow") cfg.extract.min_flow = std::stod(val);
            else if (key == "tube_radius") cfg.extract.tube_radius = std::stoi(val);
            else if (key == "gmm_k") cfg.gmm_k = std::stoi(val);
            else if (key == "gmm_samples") cfg.gmm_samples = std::stoll(val);
            else if (key == "max_fit_clips") cfg.max_fit_clips = std::stoi(val);
            else if (key == "tdp_level") cfg.tdp_level = std::stoi(val);
            else if (key == "tdp_mode") {
                if (val == "single") cfg.tdp_mode = TdpMode::Single;
                else if (val == "pyramid") cfg.tdp_mode = TdpMode::Pyramid;
                else throw ConfigError("tdp_mode must be single or pyramid");
            }
            else if (key == "svm_c") cfg.svm_c = std::stod(val);
            else if (key == "protocol") cfg.protocol = val;
            else if (key == "metric") cfg.metric = val;
            else if (key == "test_groups") cfg.test_groups = val;
            else if (key == "baseline_report") cfg.baseline_report = val;
            else throw ConfigError("unknown config key: " + key);
        } catch (const std::invalid_argument&) {
            throw ConfigError("bad value for config key " + key + ": " + val);
        }
    }
    return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path.string());
    return parse_config_text(is);
}

namespace detail {

inline std::string entry_stem(const DatasetManifest& manifest, std::size_t i) {
    std::filesystem::path p(manifest.entries[i].clip_path);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05zu_", i);
    return buf + p.stem().string();
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

}  // namespace detail

inline std::filesystem::path feature_path(const PipelineConfig& cfg, const DatasetManifest& m,
                                          std::size_t i) {
    return std::filesystem::path(cfg.out_dir) / "features" / (detail::entry_stem(m, i) + ".tfea");
}

inline std::filesystem::path encoding_path(const PipelineConfig& cfg, const DatasetManifest& m,
                                           std::size_t i) {
    return std::filesystem::path(cfg.out_dir) / "encodings" / (detail::entry_stem(m, i) + ".tenc");
}

// One clip through smoothing, TSP extraction, PCA projection + spatial
// augmentation, and optional TED.
inline FeatureSet extract_clip_features(const VideoClip& raw_clip, const PipelineConfig& cfg,
                                        const PcaModel& pca) {
    VideoClip clip = cfg.smooth_alpha > 0 ? temporal_smooth(raw_clip, cfg.smooth_alpha) : raw_clip;
    auto extractor = [&](const VideoClip& c) {
        return apply_pca_and_augment(extract_raw_feature_set(c, cfg.extract), pca);
    };
    FeatureSet fs = tsp_extract(clip, cfg.tsp_level, extractor);
    if (cfg.ted) fs = ted_augment(fs);
    return fs;
}

// Extraction stage: writes one feature file per manifest entry plus a
// processed-frame counter file. Per-clip failures are logged and skipped;
// returns the failure count.
inline int run_extract(const PipelineConfig& cfg) {
    DatasetManifest manifest = load_manifest(cfg.manifest);
    PcaModel pca = load_pca_model(std::filesystem::path(cfg.out_dir) / "models" / "pca.tpca");

    std::vector<std::uint64_t> counters(manifest.entries.size(), 0);
    std::vector<std::string> failures(manifest.entries.size());
    detail::parallel_for(manifest.entries.size(), cfg.workers, [&](std::size_t i) {
        try {
            VideoClip clip = load_frame_sequence(manifest.clip_file(i));
            FeatureSet fs = extract_clip_features(clip, cfg, pca);
            counters[i] = fs.processed_frames;
            save_feature_set(feature_path(cfg, manifest, i), fs);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    atomic_write(std::filesystem::path(cfg.out_dir) / "counters.txt", [&](std::ostream& os) {
        for (std::size_t i = 0; i < counters.size(); ++i)
            os << detail::entry_stem(manifest, i) << '\t' << counters[i] << '\n';
    });

    int failed = 0;
    for (std::size_t i = 0; i < failures.size(); ++i)
        if (!failures[i].empty()) {
            ++failed;
            std::cerr << "extract failed for " << manifest.entries[i].clip_path << ": "
                      << failures[i] << "\n";
        }
    return failed;
}

// Fitting stage: bootstrap raw extraction over (a subset of) the manifest,
// sample descriptors, fit PCA, transform the samples the same way the
// extraction stage will, then fit the per-channel GMM codebook.
inline void run_fit(const PipelineConfig& cfg) {
    DatasetManifest manifest = load_manifest(cfg.manifest);
    std::size_t n_clips = manifest.entries.size();
    if (cfg.max_fit_clips > 0)
        n_clips = std::min(n_clips, static_cast<std::size_t>(cfg.max_fit_clips));
    // spread the fitting subset evenly over the manifest
    std::vector<std::size_t> picks;
    for (std::size_t i = 0; i < n_clips; ++i)
        picks.push_back(i * manifest.entries.size() / n_clips);

    std::vector<FeatureSet> raw_sets(picks.size());
    detail::parallel_for(picks.size(), cfg.workers, [&](std::size_t i) {
        VideoClip clip = load_frame_sequence(manifest.clip_file(picks[i]));
        if (cfg.smooth_alpha > 0) clip = temporal_smooth(clip, cfg.smooth_alpha);
        raw_sets[i] = tsp_extract(clip, cfg.tsp_level, [&](const VideoClip& c) {
            return extract_raw_feature_set(c, cfg.extract);
        });
    });

    Eigen::Index available = 0;
    for (const auto& fs : raw_sets) available += fs.rows();
    if (available < 1) throw DataError("no descriptors available for fitting");
    bool with_replacement = false;
    auto sample_idx = sample_row_indices(available, cfg.gmm_samples, cfg.seed, &with_replacement);
    if (with_replacement)
        std::cerr << "warning: requested " << cfg.gmm_samples << " samples from " << available
                  << " rows, sampling with replacement\n";

    // gather sampled raw rows and their locations
    const auto& names = channel_order();
    std::vector<MatrixF> raw_samples;
    for (std::size_t c = 0; c < names.size(); ++c)
        raw_samples.emplace_back(static_cast<Eigen::Index>(sample_idx.size()),
                                 raw_sets[0].channels[c].cols());
    std::vector<FeatureLocation> sample_locs(sample_idx.size());
    for (std::size_t s = 0; s < sample_idx.size(); ++s) {
        Eigen::Index idx = sample_idx[s];
        for (const auto& fs : raw_sets) {
            if (idx < fs.rows()) {
                for (std::size_t c = 0; c < names.size(); ++c)
                    raw_samples[c].row(static_cast<Eigen::Index>(s)) = fs.channels[c].row(idx);
                sample_locs[s] = fs.locations[static_cast<std::size_t>(idx)];
                break;
            }
            idx -= fs.rows();
        }
    }

    PcaModel pca = fit_pca(names, raw_samples);
    auto models_dir = std::filesystem::path(cfg.out_dir) / "models";
    save_pca_model(models_dir / "pca.tpca", pca);

    GmmCodebook book;
    book.channel_names = names;
    std::ostringstream curve_log;
    for (std::size_t c = 0; c < names.size(); ++c) {
        MatrixF proj = pca_project(pca.channels[c], raw_samples[c]);
        int extra = cfg.ted ? 3 : 2;
        MatrixF aug(proj.rows(), proj.cols() + extra);
        aug.leftCols(proj.cols()) = proj;
        for (Eigen::Index r = 0; r < proj.rows(); ++r) {
            aug(r, proj.cols()) = sample_locs[static_cast<std::size_t>(r)].x_norm;
            aug(r, proj.cols() + 1) = sample_locs[static_cast<std::size_t>(r)].y_norm;
            if (cfg.ted) aug(r, proj.cols() + 2) = sample_locs[static_cast<std::size_t>(r)].t_norm;
        }
        if (aug.rows() < cfg.gmm_k)
            throw DataError("channel " + names[c] + ": K=" + std::to_string(cfg.gmm_k) +
                            " exceeds sample count " + std::to_string(aug.rows()));
        GmmFitParams gp = cfg.gmm;
        book.channels.push_back(fit_gmm(aug, cfg.gmm_k, cfg.seed + c, gp));
        curve_log << names[c];
        for (double ll : book.channels.back().loglik_curve) curve_log << '\t' << ll;
        curve_log << '\n';
    }
    save_codebook(models_dir / "gmm.tgmm", book);
    std::string curve = curve_log.str();
    atomic_write(std::filesystem::path(cfg.out_dir) / "fit_loglik.txt",
                 [&](std::ostream& os) { os << curve; });
}

// Encoding stage: per clip, TDP-encode the persisted features.
inline void run_encode(const PipelineConfig& cfg) {
    DatasetManifest manifest = load_manifest(cfg.manifest);
    GmmCodebook book = load_codebook(std::filesystem::path(cfg.out_dir) / "models" / "gmm.tgmm");
    std::vector<std::string> errors(manifest.entries.size());
    detail::parallel_for(manifest.entries.size(), cfg.workers, [&](std::size_t i) {
        try {
            FeatureSet fs = load_feature_set(feature_path(cfg, manifest, i));
            Encoding enc = tdp_encode(fs, book, cfg.tdp_level, cfg.tdp_mode);
            save_encoding(encoding_path(cfg, manifest, i), enc);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty())
            throw DataError("encoding failed for " + manifest.entries[i].clip_path + ": " +
                            errors[i]);
}

inline MatrixF load_encoding_matrix(const PipelineConfig& cfg, const DatasetManifest& manifest) {
    MatrixF x;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        Encoding enc = load_encoding(encoding_path(cfg, manifest, i));
        if (i == 0) x.resize(static_cast<Eigen::Index>(manifest.entries.size()), enc.vector.size());
        if (enc.vector.size() != x.cols())
            throw DataError("inconsistent encoding dimension for " +
                            manifest.entries[i].clip_path);
        x.row(static_cast<Eigen::Index>(i)) = enc.vector.transpose();
    }
    return x;
}

// Training stage: fits the one-vs-all model on every encoding and saves it.
inline void run_train(const PipelineConfig& cfg) {
    DatasetManifest manifest = load_manifest(cfg.manifest);
    MatrixF x = load_encoding_matrix(cfg, manifest);
    std::vector<std::string> labels;
    for (const auto& e : manifest.entries) labels.push_back(e.label);
    SvmTrainParams sp;
    sp.C = cfg.svm_c;
    LinearModel model = train_one_vs_all(x, labels, sp);
    save_model(std::filesystem::path(cfg.out_dir) / "models" / "svm.tsvm", model);
}

// Evaluation stage: cross-validates, writes the report, and (when a
// baseline report is configured) the improvement split against it.
inline EvalReport run_eval(const PipelineConfig& cfg,
                           const std::string& report_name = "report.tsv") {
    DatasetManifest manifest = load_manifest(cfg.manifest);
    MatrixF x = load_encoding_matrix(cfg, manifest);
    SvmTrainParams sp;
    sp.C = cfg.svm_c;

    EvalReport report;
    if (cfg.protocol == "logo") {
        report = leave_one_group_out(manifest, x, sp, cfg.metric);
    } else if (cfg.protocol == "fixed") {
        if (cfg.test_groups.empty()) throw ConfigError("fixed protocol needs test_groups");
        std::vector<std::string> test_groups;
        std::stringstream ss(cfg.test_groups);
        std::string g;
        while (std::getline(ss, g, ',')) test_groups.push_back(g);
        std::vector<int> train, test;
        for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
            bool is_test = std::find(test_groups.begin(), test_groups.end(),
                                     manifest.entries[i].group) != test_groups.end();
            (is_test ? test : train).push_back(static_cast<int>(i));
        }
        if (train.empty() || test.empty())
            throw ConfigError("fixed split leaves train or test empty");
        report = evaluate_folds(manifest, x, {{train, test}}, sp, cfg.metric);
    } else {
        throw ConfigError("unknown protocol: " + cfg.protocol);
    }

    if (!cfg.baseline_report.empty()) {
        if (std::filesystem::exists(cfg.baseline_report)) {
            EvalReport baseline = load_report(cfg.baseline_report);
            auto split = improvement_split(baseline, report, manifest);
            report.baseline_name = cfg.baseline_report;
            report.per_class_delta = split.per_class_delta;
        } else {
            report.warnings.push_back("baseline report not found, improvement split omitted: " +
                                      cfg.baseline_report);
        }
    }
    save_report(std::filesystem::path(cfg.out_dir) / "reports" / report_name, report);
    return report;
}

}  // namespace tvr
