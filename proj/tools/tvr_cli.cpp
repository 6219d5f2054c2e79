// Command-line front end for the temporal video representation pipeline:
// synthetic dataset generation, feature extraction, codebook fitting,
// encoding, training, evaluation, dataset statistics, and level sweeps.

#include <CLI11.hpp>
#include <iostream>

#include "tvr/tvr.hpp"

namespace {

struct GlobalOpts {
    std::string config;
    std::string out_dir;
    long long seed = -1;
    int workers = 0;
};

tvr::PipelineConfig make_config(const GlobalOpts& g) {
    tvr::PipelineConfig cfg;
    if (!g.config.empty()) cfg = tvr::load_config(g.config);
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    if (g.seed >= 0) cfg.seed = static_cast<std::uint64_t>(g.seed);
    if (g.workers > 0) cfg.workers = g.workers;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal video representation toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config, "experiment configuration file");
    app.add_option("--seed", g.seed, "override the config seed");
    app.add_option("--workers", g.workers, "override the worker count");
    app.add_option("--out", g.out_dir, "override the output directory");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string mode = "velocity";
    tvr::SynthSpec spec;
    std::string synth_out = "synth";
    synth->add_option("--mode", mode, "velocity or order");
    synth->add_option("--classes", spec.classes);
    synth->add_option("--clips-per-class", spec.clips_per_class);
    synth->add_option("--resolution", spec.resolution);
    synth->add_option("--base-length", spec.base_length);
    synth->add_option("--groups", spec.groups);
    synth->add_option("--dir", synth_out, "output directory for clips + manifest");

    auto* extract = app.add_subcommand("extract", "extract feature sets for a manifest");
    auto* fit = app.add_subcommand("fit", "fit the PCA model and GMM codebook");
    auto* encode = app.add_subcommand("encode", "encode feature sets into Fisher vectors");
    auto* train = app.add_subcommand("train", "train a one-vs-all SVM on all encodings");
    auto* eval = app.add_subcommand("eval", "cross-validate and write an evaluation report");

    auto* stats = app.add_subcommand("stats", "dataset TSVF statistics");
    std::string stats_manifest;
    stats->add_option("--manifest", stats_manifest, "manifest to analyze");

    auto* sweep = app.add_subcommand("sweep", "run the pipeline across levels");
    std::string sweep_kind = "tsp";
    std::string sweep_levels = "0,1,2";
    sweep->add_option("--kind", sweep_kind, "tsp or tdp");
    sweep->add_option("--levels", sweep_levels, "comma-separated level list");

    try {
        app.parse(argc, argv);

        if (synth->parsed()) {
            if (mode == "velocity") spec.mode = tvr::SynthMode::Velocity;
            else if (mode == "order") spec.mode = tvr::SynthMode::Order;
            else throw tvr::ConfigError("synth mode must be velocity or order");
            std::uint64_t seed = g.seed >= 0 ? static_cast<std::uint64_t>(g.seed) : 42;
            if (!g.out_dir.empty()) synth_out = g.out_dir;
            auto manifest = tvr::generate_synthetic_dataset(spec, seed, synth_out);
            std::cout << "wrote " << manifest.entries.size() << " clips to " << synth_out << "\n";
        } else if (extract->parsed()) {
            auto cfg = make_config(g);
            int failed = tvr::run_extract(cfg);
            if (failed > 0) {
                std::cerr << failed << " clips failed extraction\n";
                return 1;
            }
            std::cout << "features written to " << cfg.out_dir << "/features\n";
        } else if (fit->parsed()) {
            auto cfg = make_config(g);
            tvr::run_fit(cfg);
            std::cout << "models written to " << cfg.out_dir << "/models\n";
        } else if (encode->parsed()) {
            auto cfg = make_config(g);
            tvr::run_encode(cfg);
            std::cout << "encodings written to " << cfg.out_dir << "/encodings\n";
        } else if (train->parsed()) {
            auto cfg = make_config(g);
            tvr::run_train(cfg);
            std::cout << "model written to " << cfg.out_dir << "/models/svm.tsvm\n";
        } else if (eval->parsed()) {
            auto cfg = make_config(g);
            auto report = tvr::run_eval(cfg);
            std::cout << "mAcc " << report.macc << "  mAP " << report.map << "\n";
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
        } else if (stats->parsed()) {
            auto manifest = tvr::load_manifest(stats_manifest);
            std::map<std::string, double> per_class;
            double m = tvr::mtsvf(manifest, &per_class);
            for (const auto& [cls, v] : per_class) std::cout << cls << "\t" << v << "\n";
            std::cout << "mTSVF\t" << m << "\n";
        } else if (sweep->parsed()) {
            auto cfg = make_config(g);
            std::stringstream ss(sweep_levels);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                int level = std::stoi(tok);
                tvr::PipelineConfig c = cfg;
                if (sweep_kind == "tsp") {
                    c.tsp_level = level;
                    c.out_dir = cfg.out_dir + "/tsp" + tok;
                    tvr::run_fit(c);
                    tvr::run_extract(c);
                    tvr::run_encode(c);
                } else if (sweep_kind == "tdp") {
                    c.tdp_level = level;
                    c.out_dir = cfg.out_dir + "/tdp" + tok;
                    tvr::run_fit(c);
                    tvr::run_extract(c);
                    tvr::run_encode(c);
                } else {
                    throw tvr::ConfigError("sweep kind must be tsp or tdp");
                }
                auto report = tvr::run_eval(c);
                std::cout << sweep_kind << " level " << level << ": mAcc " << report.macc
                          << "  mAP " << report.map << "\n";
            }
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const tvr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
