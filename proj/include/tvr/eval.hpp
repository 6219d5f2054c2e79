#pragma once

#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tvr/metrics.hpp"
#include "tvr/svm.hpp"
#include "tvr/video.hpp"

namespace tvr {

struct EvalReport {
    std::string metric = "macc";  // the dataset's native metric for deltas
    std::string baseline_name;    // empty when no baseline comparison
    std::vector<std::string> classes;
    std::map<std::string, double> per_class_accuracy;
    std::map<std::string, double> per_class_ap;
    std::map<std::string, double> per_class_delta;  // vs baseline, may be empty
    std::map<std::string, double> per_class_tsvf;
    double macc = 0;
    double map = 0;
    int folds = 0;
    std::vector<std::string> warnings;
};

// Trains/tests one fold per (train, test) index pair and pools predictions
// and scores over all folds, so per-class accuracy covers all groups.
inline EvalReport evaluate_folds(const DatasetManifest& manifest, const MatrixF& encodings,
                                 const std::vector<std::pair<std::vector<int>, std::vector<int>>>& folds,
                                 const SvmTrainParams& params = {},
                                 const std::string& metric = "macc") {
    if (encodings.rows() != static_cast<Eigen::Index>(manifest.entries.size()))
        throw DataError("encoding rows do not match manifest entries");
    EvalReport report;
    report.metric = metric;
    report.classes = manifest.class_labels();
    report.folds = static_cast<int>(folds.size());

    const double kAbsent = -std::numeric_limits<double>::infinity();
    std::vector<std::string> pooled_pred, pooled_true;
    std::vector<std::vector<double>> pooled_scores;  // per test clip, per global class

    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto& [train_idx, test_idx] = folds[f];
        MatrixF xtr(static_cast<Eigen::Index>(train_idx.size()), encodings.cols());
        std::vector<std::string> ytr;
        for (std::size_t i = 0; i < train_idx.size(); ++i) {
            xtr.row(static_cast<Eigen::Index>(i)) = encodings.row(train_idx[i]);
            ytr.push_back(manifest.entries[static_cast<std::size_t>(train_idx[i])].label);
        }
        LinearModel model = train_one_vs_all(xtr, ytr, params);

        // test-set classes missing from this fold's training data score 0
        for (const auto& cls : report.classes) {
            bool in_train = std::find(model.classes.begin(), model.classes.end(), cls) !=
                            model.classes.end();
            bool in_test = false;
            for (int ti : test_idx)
                if (manifest.entries[static_cast<std::size_t>(ti)].label == cls) in_test = true;
            if (in_test && !in_train)
                report.warnings.push_back("fold " + std::to_string(f) + ": class " + cls +
                                          " missing from training set, scored 0");
        }

        MatrixF xte(static_cast<Eigen::Index>(test_idx.size()), encodings.cols());
        for (std::size_t i = 0; i < test_idx.size(); ++i)
            xte.row(static_cast<Eigen::Index>(i)) = encodings.row(test_idx[i]);
        MatrixF scores = predict_scores(model, xte);
        auto pred = predict_labels(model, scores);

        for (std::size_t i = 0; i < test_idx.size(); ++i) {
            pooled_pred.push_back(pred[i]);
            pooled_true.push_back(manifest.entries[static_cast<std::size_t>(test_idx[i])].label);
            std::vector<double> row(report.classes.size(), kAbsent);
            for (std::size_t c = 0; c < report.classes.size(); ++c) {
                auto it = std::find(model.classes.begin(), model.classes.end(), report.classes[c]);
                if (it != model.classes.end())
                    row[c] = scores(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(it - model.classes.begin()));
            }
            pooled_scores.push_back(std::move(row));
        }
    }

    report.macc = mean_class_accuracy(pooled_pred, pooled_true, &report.per_class_accuracy);
    for (const auto& cls : report.classes)
        if (!report.per_class_accuracy.count(cls)) report.per_class_accuracy[cls] = 0.0;

    double ap_sum = 0;
    for (std::size_t c = 0; c < report.classes.size(); ++c) {
        std::vector<double> s;
        std::vector<int> pos;
        for (std::size_t i = 0; i < pooled_scores.size(); ++i) {
            s.push_back(pooled_scores[i][c]);
            pos.push_back(pooled_true[i] == report.classes[c] ? 1 : 0);
        }
        double ap = average_precision(s, pos);
        report.per_class_ap[report.classes[c]] = ap;
        ap_sum += ap;
    }
    report.map = ap_sum / report.classes.size();

    // duration statistics per class (frames for synthetic data)
    std::map<std::string, std::vector<double>> durs;
    for (const auto& e : manifest.entries) durs[e.label].push_back(e.duration_frames);
    for (const auto& [cls, d] : durs)
        if (d.size() >= 2) report.per_class_tsvf[cls] = tsvf(d);
    return report;
}

// One fold per group: train on all other groups, test on the held-out one.
inline EvalReport leave_one_group_out(const DatasetManifest& manifest, const MatrixF& encodings,
                                      const SvmTrainParams& params = {},
                                      const std::string& metric = "macc") {
    auto groups = manifest.group_ids();
    if (groups.size() < 2) throw DataError("leave-one-group-out needs at least 2 groups");
    std::vector<std::pair<std::vector<int>, std::vector<int>>> folds;
    for (const auto& g : groups) {
        std::vector<int> train, test;
        for (std::size_t i = 0; i < manifest.entries.size(); ++i)
            (manifest.entries[i].group == g ? test : train).push_back(static_cast<int>(i));
        folds.push_back({std::move(train), std::move(test)});
    }
    return evaluate_folds(manifest, encodings, folds, params, metric);
}

struct ImprovementSplit {
    int improved = 0;  // classes with delta >= 0
    int worsened = 0;
    std::optional<double> improved_mtsvf;
    std::optional<double> worsened_mtsvf;
    std::map<std::string, double> per_class_delta;
};

// Partitions classes by the sign of (method - baseline) on the declared
// metric and reports each group's mean TSVF.
inline ImprovementSplit improvement_split(const EvalReport& baseline, const EvalReport& method,
                                          const DatasetManifest& manifest) {
    if (baseline.classes != method.classes)
        throw DataError("improvement split needs identical class sets");
    std::map<std::string, double> class_tsvf;
    mtsvf(manifest, &class_tsvf);

    ImprovementSplit out;
    double imp_sum = 0, wor_sum = 0;
    int imp_tsvf_n = 0, wor_tsvf_n = 0;
    for (const auto& cls : method.classes) {
        const auto& a = method.metric == "map" ? baseline.per_class_ap : baseline.per_class_accuracy;
        const auto& b = method.metric == "map" ? method.per_class_ap : method.per_class_accuracy;
        double delta = b.at(cls) - a.at(cls);
        out.per_class_delta[cls] = delta;
        bool has_tsvf = class_tsvf.count(cls) != 0;
        if (delta >= 0) {
            out.improved += 1;
            if (has_tsvf) {
                imp_sum += class_tsvf[cls];
                ++imp_tsvf_n;
            }
        } else {
            out.worsened += 1;
            if (has_tsvf) {
                wor_sum += class_tsvf[cls];
                ++wor_tsvf_n;
            }
        }
    }
    if (imp_tsvf_n > 0) out.improved_mtsvf = imp_sum / imp_tsvf_n;
    if (wor_tsvf_n > 0) out.worsened_mtsvf = wor_sum / wor_tsvf_n;
    return out;
}

// ---------------------------------------------------------------------------
// Report file: UTF-8 tab-separated; key-value summary lines, then one
// "class" row per class (label, accuracy, AP, delta, TSVF).
// ---------------------------------------------------------------------------

inline void save_report(const std::filesystem::path& path, const EvalReport& report) {
    atomic_write(path, [&](std::ostream& os) {
        os.precision(17);
        os << "TRPT\t1\n";
        os << "metric\t" << report.metric << "\n";
        os << "macc\t" << report.macc << "\n";
        os << "map\t" << report.map << "\n";
        os << "folds\t" << report.folds << "\n";
        os << "baseline\t" << (report.baseline_name.empty() ? "-" : report.baseline_name) << "\n";
        for (const auto& w : report.warnings) os << "warn\t" << w << "\n";
        for (const auto& cls : report.classes) {
            os << "class\t" << cls << "\t" << report.per_class_accuracy.at(cls) << "\t"
               << report.per_class_ap.at(cls) << "\t";
            if (report.per_class_delta.count(cls))
                os << report.per_class_delta.at(cls);
            else
                os << "-";
            os << "\t";
            if (report.per_class_tsvf.count(cls))
                os << report.per_class_tsvf.at(cls);
            else
                os << "-";
            os << "\n";
        }
    });
}

inline EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open report: " + path.string());
    EvalReport report;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string key;
        std::getline(ss, key, '\t');
        if (first) {
            if (key != "TRPT") throw DataError("not a report file: " + path.string());
            first = false;
            continue;
        }
        std::string v;
        if (key == "metric") {
            std::getline(ss, report.metric, '\t');
        } else if (key == "macc") {
            std::getline(ss, v, '\t');
            report.macc = std::stod(v);
        } else if (key == "map") {
            std::getline(ss, v, '\t');
            report.map = std::stod(v);
        } else if (key == "folds") {
            std::getline(ss, v, '\t');
            report.folds = std::stoi(v);
        } else if (key == "baseline") {
            std::getline(ss, v, '\t');
            if (v != "-") report.baseline_name = v;
        } else if (key == "warn") {
            std::getline(ss, v);
            report.warnings.push_back(v);
        } else if (key == "class") {
            std::string cls, acc, ap, delta, tsvf_s;
            std::getline(ss, cls, '\t');
            std::getline(ss, acc, '\t');
            std::getline(ss, ap, '\t');
            std::getline(ss, delta, '\t');
            std::getline(ss, tsvf_s, '\t');
            report.classes.push_back(cls);
            report.per_class_accuracy[cls] = std::stod(acc);
            report.per_class_ap[cls] = std::stod(ap);
            if (delta != "-") report.per_class_delta[cls] = std::stod(delta);
            if (tsvf_s != "-" && !tsvf_s.empty()) report.per_class_tsvf[cls] = std::stod(tsvf_s);
        }
    }
    return report;
}

}  // namespace tvr
