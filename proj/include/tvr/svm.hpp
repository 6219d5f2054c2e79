#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "tvr/common.hpp"
#include "tvr/feature_set.hpp"

namespace tvr {

struct LinearModel {
    std::vector<std::string> classes;  // ordered label list
    MatrixF weights;                   // classes x dim
    Eigen::VectorXf biases;
    double C = 100.0;
};

struct SvmTrainParams {
    double C = 100.0;
    double gap_tol = 1e-4;    // absolute duality gap at termination
    int max_sweeps = 20000;
    double bias_scale = 1.0;  // value of the appended bias feature
};

namespace detail {

// L1-loss dual coordinate descent for one binary problem (labels +-1).
// Bias is folded in as an extra constant feature. Fixed coordinate order
// keeps the result deterministic.
inline void train_binary(const MatrixD& x, const std::vector<int>& y, const SvmTrainParams& params,
                         Eigen::VectorXd& w_out, double& b_out, double* gap_out = nullptr) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    Eigen::VectorXd qii(n);
    for (Eigen::Index i = 0; i < n; ++i)
        qii(i) = x.row(i).squaredNorm() + params.bias_scale * params.bias_scale;

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0;
    const double C = params.C;

    auto duality_gap = [&]() {
        double hinge = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double f = y[static_cast<std::size_t>(i)] * (x.row(i).dot(w) + params.bias_scale * b);
            hinge += std::max(0.0, 1.0 - f);
        }
        double wsq = w.squaredNorm() + b * b;
        double primal = 0.5 * wsq + C * hinge;
        double dual = alpha.sum() - 0.5 * wsq;
        return primal - dual;
    };

    for (int sweep = 0; sweep < params.max_sweeps; ++sweep) {
        double max_delta = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (qii(i) <= 0) continue;
            int yi = y[static_cast<std::size_t>(i)];
            double grad = yi * (x.row(i).dot(w) + params.bias_scale * b) - 1.0;
            double old = alpha(i);
            double next = std::clamp(old - grad / qii(i), 0.0, C);
            double delta = next - old;
            if (delta != 0) {
                alpha(i) = next;
                w += delta * yi * x.row(i).transpose();
                b += delta * yi * params.bias_scale;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        // the gap check is O(n d); only bother once updates get small
        if (max_delta < 1e-8 || (sweep % 8 == 7 && duality_gap() <= params.gap_tol)) {
            if (duality_gap() <= params.gap_tol) break;
        }
    }
    w_out = w;
    b_out = params.bias_scale * b;
    if (gap_out) *gap_out = duality_gap();
}

}  // namespace detail

// One-vs-all training: for each class, a binary L2-regularized hinge-loss
// problem with that class positive and the rest negative.
inline LinearModel train_one_vs_all(const MatrixF& encodings, const std::vector<std::string>& labels,
                                    const SvmTrainParams& params = {},
                                    std::vector<double>* gaps_out = nullptr) {
    if (static_cast<std::size_t>(encodings.rows()) != labels.size())
        throw DataError("encoding/label count mismatch");
    std::vector<std::string> classes;
    for (const auto& l : labels)
        if (std::find(classes.begin(), classes.end(), l) == classes.end()) classes.push_back(l);
    std::sort(classes.begin(), classes.end());
    if (classes.size() < 2) throw DataError("one-vs-all training needs at least 2 classes");

    MatrixD x = encodings.cast<double>();
    LinearModel model;
    model.classes = classes;
    model.C = params.C;
    model.weights.resize(static_cast<Eigen::Index>(classes.size()), encodings.cols());
    model.biases.resize(static_cast<Eigen::Index>(classes.size()));
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::vector<int> y(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == classes[c] ? 1 : -1;
        Eigen::VectorXd w;
        double b;
        double gap;
        detail::train_binary(x, y, params, w, b, &gap);
        if (gaps_out) gaps_out->push_back(gap);
        model.weights.row(static_cast<Eigen::Index>(c)) = w.cast<float>();
        model.biases(static_cast<Eigen::Index>(c)) = static_cast<float>(b);
    }
    return model;
}

// Per-class margins w.x + b; predicted label is the argmax with ties broken
// by class order.
inline MatrixF predict_scores(const LinearModel& model, const MatrixF& encodings) {
    if (encodings.cols() != model.weights.cols() && encodings.rows() > 0)
        throw DataError("encoding dimension does not match model");
    MatrixF scores = encodings * model.weights.transpose();
    scores.rowwise() += model.biases.transpose();
    return scores;
}

inline std::vector<std::string> predict_labels(const LinearModel& model, const MatrixF& scores) {
    std::vector<std::string> out;
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < scores.cols(); ++c)
            if (scores(r, c) > scores(r, best)) best = c;
        out.push_back(model.classes[static_cast<std::size_t>(best)]);
    }
    return out;
}

// Model file: magic "TSVM", class list, dims, f32 weights and biases.
inline void save_model(const std::filesystem::path& path, const LinearModel& model) {
    atomic_write(path, [&](std::ostream& os) {
        os.write("TSVM", 4);
        write_u32(os, static_cast<std::uint32_t>(model.classes.size()));
        for (const auto& c : model.classes) write_string(os, c);
        write_u32(os, static_cast<std::uint32_t>(model.weights.cols()));
        write_f32(os, static_cast<float>(model.C));
        write_f32_block(os, model.weights.data(), static_cast<std::size_t>(model.weights.size()));
        write_f32_block(os, model.biases.data(), static_cast<std::size_t>(model.biases.size()));
    });
}

inline LinearModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open model: " + path.string());
    expect_magic(is, "TSVM", "SVM model");
    LinearModel model;
    std::uint32_t nc = read_u32(is);
    for (std::uint32_t i = 0; i < nc; ++i) model.classes.push_back(read_string(is));
    std::uint32_t dim = read_u32(is);
    model.C = read_f32(is);
    model.weights.resize(nc, dim);
    read_f32_block(is, model.weights.data(), static_cast<std::size_t>(model.weights.size()));
    model.biases.resize(nc);
    read_f32_block(is, model.biases.data(), nc);
    return model;
}

}  // namespace tvr
