#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "tvr/feature_set.hpp"

namespace tvr {

struct PcaChannel {
    Eigen::VectorXf mean;          // d
    MatrixF projection;            // d x floor(d/2), orthonormal columns
    std::vector<float> explained_variance;  // eigenvalues of kept components
    bool degenerate = false;       // all-identical input (zero covariance)
};

struct PcaModel {
    std::vector<std::string> channel_names;
    std::vector<PcaChannel> channels;

    const PcaChannel& channel(const std::string& name) const {
        for (std::size_t i = 0; i < channel_names.size(); ++i)
            if (channel_names[i] == name) return channels[i];
        throw DataError("PCA model has no channel named " + name);
    }
};

// Mean-centered eigendecomposition of the covariance; keeps the top
// floor(d/2) components by decreasing eigenvalue. Column signs are fixed by
// forcing each column's largest-magnitude entry positive so model files are
// reproducible.
inline PcaChannel fit_pca_channel(const MatrixF& samples) {
    const Eigen::Index n = samples.rows();
    const Eigen::Index d = samples.cols();
    if (n < d)
        throw DataError("PCA needs at least as many samples as dimensions (" + std::to_string(n) +
                        " < " + std::to_string(d) + ")");
    MatrixD x = samples.cast<double>();
    if (!x.allFinite()) throw DataError("non-finite values in PCA input");

    Eigen::VectorXd mean = x.colwise().mean();
    x.rowwise() -= mean.transpose();
    MatrixD cov = (x.adjoint() * x) / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<MatrixD> eig(cov);
    if (eig.info() != Eigen::Success) throw DataError("PCA eigendecomposition failed");

    const Eigen::Index k = d / 2;
    PcaChannel out;
    out.mean = mean.cast<float>();
    out.projection.resize(d, k);
    out.explained_variance.resize(static_cast<std::size_t>(k));
    out.degenerate = eig.eigenvalues().maxCoeff() <= 1e-12;

    // eigenvalues come back ascending; take from the top
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::VectorXd col = eig.eigenvectors().col(d - 1 - j);
        Eigen::Index imax;
        col.cwiseAbs().maxCoeff(&imax);
        if (col(imax) < 0) col = -col;
        out.projection.col(j) = col.cast<float>();
        out.explained_variance[static_cast<std::size_t>(j)] =
            static_cast<float>(std::max(0.0, eig.eigenvalues()(d - 1 - j)));
    }
    return out;
}

inline PcaModel fit_pca(const std::vector<std::string>& names,
                        const std::vector<MatrixF>& samples) {
    PcaModel model;
    model.channel_names = names;
    for (const auto& s : samples) model.channels.push_back(fit_pca_channel(s));
    return model;
}

inline MatrixF pca_project(const PcaChannel& pca, const MatrixF& rows) {
    if (rows.cols() != pca.mean.size())
        throw DataError("PCA dimension mismatch: data " + std::to_string(rows.cols()) +
                        " vs model " + std::to_string(pca.mean.size()));
    MatrixF centered = rows;
    centered.rowwise() -= pca.mean.transpose();
    return centered * pca.projection;
}

// Projects every channel and appends (x_norm, y_norm) to each row, matching
// the spatially-augmented baseline. Time stays in locations only; TED is a
// separate stage.
inline FeatureSet apply_pca_and_augment(const FeatureSet& raw, const PcaModel& pca) {
    raw.validate();
    FeatureSet out;
    out.channel_names = raw.channel_names;
    out.clip_frame_count = raw.clip_frame_count;
    out.locations = raw.locations;
    out.processed_frames = raw.processed_frames;
    for (std::size_t c = 0; c < raw.channels.size(); ++c) {
        MatrixF proj = pca_project(pca.channel(raw.channel_names[c]), raw.channels[c]);
        MatrixF aug(proj.rows(), proj.cols() + 2);
        aug.leftCols(proj.cols()) = proj;
        for (Eigen::Index r = 0; r < proj.rows(); ++r) {
            aug(r, proj.cols()) = raw.locations[static_cast<std::size_t>(r)].x_norm;
            aug(r, proj.cols() + 1) = raw.locations[static_cast<std::size_t>(r)].y_norm;
        }
        out.channels.push_back(std::move(aug));
    }
    return out;
}

// PCA model file: magic "TPCA", u32 n_channels; per channel: name, u32 d,
// u32 k, u8 degenerate, f32 mean[d], f32 projection[d*k] row-major,
// f32 explained[k].
inline void save_pca_model(const std::filesystem::path& path, const PcaModel& model) {
    atomic_write(path, [&](std::ostream& os) {
        os.write("TPCA", 4);
        write_u32(os, static_cast<std::uint32_t>(model.channels.size()));
        for (std::size_t c = 0; c < model.channels.size(); ++c) {
            const auto& ch = model.channels[c];
            write_string(os, model.channel_names[c]);
            write_u32(os, static_cast<std::uint32_t>(ch.mean.size()));
            write_u32(os, static_cast<std::uint32_t>(ch.projection.cols()));
            char flag = ch.degenerate ? 1 : 0;
            os.write(&flag, 1);
            write_f32_block(os, ch.mean.data(), static_cast<std::size_t>(ch.mean.size()));
            write_f32_block(os, ch.projection.data(),
                            static_cast<std::size_t>(ch.projection.size()));
            write_f32_block(os, ch.explained_variance.data(), ch.explained_variance.size());
        }
    });
}

inline PcaModel load_pca_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open PCA model: " + path.string());
    expect_magic(is, "TPCA", "PCA model");
    PcaModel model;
    std::uint32_t n = read_u32(is);
    for (std::uint32_t c = 0; c < n; ++c) {
        model.channel_names.push_back(read_string(is));
        std::uint32_t d = read_u32(is);
        std::uint32_t k = read_u32(is);
        PcaChannel ch;
        char flag;
        is.read(&flag, 1);
        ch.degenerate = flag != 0;
        ch.mean.resize(d);
        read_f32_block(is, ch.mean.data(), d);
        ch.projection.resize(d, k);
        read_f32_block(is, ch.projection.data(), static_cast<std::size_t>(d) * k);
        ch.explained_variance.resize(k);
        read_f32_block(is, ch.explained_variance.data(), k);
        model.channels.push_back(std::move(ch));
    }
    return model;
}

}  // namespace tvr
