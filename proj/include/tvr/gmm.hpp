#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "tvr/common.hpp"
#include "tvr/feature_set.hpp"

namespace tvr {

// One channel's diagonal-covariance mixture.
struct GmmChannel {
    Eigen::VectorXd weights;  // K, simplex
    MatrixD means;            // K x d
    MatrixD variances;        // K x d, floored
    std::vector<double> loglik_curve;  // per-sample log-likelihood per EM iteration

    int components() const { return static_cast<int>(weights.size()); }
    int dim() const { return static_cast<int>(means.cols()); }
};

struct GmmCodebook {
    std::vector<std::string> channel_names;
    std::vector<GmmChannel> channels;

    const GmmChannel& channel(const std::string& name) const {
        for (std::size_t i = 0; i < channel_names.size(); ++i)
            if (channel_names[i] == name) return channels[i];
        throw DataError("codebook has no channel named " + name);
    }
};

struct GmmFitParams {
    int max_iter = 200;
    double tol = 1e-5;          // per-sample log-likelihood improvement
    int kmeans_iters = 10;
    double variance_floor_factor = 1e-4;  // times the average data variance
};

namespace detail {

// log of the weighted component densities for every (sample, component),
// returned as an n x K matrix of log(w_k) + log N(x | mu_k, sigma_k).
inline MatrixD log_weighted_densities(const MatrixD& x, const GmmChannel& g) {
    const Eigen::Index n = x.rows();
    const int K = g.components();
    const int d = g.dim();
    MatrixD out(n, K);
    const double log2pi = 1.8378770664093453;
    for (int k = 0; k < K; ++k) {
        double logdet = 0;
        for (int j = 0; j < d; ++j) logdet += std::log(g.variances(k, j));
        double base = std::log(g.weights(k)) - 0.5 * (d * log2pi + logdet);
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(n);
        for (int j = 0; j < d; ++j) {
            Eigen::ArrayXd diff = x.col(j).array() - g.means(k, j);
            acc += diff.square() / g.variances(k, j);
        }
        out.col(k) = base - 0.5 * acc;
    }
    return out;
}

}  // namespace detail

// Posteriors (responsibilities) computed in log space with max-subtraction.
// Also returns the total per-sample log-likelihood if requested.
inline MatrixD gmm_posteriors(const MatrixD& x, const GmmChannel& g, double* mean_loglik = nullptr) {
    MatrixD lw = detail::log_weighted_densities(x, g);
    double total = 0;
    for (Eigen::Index i = 0; i < lw.rows(); ++i) {
        double m = lw.row(i).maxCoeff();
        Eigen::ArrayXd e = (lw.row(i).array() - m).exp();
        double s = e.sum();
        lw.row(i) = e / s;
        total += m + std::log(s);
    }
    if (mean_loglik) *mean_loglik = lw.rows() > 0 ? total / lw.rows() : 0.0;
    return lw;
}

namespace detail {

inline std::vector<int> kmeans_pp_seed(const MatrixD& x, int K, Rng& rng) {
    const Eigen::Index n = x.rows();
    std::vector<int> centers;
    centers.push_back(static_cast<int>(rng.below(static_cast<std::uint32_t>(n))));
    Eigen::VectorXd d2 =
        (x.rowwise() - x.row(centers[0])).rowwise().squaredNorm();
    while (static_cast<int>(centers.size()) < K) {
        double sum = d2.sum();
        int pick;
        if (sum <= 0) {
            pick = static_cast<int>(rng.below(static_cast<std::uint32_t>(n)));
        } else {
            double r = rng.uniform() * sum;
            double acc = 0;
            pick = static_cast<int>(n) - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc >= r) {
                    pick = static_cast<int>(i);
                    break;
                }
            }
        }
        centers.push_back(pick);
        Eigen::VectorXd nd = (x.rowwise() - x.row(pick)).rowwise().squaredNorm();
        d2 = d2.cwiseMin(nd);
    }
    return centers;
}

}  // namespace detail

// Diagonal-covariance EM initialized by k-means++ plus a few Lloyd
// iterations. The log-likelihood curve is recorded per iteration and is
// non-decreasing up to the variance-floor projection.
inline GmmChannel fit_gmm(const MatrixF& samples, int K, std::uint64_t seed,
                          const GmmFitParams& params = {}) {
    const Eigen::Index n = samples.rows();
    const Eigen::Index d = samples.cols();
    if (K < 1) throw ConfigError("GMM needs K >= 1");
    if (n < K)
        throw DataError("GMM needs at least K samples (" + std::to_string(n) + " < " +
                        std::to_string(K) + ")");
    MatrixD x = samples.cast<double>();
    if (!x.allFinite()) throw DataError("non-finite values in GMM input");

    // variance floor from the average data variance
    Eigen::VectorXd data_mean = x.colwise().mean();
    Eigen::VectorXd data_var =
        ((x.rowwise() - data_mean.transpose()).array().square().colwise().sum() / n).matrix();
    double floor_v = std::max(params.variance_floor_factor * data_var.mean(), 1e-12);

    GmmChannel g;
    g.weights = Eigen::VectorXd::Constant(K, 1.0 / K);
    g.means.resize(K, d);
    g.variances = MatrixD::Constant(K, d, std::max(data_var.mean(), floor_v));

    Rng rng(seed);
    auto centers = detail::kmeans_pp_seed(x, K, rng);
    for (int k = 0; k < K; ++k) g.means.row(k) = x.row(centers[k]);

    // Lloyd iterations
    std::vector<int> assign(static_cast<std::size_t>(n));
    for (int it = 0; it < params.kmeans_iters; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            int bk = 0;
            for (int k = 0; k < K; ++k) {
                double dist = (x.row(i) - g.means.row(k)).squaredNorm();
                if (dist < best) {
                    best = dist;
                    bk = k;
                }
            }
            assign[static_cast<std::size_t>(i)] = bk;
        }
        MatrixD sums = MatrixD::Zero(K, d);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
            counts(assign[static_cast<std::size_t>(i)]) += 1;
        }
        for (int k = 0; k < K; ++k)
            if (counts(k) > 0) g.means.row(k) = sums.row(k) / counts(k);
    }

    // initial covariances/weights from the k-means assignment
    {
        MatrixD var_sums = MatrixD::Zero(K, d);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
        for (Eigen::Index i = 0; i < n; ++i) {
            int k = assign[static_cast<std::size_t>(i)];
            var_sums.row(k) += (x.row(i) - g.means.row(k)).array().square().matrix();
            counts(k) += 1;
        }
        for (int k = 0; k < K; ++k) {
            if (counts(k) > 0) g.variances.row(k) = var_sums.row(k) / counts(k);
            g.weights(k) = std::max(counts(k), 1.0) ;
        }
        g.weights /= g.weights.sum();
        g.variances = g.variances.cwiseMax(floor_v);
    }

    double prev = -std::numeric_limits<double>::max();
    for (int it = 0; it < params.max_iter; ++it) {
        double loglik;
        MatrixD post = gmm_posteriors(x, g, &loglik);
        g.loglik_curve.push_back(loglik);

        Eigen::VectorXd nk = post.colwise().sum();
        for (int k = 0; k < K; ++k) {
            double denom = std::max(nk(k), 1e-300);
            Eigen::VectorXd mu = (post.col(k).transpose() * x).transpose() / denom;
            Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
            for (int j = 0; j < d; ++j) {
                Eigen::ArrayXd diff = x.col(j).array() - mu(j);
                var(j) = (post.col(k).array() * diff.square()).sum() / denom;
            }
            g.means.row(k) = mu;
            g.variances.row(k) = var.cwiseMax(floor_v);
        }
        g.weights = nk / static_cast<double>(n);
        double wsum = g.weights.sum();
        g.weights /= wsum;
        g.weights = g.weights.cwiseMax(1e-12);
        g.weights /= g.weights.sum();

        if (loglik - prev < params.tol && it > 0) break;
        prev = loglik;
    }
    // final likelihood after the last M step
    double final_ll;
    gmm_posteriors(x, g, &final_ll);
    g.loglik_curve.push_back(final_ll);
    return g;
}

// Uniform row sample across feature files' channel matrices, without
// replacement (with replacement plus a warning flag when n exceeds
// availability). Deterministic per seed.
inline std::vector<Eigen::Index> sample_row_indices(Eigen::Index available, Eigen::Index n,
                                                    std::uint64_t seed, bool* with_replacement) {
    if (available < 1) throw DataError("no rows available to sample");
    std::vector<Eigen::Index> out;
    Rng rng(seed);
    if (n > available) {
        if (with_replacement) *with_replacement = true;
        out.resize(static_cast<std::size_t>(n));
        for (auto& i : out)
            i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint32_t>(available)));
    } else {
        if (with_replacement) *with_replacement = false;
        // Fisher-Yates prefix of a full permutation
        std::vector<Eigen::Index> perm(static_cast<std::size_t>(available));
        for (Eigen::Index i = 0; i < available; ++i) perm[static_cast<std::size_t>(i)] = i;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index j =
                i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint32_t>(available - i)));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        }
        out.assign(perm.begin(), perm.begin() + n);
    }
    return out;
}

// Codebook file: magic "TGMM", u32 n_channels; per channel: name, u32 K,
// u32 d, f32 weights[K], f32 means[K*d], f32 variances[K*d].
inline void save_codebook(const std::filesystem::path& path, const GmmCodebook& book) {
    atomic_write(path, [&](std::ostream& os) {
        os.write("TGMM", 4);
        write_u32(os, static_cast<std::uint32_t>(book.channels.size()));
        for (std::size_t c = 0; c < book.channels.size(); ++c) {
            const auto& g = book.channels[c];
            write_string(os, book.channel_names[c]);
            write_u32(os, static_cast<std::uint32_t>(g.components()));
            write_u32(os, static_cast<std::uint32_t>(g.dim()));
            for (int k = 0; k < g.components(); ++k) write_f32(os, static_cast<float>(g.weights(k)));
            for (int k = 0; k < g.components(); ++k)
                for (int j = 0; j < g.dim(); ++j) write_f32(os, static_cast<float>(g.means(k, j)));
            for (int k = 0; k < g.components(); ++k)
                for (int j = 0; j < g.dim(); ++j)
                    write_f32(os, static_cast<float>(g.variances(k, j)));
        }
    });
}

inline GmmCodebook load_codebook(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open codebook: " + path.string());
    expect_magic(is, "TGMM", "codebook");
    GmmCodebook book;
    std::uint32_t n = read_u32(is);
    for (std::uint32_t c = 0; c < n; ++c) {
        book.channel_names.push_back(read_string(is));
        std::uint32_t K = read_u32(is);
        std::uint32_t d = read_u32(is);
        GmmChannel g;
        g.weights.resize(K);
        g.means.resize(K, d);
        g.variances.resize(K, d);
        for (std::uint32_t k = 0; k < K; ++k) g.weights(k) = read_f32(is);
        for (std::uint32_t k = 0; k < K; ++k)
            for (std::uint32_t j = 0; j < d; ++j) g.means(k, j) = read_f32(is);
        for (std::uint32_t k = 0; k < K; ++k)
            for (std::uint32_t j = 0; j < d; ++j) g.variances(k, j) = read_f32(is);
        book.channels.push_back(std::move(g));
    }
    return book;
}

}  // namespace tvr
