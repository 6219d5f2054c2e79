#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "tvr/gmm.hpp"

namespace tvr {

// Improved-Fisher-vector gradient blocks with respect to means and
// variances; weight gradients are excluded, so the per-channel dimension is
// exactly 2*K*d. Empty input yields the all-zero vector.
inline Eigen::VectorXd fisher_encode(const MatrixD& rows, const GmmChannel& g) {
    const int K = g.components();
    const int d = g.dim();
    if (rows.rows() > 0 && rows.cols() != d)
        throw DataError("descriptor dimension " + std::to_string(rows.cols()) +
                        " does not match GMM dimension " + std::to_string(d));
    Eigen::VectorXd fv = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(K) * d);
    const Eigen::Index n = rows.rows();
    if (n == 0) return fv;

    MatrixD post = gmm_posteriors(rows, g);
    for (int k = 0; k < K; ++k) {
        Eigen::ArrayXd gamma = post.col(k).array();
        double wk = g.weights(k);
        for (int j = 0; j < d; ++j) {
            double sigma = std::sqrt(g.variances(k, j));
            Eigen::ArrayXd z = (rows.col(j).array() - g.means(k, j)) / sigma;
            double gmu = (gamma * z).sum() / (n * std::sqrt(wk));
            double gsig = (gamma * (z.square() - 1.0)).sum() / (n * std::sqrt(2.0 * wk));
            fv(static_cast<Eigen::Index>(k) * d + j) = gmu;
            fv(static_cast<Eigen::Index>(K) * d + static_cast<Eigen::Index>(k) * d + j) = gsig;
        }
    }
    return fv;
}

// Signed power normalization (elementwise signed square root) followed by
// global L2 normalization. The zero vector maps to itself.
inline Eigen::VectorXd normalize_encoding(const Eigen::VectorXd& v) {
    if (!v.allFinite()) throw DataError("non-finite entries in encoding");
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double x = v(i);
        out(i) = x >= 0 ? std::sqrt(x) : -std::sqrt(-x);
    }
    double norm = out.norm();
    if (norm > 0) out /= norm;
    return out;
}

struct EncodingBlock {
    std::string channel;
    int level = 1;    // TDP level that produced the block (1 for baseline)
    int region = 0;   // temporal region index within the level
    Eigen::Index offset = 0;
    Eigen::Index length = 0;
};

struct Encoding {
    Eigen::VectorXf vector;
    std::vector<EncodingBlock> layout;

    Eigen::VectorXf block(const EncodingBlock& b) const {
        return vector.segment(b.offset, b.length);
    }

    void validate() const {
        Eigen::Index total = 0;
        for (const auto& b : layout) {
            if (b.offset != total) throw DataError("encoding layout offsets are not contiguous");
            total += b.length;
        }
        if (total != vector.size()) throw DataError("encoding layout does not cover the vector");
    }
};

// Concatenates per-channel normalized vectors in the fixed channel order,
// recording the layout. All expected channels must be present.
inline Encoding concat_channels(const std::vector<std::string>& order,
                                const std::vector<std::string>& names,
                                const std::vector<Eigen::VectorXd>& vectors, int level = 1,
                                int region = 0) {
    if (names.size() != vectors.size()) throw DataError("channel name/vector count mismatch");
    Encoding enc;
    Eigen::Index total = 0;
    std::vector<const Eigen::VectorXd*> ordered;
    for (const auto& want : order) {
        const Eigen::VectorXd* found = nullptr;
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == want) found = &vectors[i];
        if (!found) throw DataError("missing channel in encoding: " + want);
        ordered.push_back(found);
        total += found->size();
    }
    enc.vector.resize(total);
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        enc.vector.segment(off, ordered[i]->size()) = ordered[i]->cast<float>();
        enc.layout.push_back({order[i], level, region, off, ordered[i]->size()});
        off += ordered[i]->size();
    }
    return enc;
}

// Encoding file: magic "TENC", u32 n_blocks layout table, then f32 payload.
inline void save_encoding(const std::filesystem::path& path, const Encoding& enc) {
    enc.validate();
    atomic_write(path, [&](std::ostream& os) {
        os.write("TENC", 4);
        write_u32(os, static_cast<std::uint32_t>(enc.layout.size()));
        for (const auto& b : enc.layout) {
            write_string(os, b.channel);
            write_u32(os, static_cast<std::uint32_t>(b.level));
            write_u32(os, static_cast<std::uint32_t>(b.region));
            write_u32(os, static_cast<std::uint32_t>(b.offset));
            write_u32(os, static_cast<std::uint32_t>(b.length));
        }
        write_u32(os, static_cast<std::uint32_t>(enc.vector.size()));
        write_f32_block(os, enc.vector.data(), static_cast<std::size_t>(enc.vector.size()));
    });
}

inline Encoding load_encoding(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open encoding: " + path.string());
    expect_magic(is, "TENC", "encoding");
    Encoding enc;
    std::uint32_t nb = read_u32(is);
    for (std::uint32_t i = 0; i < nb; ++i) {
        EncodingBlock b;
        b.channel = read_string(is);
        b.level = static_cast<int>(read_u32(is));
        b.region = static_cast<int>(read_u32(is));
        b.offset = static_cast<Eigen::Index>(read_u32(is));
        b.length = static_cast<Eigen::Index>(read_u32(is));
        enc.layout.push_back(std::move(b));
    }
    std::uint32_t n = read_u32(is);
    enc.vector.resize(n);
    read_f32_block(is, enc.vector.data(), n);
    enc.validate();
    return enc;
}

}  // namespace tvr
