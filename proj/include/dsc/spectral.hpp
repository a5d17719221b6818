#pragma once

#include <cstdint>

#include "dsc/error.hpp"
#include "dsc/linalg.hpp"

namespace dsc {

/// Symmetric, nonnegative, zero-diagonal graph.
struct Affinity {
    Matrix w;
    Eigen::Index size() const { return w.rows(); }
};

/// One-hot N x K assignment plus the equivalent label sequence.
struct ClusterIndicator {
    Matrix q;
    Labels labels;

    int num_clusters() const { return static_cast<int>(q.cols()); }

    static ClusterIndicator from_labels(const Labels& labels, int k) {
        detail::require(k >= 1, "ClusterIndicator: k must be positive");
        ClusterIndicator ci;
        ci.labels = labels;
        ci.q = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
        for (size_t i = 0; i < labels.size(); ++i) {
            detail::require(labels[i] >= 0 && labels[i] < k, "ClusterIndicator: label out of range");
            ci.q(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
        }
        return ci;
    }

    /// Validates that q is binary with exactly one 1 per row and returns the labels it encodes.
    static Labels labels_of(const Matrix& q) {
        Labels out(static_cast<size_t>(q.rows()));
        for (Eigen::Index i = 0; i < q.rows(); ++i) {
            int hit = -1;
            for (Eigen::Index k = 0; k < q.cols(); ++k) {
                const double v = q(i, k);
                detail::require(v == 0.0 || v == 1.0, "cluster indicator must be binary");
                if (v == 1.0) {
                    detail::require(hit < 0, "cluster indicator row has more than one 1");
                    hit = static_cast<int>(k);
                }
            }
            detail::require(hit >= 0, "cluster indicator row has no 1");
            out[i] = hit;
        }
        return out;
    }
};

/// W = (|C| + |C^T|) / 2
inline Affinity affinity_from_c(const Matrix& c) {
    detail::require(c.rows() == c.cols(), "affinity_from_c: C must be square");
    Matrix a = c.cwiseAbs();
    Affinity out{0.5 * (a + a.transpose())};
    out.w.diagonal().setZero();
    return out;
}

namespace detail {

// D^{-1/2} with isolated vertices mapped to 0.
inline Vector inv_sqrt_degree(const Matrix& w) {
    const Vector deg = w.rowwise().sum();
    return deg.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
}

inline Matrix normalized_adjacency(const Affinity& a) {
    require(a.w.rows() == a.w.cols(), "laplacian: affinity must be square");
    const Vector s = inv_sqrt_degree(a.w);
    Matrix m = s.asDiagonal() * a.w * s.asDiagonal();
    return 0.5 * (m + m.transpose());
}

}  // namespace detail

/// I - D^{-1/2} W D^{-1/2}
inline Matrix normalized_laplacian(const Affinity& a) {
    const Eigen::Index n = a.w.rows();
    return Matrix::Identity(n, n) - detail::normalized_adjacency(a);
}

/// 2I - L~ = I + D^{-1/2} W D^{-1/2}
inline Matrix shifted_laplacian(const Affinity& a) {
    const Eigen::Index n = a.w.rows();
    return Matrix::Identity(n, n) + detail::normalized_adjacency(a);
}

/// k-means on the row-normalised leading k eigenvectors of the shifted Laplacian.
inline ClusterIndicator spectral_cluster(const Affinity& a, int k, std::uint64_t seed, int restarts = 10) {
    const auto n = a.w.rows();
    detail::require(k >= 2 && k <= n, "spectral_cluster: k must lie in [2, N]");
    const EigenPairs eig = sym_eig(shifted_laplacian(a));
    Matrix emb = eig.vectors.leftCols(k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double nrm = emb.row(i).norm();
        if (nrm > 0.0) emb.row(i) /= nrm;
    }
    return ClusterIndicator::from_labels(kmeans(emb, k, seed, restarts), k);
}

}  // namespace dsc
