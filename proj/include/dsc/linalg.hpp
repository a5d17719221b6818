#pragma once

// Dense numerical substrate shared by every other module: symmetric
// eigendecomposition, SVD, k-means, optimal assignment, pairwise distances
// and the proximal operators used by the ADMM solvers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dsc/error.hpp"

namespace dsc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

/// Eigenvalues sorted descending, one eigenvector per column.
struct EigenPairs {
    Vector values;
    Matrix vectors;
};

struct SvdResult {
    Matrix u;
    Vector s;  // nonnegative, descending
    Matrix v;
};

namespace detail {

inline void check_symmetric(const Matrix& a, const char* who) {
    require(a.rows() == a.cols(), std::string(who) + ": matrix must be square");
    require(a.allFinite(), std::string(who) + ": non-finite entry");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    require(asym <= 1e-10 * scale, std::string(who) + ": matrix is not symmetric");
}

// Flip each eigenvector so its largest-magnitude component is positive. Makes
// downstream k-means independent of the solver's sign choice.
inline void canonical_signs(Matrix& v) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        Eigen::Index idx = 0;
        v.col(j).cwiseAbs().maxCoeff(&idx);
        if (v(idx, j) < 0) v.col(j) = -v.col(j);
    }
}

}  // namespace detail

/// Full spectrum of a symmetric matrix, eigenvalues descending.
inline EigenPairs sym_eig(const Matrix& a) {
    detail::check_symmetric(a, "sym_eig");
    const Eigen::Index n = a.rows();
    EigenPairs out;
    if (n == 0) return out;
    // Only the lower triangle is read; symmetrise exactly so tiny asymmetries
    // within tolerance do not bias the result.
    const Matrix sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) throw ContractError("sym_eig: solver failed");
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    detail::canonical_signs(out.vectors);
    return out;
}

/// Thin SVD, a = u * diag(s) * v^T.
inline SvdResult svd(const Matrix& a) {
    detail::require(a.allFinite(), "svd: non-finite entry");
    SvdResult out;
    if (a.size() == 0) {
        out.u = Matrix(a.rows(), 0);
        out.v = Matrix(a.cols(), 0);
        return out;
    }
    Eigen::BDCSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.u = solver.matrixU();
    out.s = solver.singularValues();
    out.v = solver.matrixV();
    return out;
}

/// Entrywise sign(a)*max(|a|-tau, 0).
inline Matrix soft_threshold(const Matrix& a, double tau) {
    detail::require(tau >= 0.0, "soft_threshold: tau must be nonnegative");
    return a.unaryExpr([tau](double v) {
        const double m = std::abs(v) - tau;
        return m > 0.0 ? std::copysign(m, v) : 0.0;
    });
}

/// Proximal operator of tau*||.||_*.
inline Matrix singular_value_threshold(const Matrix& a, double tau) {
    detail::require(tau >= 0.0, "singular_value_threshold: tau must be nonnegative");
    if (a.size() == 0) return a;
    const SvdResult d = svd(a);
    const Vector shrunk = (d.s.array() - tau).max(0.0).matrix();
    return d.u * shrunk.asDiagonal() * d.v.transpose();
}

/// Euclidean distances between the columns of x.
inline Matrix pairwise_l2(const Matrix& x) {
    const Eigen::Index n = x.cols();
    Matrix h = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double d = (x.col(i) - x.col(j)).norm();
            h(i, j) = d;
            h(j, i) = d;
        }
    }
    return h;
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with row/column potentials, O(n^3)). Returns perm with perm[row] = column.
inline std::vector<int> optimal_assignment(const Matrix& cost) {
    detail::require(cost.rows() == cost.cols(), "optimal_assignment: cost must be square");
    detail::require(cost.allFinite(), "optimal_assignment: non-finite cost");
    const int n = static_cast<int>(cost.rows());
    if (n == 0) return {};
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; column 0 is a virtual source.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> perm(n, -1);
    for (int j = 1; j <= n; ++j) perm[match[j] - 1] = j - 1;
    return perm;
}

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 300;
    double tolerance = 1e-6;  // relative inertia change
};

struct KMeansResult {
    Labels labels;
    Matrix centroids;  // k x dim
    double inertia = 0.0;
};

namespace detail {

inline double sq_dist(const Matrix& points, Eigen::Index i, const Matrix& centroids, Eigen::Index c) {
    return (points.row(i) - centroids.row(c)).squaredNorm();
}

inline Matrix kmeanspp_seed(const Matrix& points, int k, std::mt19937_64& rng) {
    const Eigen::Index n = points.rows();
    Matrix centroids(k, points.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centroids.row(0) = points.row(first(rng));
    std::vector<double> mind(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) mind[i] = sq_dist(points, i, centroids, 0);
    for (int c = 1; c < k; ++c) {
        const double total = std::accumulate(mind.begin(), mind.end(), 0.0);
        Eigen::Index pick;
        if (total <= 0.0) {
            pick = first(rng);
        } else {
            std::discrete_distribution<Eigen::Index> dd(mind.begin(), mind.end());
            pick = dd(rng);
        }
        centroids.row(c) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) mind[i] = std::min(mind[i], sq_dist(points, i, centroids, c));
    }
    return centroids;
}

inline double assign(const Matrix& points, const Matrix& centroids, Labels& labels, std::vector<double>& dist) {
    const Eigen::Index n = points.rows();
    const Eigen::Index k = centroids.rows();
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (Eigen::Index c = 0; c < k; ++c) {
            const double d = sq_dist(points, i, centroids, c);
            if (d < best) {
                best = d;
                arg = static_cast<int>(c);
            }
        }
        labels[i] = arg;
        dist[i] = best;
        inertia += best;
    }
    return inertia;
}

inline KMeansResult lloyd(const Matrix& points, int k, std::mt19937_64& rng, const KMeansOptions& opt) {
    const Eigen::Index n = points.rows();
    KMeansResult r;
    r.centroids = kmeanspp_seed(points, k, rng);
    r.labels.assign(static_cast<size_t>(n), 0);
    std::vector<double> dist(static_cast<size_t>(n), 0.0);
    double prev = std::numeric_limits<double>::infinity();
    r.inertia = assign(points, r.centroids, r.labels, dist);
    for (int it = 0; it < opt.max_iterations; ++it) {
        Matrix sums = Matrix::Zero(k, points.cols());
        std::vector<int> counts(static_cast<size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(r.labels[i]) += points.row(i);
            ++counts[r.labels[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                r.centroids.row(c) = sums.row(c) / counts[c];
                continue;
            }
            // Empty cluster: move it onto the point farthest from its centroid.
            const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
            r.centroids.row(c) = points.row(far);
            dist[far] = 0.0;
        }
        prev = r.inertia;
        r.inertia = assign(points, r.centroids, r.labels, dist);
        if (prev - r.inertia <= opt.tolerance * prev) break;
    }
    return r;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
/// within-cluster sum of squares wins. Points are rows.
inline KMeansResult kmeans_detailed(const Matrix& points, int k, std::uint64_t seed,
                                    const KMeansOptions& opt = {}) {
    detail::require(k >= 1, "kmeans: k must be at least 1");
    detail::require(k <= points.rows(), "kmeans: k exceeds number of points");
    detail::require(points.allFinite(), "kmeans: non-finite point");
    detail::require(opt.restarts >= 1, "kmeans: restarts must be at least 1");
    std::mt19937_64 master(seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < opt.restarts; ++r) {
        std::mt19937_64 rng(master());
        KMeansResult cur = detail::lloyd(points, k, rng, opt);
        if (cur.inertia < best.inertia) best = std::move(cur);
    }
    return best;
}

inline Labels kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts = 10) {
    KMeansOptions opt;
    opt.restarts = restarts;
    return kmeans_detailed(points, k, seed, opt).labels;
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from a fixed start vector.
inline double psd_spectral_radius(const Matrix& g, int iterations = 100) {
    const Eigen::Index n = g.rows();
    if (n == 0) return 0.0;
    Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i) v(i) += 1e-3 * static_cast<double>(i % 7) / static_cast<double>(n);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector w = g * v;
        const double nrm = w.norm();
        if (nrm == 0.0) return 0.0;
        const double next = v.dot(w);
        v = w / nrm;
        if (std::abs(next - lambda) <= 1e-10 * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

}  // namespace dsc
