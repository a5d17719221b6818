#pragma once

// Linear self-expressive baselines: SSC and LRR solved by ADMM, and robust
// thresholding (RTSC) on the angular nearest-neighbour graph.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsc/data_io.hpp"
#include "dsc/error.hpp"
#include "dsc/linalg.hpp"
#include "dsc/metrics.hpp"
#include "dsc/self_expressive.hpp"
#include "dsc/spectral.hpp"

namespace dsc {

struct AdmmConfig {
    double lambda = 20.0;
    double rho = 1.0;
    int max_iters = 1000;
    double tol = 1e-6;
    double penalty_growth = 1.05;  // rho <- min(rho * growth, max_rho) after every iteration
    double max_rho = 1e10;

    void validate() const {
        detail::require(lambda > 0.0 && rho > 0.0 && tol > 0.0 && max_iters > 0,
                        "AdmmConfig: lambda, rho, tol and max_iters must be positive");
        detail::require(penalty_growth >= 1.0, "AdmmConfig: penalty_growth must be >= 1");
    }
};

struct AdmmResult {
    Matrix c;  // zero diagonal
    bool converged = false;
    int iterations = 0;
    std::vector<double> primal_residuals;
    std::vector<double> objective;
};

struct LrrResult : AdmmResult {
    Matrix e;         // column-sparse error
    Matrix low_rank;  // ADMM iterate for C before the diagonal is cleared
    double equality_residual = 0.0;  // ||X - X C - E||_F at exit
};

/// lambda = alpha / mu with mu = min_i max_{j != i} |<x_i, x_j>|, the usual
/// data-scaled choice for SSC.
inline double ssc_default_lambda(const Matrix& x, double alpha = 20.0) {
    Matrix g = (x.transpose() * x).cwiseAbs();
    g.diagonal().setZero();
    const double mu = g.rowwise().maxCoeff().minCoeff();
    return mu > 0.0 ? alpha / mu : alpha;
}

/// min ||C||_1 + (lambda/2) ||X - XC||_F^2  s.t. diag(C) = 0.
/// Split C = A; A-step is a ridge solve, C-step soft-thresholds and clears the
/// diagonal.
inline AdmmResult ssc(const Matrix& x, const AdmmConfig& cfg) {
    cfg.validate();
    detail::require(x.allFinite(), "ssc: non-finite data");
    const Eigen::Index n = x.cols();
    const Matrix g = x.transpose() * x;
    const EigenPairs eg = sym_eig(g);
    const Vector s = eg.values.cwiseMax(0.0);
    const Matrix& v = eg.vectors;
    const Matrix lg = cfg.lambda * g;

    Matrix c = Matrix::Zero(n, n);
    Matrix dual = Matrix::Zero(n, n);
    double rho = cfg.rho;
    AdmmResult r;
    for (int it = 0; it < cfg.max_iters; ++it) {
        const Vector inv = (cfg.lambda * s.array() + rho).inverse().matrix();
        const Matrix a = v * (inv.asDiagonal() * (v.transpose() * (lg + rho * c - dual)));
        c = soft_threshold(a + dual / rho, 1.0 / rho);
        c.diagonal().setZero();
        const Matrix diff = a - c;
        dual += rho * diff;
        const double res = diff.norm();
        r.primal_residuals.push_back(res);
        r.objective.push_back(c.cwiseAbs().sum() + 0.5 * cfg.lambda * (x - x * c).squaredNorm());
        r.iterations = it + 1;
        if (res < cfg.tol) {
            r.converged = true;
            break;
        }
        rho = std::min(rho * cfg.penalty_growth, cfg.max_rho);
    }
    r.c = std::move(c);
    return r;
}

namespace detail {

// Proximal operator of tau * ||.||_{2,1} (column-wise shrinkage).
inline Matrix column_shrink(const Matrix& a, double tau) {
    Matrix out = a;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double nrm = a.col(j).norm();
        out.col(j) = nrm > tau ? Vector(a.col(j) * ((nrm - tau) / nrm)) : Vector::Zero(a.rows());
    }
    return out;
}

}  // namespace detail

/// min ||C||_* + lambda ||E||_{2,1}  s.t. X = XC + E, via inexact ALM with
/// the auxiliary split C = J.
inline LrrResult lrr(const Matrix& x, const AdmmConfig& cfg) {
    cfg.validate();
    detail::require(x.allFinite(), "lrr: non-finite data");
    const Eigen::Index d = x.rows(), n = x.cols();
    const Matrix xtx = x.transpose() * x;
    const Eigen::LDLT<Matrix> solve(Matrix::Identity(n, n) + xtx);

    Matrix c = Matrix::Zero(n, n), j = Matrix::Zero(n, n), e = Matrix::Zero(d, n);
    Matrix y1 = Matrix::Zero(d, n), y2 = Matrix::Zero(n, n);
    double mu = cfg.rho;
    LrrResult r;
    for (int it = 0; it < cfg.max_iters; ++it) {
        j = singular_value_threshold(c + y2 / mu, 1.0 / mu);
        c = solve.solve(xtx - x.transpose() * e + j + (x.transpose() * y1 - y2) / mu);
        e = detail::column_shrink(x - x * c + y1 / mu, cfg.lambda / mu);
        const Matrix r1 = x - x * c - e;
        const Matrix r2 = c - j;
        y1 += mu * r1;
        y2 += mu * r2;
        const double res = std::max(r1.norm(), r2.norm());
        r.primal_residuals.push_back(res);
        double nuclear = svd(j).s.sum();
        double l21 = 0.0;
        for (Eigen::Index k = 0; k < e.cols(); ++k) l21 += e.col(k).norm();
        r.objective.push_back(nuclear + cfg.lambda * l21);
        r.iterations = it + 1;
        if (res < cfg.tol) {
            r.converged = true;
            break;
        }
        mu = std::min(mu * cfg.penalty_growth, cfg.max_rho);
    }
    r.equality_residual = (x - x * c - e).norm();
    r.low_rank = c;
    c.diagonal().setZero();
    r.c = std::move(c);
    r.e = std::move(e);
    return r;
}

/// Neighbourhood size q = max(floor(points_per_cluster / 20), 3).
inline int rtsc_neighbours(int points_per_cluster) { return std::max(points_per_cluster / 20, 3); }

/// Angular q-nearest-neighbour graph: s_ij = arccos(<x_i,x_j>/(|x_i||x_j|)),
/// neighbour weight exp(-s), symmetrised by max.
inline Affinity rtsc(const Matrix& x, int num_clusters, int points_per_cluster) {
    detail::require(num_clusters >= 1, "rtsc: num_clusters must be positive");
    const Eigen::Index n = x.cols();
    const Vector norms = x.colwise().norm().transpose();
    for (Eigen::Index i = 0; i < n; ++i) detail::require(norms(i) > 0.0, "rtsc: zero column " + std::to_string(i));
    const int q = static_cast<int>(std::min<Eigen::Index>(rtsc_neighbours(points_per_cluster), n - 1));
    const Matrix unit = x * norms.cwiseInverse().asDiagonal();
    const Matrix cosines = unit.transpose() * unit;
    Matrix w = Matrix::Zero(n, n);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i) {
        idx.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) idx.push_back(j);
        auto angle = [&](Eigen::Index j) { return std::acos(std::clamp(cosines(i, j), -1.0, 1.0)); };
        std::partial_sort(idx.begin(), idx.begin() + q, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
            const double sa = angle(a), sb = angle(b);
            return sa != sb ? sa < sb : a < b;
        });
        for (int k = 0; k < q; ++k) w(i, idx[k]) = std::exp(-angle(idx[k]));
    }
    return Affinity{w.cwiseMax(w.transpose())};
}

enum class BaselineKind { ssc, lrr, rtsc };

inline const char* to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::ssc: return "ssc";
        case BaselineKind::lrr: return "lrr";
        case BaselineKind::rtsc: return "rtsc";
    }
    return "ssc";
}

inline BaselineKind parse_baseline(std::string_view s) {
    if (s == "ssc") return BaselineKind::ssc;
    if (s == "lrr") return BaselineKind::lrr;
    if (s == "rtsc") return BaselineKind::rtsc;
    throw ContractError("unknown baseline: " + std::string(s));
}

struct BaselineRun {
    Labels labels;
    std::optional<MetricsReport> metrics;
    Affinity affinity;
    std::optional<Matrix> representation;  // absent for rtsc
    bool converged = true;
    int iterations = 0;
};

/// Builds C (or W for rtsc), optionally keeps the ipd_dim leading
/// coefficients per column, clusters on the shifted Laplacian and scores
/// against the dataset labels when present.
inline BaselineRun run_baseline(BaselineKind kind, const Dataset& ds, const AdmmConfig& cfg,
                                std::optional<int> ipd_dim, std::uint64_t seed) {
    detail::require(ds.num_clusters >= 2, "run_baseline: need at least two clusters");
    BaselineRun out;
    if (kind == BaselineKind::rtsc) {
        const int per_cluster = static_cast<int>(ds.size() / ds.num_clusters);
        out.affinity = rtsc(ds.x, ds.num_clusters, per_cluster);
        if (ipd_dim) out.affinity = affinity_from_c(ipd_postprocess(out.affinity.w, *ipd_dim));
    } else {
        AdmmResult r = kind == BaselineKind::ssc ? ssc(ds.x, cfg) : static_cast<AdmmResult>(lrr(ds.x, cfg));
        out.converged = r.converged;
        out.iterations = r.iterations;
        Matrix c = ipd_dim ? ipd_postprocess(r.c, *ipd_dim) : r.c;
        out.affinity = affinity_from_c(c);
        out.representation = std::move(c);
    }
    out.labels = spectral_cluster(out.affinity, ds.num_clusters, seed).labels;
    if (ds.labels) out.metrics = evaluate(*ds.labels, out.labels);
    return out;
}

}  // namespace dsc
