#pragma once

// Clustering quality: permutation-matched accuracy, normalized mutual
// information (sqrt normalization, natural log) and pair-counting F1.

#include <cmath>
#include <map>
#include <utility>

#include "dsc/error.hpp"
#include "dsc/linalg.hpp"

namespace dsc {

struct MetricsReport {
    double acc = 0.0;
    double nmi = 0.0;
    double f1 = 0.0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

namespace detail {

// Contingency table between two labelings with ids compacted independently.
inline Matrix contingency(const Labels& truth, const Labels& pred) {
    require(truth.size() == pred.size(), "metrics: label sequences differ in length");
    std::map<int, int> ti, pi;
    for (int l : truth) ti.emplace(l, 0);
    for (int l : pred) pi.emplace(l, 0);
    int n = 0;
    for (auto& [k, v] : ti) v = n++;
    n = 0;
    for (auto& [k, v] : pi) v = n++;
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(ti.size()), static_cast<Eigen::Index>(pi.size()));
    for (size_t i = 0; i < truth.size(); ++i) m(ti[truth[i]], pi[pred[i]]) += 1.0;
    return m;
}

inline double entropy(const Vector& counts, double n) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < counts.size(); ++i)
        if (counts(i) > 0) h -= counts(i) / n * std::log(counts(i) / n);
    return h;
}

}  // namespace detail

inline double acc(const Labels& truth, const Labels& pred) {
    const Matrix m = detail::contingency(truth, pred);
    if (truth.empty()) return 0.0;
    const Eigen::Index k = std::max(m.rows(), m.cols());
    Matrix cost = Matrix::Zero(k, k);
    cost.topLeftCorner(m.rows(), m.cols()) = -m;
    const auto perm = optimal_assignment(cost);
    double hit = 0.0;
    for (Eigen::Index r = 0; r < k; ++r) hit -= cost(r, perm[r]);
    return hit / static_cast<double>(truth.size());
}

inline double nmi(const Labels& truth, const Labels& pred) {
    const Matrix m = detail::contingency(truth, pred);
    if (truth.empty()) return 0.0;
    const double n = static_cast<double>(truth.size());
    const Vector rows = m.rowwise().sum();
    const Vector cols = m.colwise().sum().transpose();
    const double ht = detail::entropy(rows, n);
    const double hp = detail::entropy(cols, n);
    if (ht <= 0.0 || hp <= 0.0) return 0.0;
    double mi = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (m(i, j) > 0) mi += m(i, j) / n * std::log(n * m(i, j) / (rows(i) * cols(j)));
    return std::clamp(mi / std::sqrt(ht * hp), 0.0, 1.0);
}

inline double f1_pairwise(const Labels& truth, const Labels& pred) {
    const Matrix m = detail::contingency(truth, pred);
    auto pairs = [](double c) { return c * (c - 1.0) / 2.0; };
    double tp = 0.0, same_pred = 0.0, same_truth = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) tp += pairs(m(i, j));
    for (Eigen::Index j = 0; j < m.cols(); ++j) same_pred += pairs(m.col(j).sum());
    for (Eigen::Index i = 0; i < m.rows(); ++i) same_truth += pairs(m.row(i).sum());
    const double fp = same_pred - tp;
    const double fn = same_truth - tp;
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline MetricsReport evaluate(const Labels& truth, const Labels& pred) {
    return {acc(truth, pred), nmi(truth, pred), f1_pairwise(truth, pred)};
}

}  // namespace dsc
