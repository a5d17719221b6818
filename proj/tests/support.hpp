#pragma once

// Independent reference implementations used as test oracles. Deliberately
// naive: loops and brute force only, no shared code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
    return m;
}

inline Matrix random_symmetric(Eigen::Index n, std::uint64_t seed) {
    const Matrix a = random_matrix(n, n, seed);
    return 0.5 * (a + a.transpose());
}

/// Random nonnegative symmetric zero-diagonal graph with some zero entries.
inline Matrix random_affinity(Eigen::Index n, std::uint64_t seed, double density = 0.6) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix w = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (u(rng) < density) w(i, j) = w(j, i) = u(rng);
    return w;
}

inline std::vector<int> random_labels(size_t n, int k, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> d(0, k - 1);
    std::vector<int> out(n);
    for (auto& v : out) v = d(rng);
    return out;
}

/// Minimum of sum_i cost(i, perm[i]) over all permutations.
inline double brute_force_assignment(const Matrix& cost) {
    std::vector<int> perm(static_cast<size_t>(cost.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (size_t i = 0; i < perm.size(); ++i) s += cost(static_cast<Eigen::Index>(i), perm[i]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Best accuracy over every injective relabelling of predicted ids.
inline double brute_force_acc(const std::vector<int>& truth, const std::vector<int>& pred) {
    std::set<int> ts(truth.begin(), truth.end()), ps(pred.begin(), pred.end());
    std::vector<int> tv(ts.begin(), ts.end()), pv(ps.begin(), ps.end());
    const size_t k = std::max(tv.size(), pv.size());
    std::vector<int> slots(k);
    std::iota(slots.begin(), slots.end(), 0);
    size_t best = 0;
    do {
        std::map<int, int> to_truth;  // predicted id -> truth id (or -1 for padding)
        for (size_t a = 0; a < pv.size(); ++a) to_truth[pv[a]] = slots[a] < static_cast<int>(tv.size()) ? tv[slots[a]] : -1;
        size_t hit = 0;
        for (size_t i = 0; i < truth.size(); ++i) hit += to_truth[pred[i]] == truth[i];
        best = std::max(best, hit);
    } while (std::next_permutation(slots.begin(), slots.end()));
    return static_cast<double>(best) / static_cast<double>(truth.size());
}

/// NMI from its entropy definition: I(T;P) / sqrt(H(T) H(P)), natural log.
inline double naive_nmi(const std::vector<int>& t, const std::vector<int>& p) {
    const double n = static_cast<double>(t.size());
    std::map<int, double> ct, cp;
    std::map<std::pair<int, int>, double> joint;
    for (size_t i = 0; i < t.size(); ++i) {
        ct[t[i]] += 1;
        cp[p[i]] += 1;
        joint[{t[i], p[i]}] += 1;
    }
    double ht = 0, hp = 0, mi = 0;
    for (auto& [k, c] : ct) ht -= c / n * std::log(c / n);
    for (auto& [k, c] : cp) hp -= c / n * std::log(c / n);
    for (auto& [k, c] : joint) mi += c / n * std::log((c / n) / ((ct[k.first] / n) * (cp[k.second] / n)));
    if (ht <= 0 || hp <= 0) return 0.0;
    return mi / std::sqrt(ht * hp);
}

/// Pair-counting F1 by an explicit loop over unordered pairs.
inline double naive_f1(const std::vector<int>& t, const std::vector<int>& p) {
    double tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < t.size(); ++i)
        for (size_t j = i + 1; j < t.size(); ++j) {
            const bool st = t[i] == t[j], sp = p[i] == p[j];
            tp += st && sp;
            fp += !st && sp;
            fn += st && !sp;
        }
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
}

/// Central finite differences of f at theta.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& theta, double h = 1e-5) {
    Vector g(theta.size());
    Vector t = theta;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double keep = t(i);
        t(i) = keep + h;
        const double up = f(t);
        t(i) = keep - h;
        const double down = f(t);
        t(i) = keep;
        g(i) = (up - down) / (2 * h);
    }
    return g;
}

inline double rel_err(const Vector& a, const Vector& b) {
    const double scale = std::max({a.norm(), b.norm(), 1e-12});
    return (a - b).norm() / scale;
}

inline Vector flat(const Matrix& m) { return m.reshaped(); }

}  // namespace oracle
