#pragma once

// Joint self-expressive representation C shared by every encoder layer (and
// the raw input), the clustering-quality norm ||C||_Q, the sequential
// fine-tuning stages, the weighted composite ("oracle") mode, IPD
// post-processing and the label-free stopping rule.

#include <cmath>
#include <iostream>
#include <optional>
#include <vector>

#include "dsc/autoencoder.hpp"
#include "dsc/error.hpp"
#include "dsc/linalg.hpp"
#include "dsc/spectral.hpp"

namespace dsc {

enum class SelfExpression { joint, last };

inline const char* to_string(SelfExpression s) { return s == SelfExpression::joint ? "joint" : "last"; }

inline void zero_diagonal(Matrix& c) { c.diagonal().setZero(); }

namespace detail {

inline void check_se_inputs(const LayerStack& stack, const Matrix& c) {
    require(!stack.empty(), "self-expression: empty layer stack");
    const Eigen::Index n = stack.front().cols();
    require(c.rows() == n && c.cols() == n, "self-expression: C must be N x N with N = " + std::to_string(n));
    for (const auto& l : stack) require(l.cols() == n, "self-expression: layer column counts differ");
}

inline size_t first_layer(const LayerStack& stack, SelfExpression mode) {
    return mode == SelfExpression::joint ? 0 : stack.size() - 1;
}

}  // namespace detail

/// sum_{m=0}^{M/2} ||X^m - X^m C||_F^2
inline double loss_se_joint(const LayerStack& stack, const Matrix& c) {
    detail::check_se_inputs(stack, c);
    double total = 0.0;
    for (const auto& xm : stack) total += (xm - xm * c).squaredNorm();
    return total;
}

/// ||X^{M/2} - X^{M/2} C||_F^2, encoder output only.
inline double loss_se_last(const LayerStack& stack, const Matrix& c) {
    detail::check_se_inputs(stack, c);
    const Matrix& xm = stack.back();
    return (xm - xm * c).squaredNorm();
}

inline double loss_se(const LayerStack& stack, const Matrix& c, SelfExpression mode) {
    return mode == SelfExpression::joint ? loss_se_joint(stack, c) : loss_se_last(stack, c);
}

/// Gram matrix sum_m X^m^T X^m over the layers the loss sees.
inline Matrix se_gram(const LayerStack& stack, SelfExpression mode) {
    const Eigen::Index n = stack.front().cols();
    Matrix g = Matrix::Zero(n, n);
    for (size_t m = detail::first_layer(stack, mode); m < stack.size(); ++m)
        g.noalias() += stack[m].transpose() * stack[m];
    return g;
}

/// d/dC = -2 G (I - C) with G the layer Gram sum. The diagonal is left in;
/// callers project after stepping.
inline Matrix grad_se_c(const LayerStack& stack, const Matrix& c, SelfExpression mode) {
    detail::check_se_inputs(stack, c);
    const Matrix g = se_gram(stack, mode);
    return -2.0 * (g - g * c);
}

/// d/dX^m = 2 (X^m - X^m C)(I - C)^T for the layers the loss sees, empty otherwise.
inline std::vector<Matrix> grad_se_stack(const LayerStack& stack, const Matrix& c, SelfExpression mode) {
    detail::check_se_inputs(stack, c);
    const Eigen::Index n = c.rows();
    const Matrix ic = Matrix::Identity(n, n) - c;
    std::vector<Matrix> out(stack.size());
    for (size_t m = detail::first_layer(stack, mode); m < stack.size(); ++m)
        out[m] = 2.0 * (stack[m] * ic) * ic.transpose();
    return out;
}

namespace detail {

inline Labels indicator_labels(const Matrix& c, const ClusterIndicator& q) {
    require(q.q.rows() == c.rows(), "loss_q: indicator must have N rows");
    require(c.rows() == c.cols(), "loss_q: C must be square");
    return ClusterIndicator::labels_of(q.q);
}

}  // namespace detail

/// ||C||_Q = sum_{i,j} |c_ij| ||q_i - q_j||^2 / 2, by the explicit pair sum.
inline double loss_q(const Matrix& c, const ClusterIndicator& q) {
    const Labels lab = detail::indicator_labels(c, q);
    double total = 0.0;
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            if (lab[i] != lab[j]) total += std::abs(c(i, j));  // ||q_i - q_j||^2 / 2 == 1
    return total;
}

/// ||C||_Q by tr(Q^T L_C Q) with L_C built from W = (|C| + |C^T|)/2.
inline double loss_q_trace(const Matrix& c, const ClusterIndicator& q) {
    detail::indicator_labels(c, q);
    const Matrix w = affinity_from_c(c).w;
    const Vector deg = w.rowwise().sum();
    const Matrix lap = Matrix(deg.asDiagonal()) - w;
    return (q.q.transpose() * lap * q.q).trace();
}

/// Subgradient sign(c_ij) ||q_i - q_j||^2 / 2, taken as 0 at c_ij = 0.
inline Matrix grad_q_c(const Matrix& c, const ClusterIndicator& q) {
    const Labels lab = detail::indicator_labels(c, q);
    Matrix g = Matrix::Zero(c.rows(), c.cols());
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            if (lab[i] != lab[j] && c(i, j) != 0.0) g(i, j) = c(i, j) > 0.0 ? 1.0 : -1.0;
    return g;
}

/// Label-free stopping rule on the stream of affinity matrices.
/// eps_t = ||W_t - W_{t-1}||_F; stop once |eps_t - eps_{t-1}| / N <= delta.
struct StoppingState {
    std::optional<Matrix> previous_affinity;
    std::vector<double> epsilon_history;
    double delta = 0.01;
    Eigen::Index n = 0;

    StoppingState() = default;
    StoppingState(double delta_, Eigen::Index n_) : delta(delta_), n(n_) {}
};

/// The rule itself, on a ready epsilon sequence.
inline bool stopping_rule_met(const std::vector<double>& eps, double delta, Eigen::Index n) {
    if (eps.size() < 2) return false;
    const double change = std::abs(eps[eps.size() - 1] - eps[eps.size() - 2]);
    return change / static_cast<double>(n) <= delta;
}

inline bool stopping_check(StoppingState& s, const Affinity& w) {
    detail::require(s.delta > 0.0, "stopping_check: delta must be positive");
    if (s.n <= 0) s.n = w.size();
    if (!s.previous_affinity) {
        s.previous_affinity = w.w;
        return false;
    }
    s.epsilon_history.push_back((w.w - *s.previous_affinity).norm());
    s.previous_affinity = w.w;
    return stopping_rule_met(s.epsilon_history, s.delta, s.n);
}

/// Keeps the d largest-magnitude entries of every column (ties resolved by
/// lower row index); the diagonal stays zero.
inline Matrix ipd_postprocess(const Matrix& c, int d) {
    const Eigen::Index n = c.rows();
    detail::require(c.rows() == c.cols(), "ipd_postprocess: C must be square");
    detail::require(d >= 1 && d < n, "ipd_postprocess: d must lie in [1, N)");
    Matrix out = Matrix::Zero(n, n);
    std::vector<Eigen::Index> idx(static_cast<size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        std::partial_sort(idx.begin(), idx.begin() + d, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
            const double fa = std::abs(c(a, j)), fb = std::abs(c(b, j));
            return fa != fb ? fa > fb : a < b;
        });
        for (int r = 0; r < d; ++r) out(idx[r], j) = c(idx[r], j);
    }
    zero_diagonal(out);
    return out;
}

/// Fraction of |C| mass that links points with the same label.
inline double subspace_preserving_rate(const Matrix& c, const Labels& labels) {
    detail::require(c.rows() == c.cols(), "subspace_preserving_rate: C must be square");
    detail::require(static_cast<Eigen::Index>(labels.size()) == c.rows(),
                    "subspace_preserving_rate: labels must have length N");
    double same = 0.0, total = 0.0;
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            const double a = std::abs(c(i, j));
            total += a;
            if (labels[i] == labels[j]) same += a;
        }
    if (total == 0.0) {
        std::cerr << "warning: subspace_preserving_rate of an all-zero representation is defined as 0\n";
        return 0.0;
    }
    return same / total;
}

struct FinetuneResult {
    AutoencoderParams params;
    Matrix c;
    int epochs = 0;
    bool stopped_by_rule = false;
    std::vector<double> epsilon_history;
    std::vector<double> losses;  // stage objective at the start of each epoch
    std::optional<ClusterIndicator> q;  // last indicator used (stage 2, oracle)
};

namespace detail {

inline void check_finite(double v, const char* stage, int epoch) {
    if (!std::isfinite(v)) throw TrainingError(stage, epoch, "loss is not finite");
}

// Projected gradient step on the self-expression loss with step 1/L, where
// L = 2 lambda_max(G) is the Lipschitz constant of the C-gradient.
inline void se_c_step(Matrix& c, const LayerStack& stack, SelfExpression mode) {
    const Matrix g = se_gram(stack, mode);
    const double lmax = psd_spectral_radius(g);
    if (lmax <= 0.0) return;
    c += (g - g * c) / lmax;  // c - grad / (2 lmax)
    zero_diagonal(c);
}

// Off-diagonal mean magnitude; sets the scale of the ||C||_Q shrinkage step.
inline double mean_offdiag_magnitude(const Matrix& c) {
    const Eigen::Index n = c.rows();
    if (n < 2) return 0.0;
    return (c.cwiseAbs().sum() - c.diagonal().cwiseAbs().sum()) / static_cast<double>(n * (n - 1));
}

// Subgradient step of size eta on ||C||_Q with fixed Q, clipped so no entry
// crosses zero.
inline void q_shrink_step(Matrix& c, const Labels& labels, double eta) {
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            if (labels[i] == labels[j]) continue;
            const double m = std::abs(c(i, j)) - eta;
            c(i, j) = m > 0.0 ? std::copysign(m, c(i, j)) : 0.0;
        }
    zero_diagonal(c);
}

}  // namespace detail

/// Stage 1: alternate a C-step and an encoder step on the self-expression
/// loss (all layers for `joint`, encoder output for `last`) until the
/// stopping rule fires or max_finetune_epochs is reached.
inline FinetuneResult finetune_stage1(AutoencoderParams p, Matrix c, const Matrix& x, const TrainConfig& cfg,
                                      SelfExpression mode = SelfExpression::joint) {
    cfg.validate();
    detail::require(c.rows() == x.cols() && c.cols() == x.cols(), "finetune_stage1: C must be N x N");
    zero_diagonal(c);
    FinetuneResult r;
    StoppingState stop(cfg.delta, x.cols());
    Adam opt(cfg.learning_rate);
    Vector theta = pack(p, ParamGroup::encoder);
    for (int epoch = 0; epoch < cfg.max_finetune_epochs; ++epoch) {
        ForwardTrace t = forward_trace(p, x, false);
        const double loss = loss_se(t.stack, c, mode);
        detail::check_finite(loss, "stage1", epoch);
        r.losses.push_back(loss);

        detail::se_c_step(c, t.stack, mode);

        const AutoencoderParams g = backward(p, t, grad_se_stack(t.stack, c, mode), Matrix());
        opt.step(theta, pack(g, ParamGroup::encoder));
        unpack(p, theta, ParamGroup::encoder);

        r.epochs = epoch + 1;
        if (!c.allFinite() || !theta.allFinite()) throw TrainingError("stage1", epoch, "parameters are not finite");
        if (stopping_check(stop, affinity_from_c(c))) {
            r.stopped_by_rule = true;
            break;
        }
    }
    r.params = std::move(p);
    r.c = std::move(c);
    r.epsilon_history = std::move(stop.epsilon_history);
    return r;
}

/// Stage 2: minimise ||C||_Q with Q from spectral clustering of the current C,
/// refreshed every q_refresh_period epochs. The encoder is frozen unless
/// update_encoder is set, in which case it keeps following the joint
/// self-expression loss.
inline FinetuneResult finetune_stage2(AutoencoderParams p, Matrix c, const Matrix& x, int num_clusters,
                                      const TrainConfig& cfg, bool update_encoder = false) {
    cfg.validate();
    detail::require(c.rows() == x.cols() && c.cols() == x.cols(), "finetune_stage2: C must be N x N");
    zero_diagonal(c);
    FinetuneResult r;
    StoppingState stop(cfg.delta, x.cols());
    Adam opt(cfg.learning_rate);
    Vector theta = pack(p, ParamGroup::encoder);
    const double eta = detail::mean_offdiag_magnitude(c);
    ClusterIndicator q;
    for (int epoch = 0; epoch < cfg.max_finetune_epochs; ++epoch) {
        if (epoch % cfg.q_refresh_period == 0)
            q = spectral_cluster(affinity_from_c(c), num_clusters, cfg.seed);
        const double loss = loss_q(c, q);
        detail::check_finite(loss, "stage2", epoch);
        r.losses.push_back(loss);

        detail::q_shrink_step(c, q.labels, eta);

        if (update_encoder) {
            ForwardTrace t = forward_trace(p, x, false);
            const AutoencoderParams g = backward(p, t, grad_se_stack(t.stack, c, SelfExpression::joint), Matrix());
            opt.step(theta, pack(g, ParamGroup::encoder));
            unpack(p, theta, ParamGroup::encoder);
        }

        r.epochs = epoch + 1;
        if (stopping_check(stop, affinity_from_c(c))) {
            r.stopped_by_rule = true;
            break;
        }
    }
    r.params = std::move(p);
    r.c = std::move(c);
    r.q = std::move(q);
    r.epsilon_history = std::move(stop.epsilon_history);
    return r;
}

struct OracleWeights {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

struct CompositeGradient {
    double loss = 0.0;
    AutoencoderParams params;  // gradient w.r.t. encoder and decoder
    Matrix c;                  // gradient (subgradient for the Q part) w.r.t. C
};

/// Value and gradient of L0 + lambda1 * L_SE + lambda2 * ||C||_Q for fixed Q.
inline CompositeGradient composite_gradient(const AutoencoderParams& p, const Matrix& c, const Matrix& x,
                                            const OracleWeights& w, PretrainLoss l0, const ClusterIndicator* q,
                                            const TrainConfig& cfg, const Matrix& h = {}) {
    const ForwardTrace t = forward_trace(p, x, true);
    CompositeGradient out;
    std::vector<Matrix> stack_grad(t.stack.size());
    Matrix recon_grad;
    if (l0 == PretrainLoss::re) {
        out.loss = loss_re(x, t.reconstruction());
        recon_grad = (t.reconstruction() - x) / static_cast<double>(std::max<Eigen::Index>(1, x.cols()));
    } else {
        out.loss = loss_dp(t.stack, h, cfg.dp_variant);
        stack_grad = grad_loss_dp_stack(t.stack, h, cfg.dp_variant);
    }
    out.c = Matrix::Zero(c.rows(), c.cols());
    if (w.lambda1 != 0.0) {
        out.loss += w.lambda1 * loss_se_joint(t.stack, c);
        const auto se = grad_se_stack(t.stack, c, SelfExpression::joint);
        for (size_t m = 0; m < se.size(); ++m) {
            if (se[m].size() == 0) continue;
            if (stack_grad[m].size() == 0) stack_grad[m] = w.lambda1 * se[m];
            else stack_grad[m] += w.lambda1 * se[m];
        }
        out.c += w.lambda1 * grad_se_c(t.stack, c, SelfExpression::joint);
    }
    if (w.lambda2 != 0.0 && q != nullptr) {
        out.loss += w.lambda2 * loss_q(c, *q);
        out.c += w.lambda2 * grad_q_c(c, *q);
    }
    out.params = backward(p, t, stack_grad, recon_grad);
    return out;
}

/// Simultaneous minimisation of the weighted composite loss. The only mode
/// that takes loss weights; the network is updated with Adam, C with a
/// gradient step of size 1 / (2 lambda1 lambda_max(G)).
inline FinetuneResult oracle_train(AutoencoderParams p, Matrix c, const Matrix& x, const OracleWeights& w,
                                   PretrainLoss l0, int num_clusters, const TrainConfig& cfg) {
    cfg.validate();
    detail::require(w.lambda1 >= 0.0 && w.lambda2 >= 0.0, "oracle_train: weights must be nonnegative");
    detail::require(c.rows() == x.cols() && c.cols() == x.cols(), "oracle_train: C must be N x N");
    zero_diagonal(c);
    const Matrix h = l0 == PretrainLoss::dp ? pairwise_l2(x) : Matrix();
    FinetuneResult r;
    StoppingState stop(cfg.delta, x.cols());
    Adam opt(cfg.learning_rate);
    Vector theta = pack(p);
    std::optional<ClusterIndicator> q;
    const double q_eta = detail::mean_offdiag_magnitude(c);
    for (int epoch = 0; epoch < cfg.max_finetune_epochs; ++epoch) {
        if (w.lambda2 > 0.0 && epoch % cfg.q_refresh_period == 0)
            q = spectral_cluster(affinity_from_c(c), num_clusters, cfg.seed);
        const CompositeGradient g = composite_gradient(p, c, x, w, l0, q ? &*q : nullptr, cfg, h);
        detail::check_finite(g.loss, "oracle", epoch);
        r.losses.push_back(g.loss);

        double step = 0.0;
        if (w.lambda1 > 0.0) {
            const double lmax = psd_spectral_radius(se_gram(forward_trace(p, x, false).stack, SelfExpression::joint));
            if (lmax > 0.0) step = 1.0 / (2.0 * w.lambda1 * lmax);
        } else if (w.lambda2 > 0.0) {
            step = q_eta / w.lambda2;
        }
        c -= step * g.c;
        zero_diagonal(c);

        opt.step(theta, pack(g.params));
        unpack(p, theta);

        r.epochs = epoch + 1;
        if (!c.allFinite() || !theta.allFinite()) throw TrainingError("oracle", epoch, "parameters are not finite");
        if (stopping_check(stop, affinity_from_c(c))) {
            r.stopped_by_rule = true;
            break;
        }
    }
    r.params = std::move(p);
    r.c = std::move(c);
    r.q = std::move(q);
    r.epsilon_history = std::move(stop.epsilon_history);
    return r;
}

}  // namespace dsc
