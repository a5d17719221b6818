#pragma once

// Fully-connected autoencoder that exposes every encoder layer's output, with
// hand-written backpropagation for the reconstruction and distance-preserving
// pre-training losses and a full-batch Adam loop.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsc/error.hpp"
#include "dsc/linalg.hpp"

namespace dsc {

enum class Activation { relu, tanh, linear };
enum class PretrainLoss { re, dp };
enum class DpVariant { stress, literal };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::linear: return "linear";
    }
    return "relu";
}
inline const char* to_string(PretrainLoss l) { return l == PretrainLoss::re ? "re" : "dp"; }
inline const char* to_string(DpVariant v) { return v == DpVariant::stress ? "stress" : "literal"; }

inline Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "linear") return Activation::linear;
    throw ContractError("unknown activation: " + std::string(s));
}
inline PretrainLoss parse_pretrain_loss(std::string_view s) {
    if (s == "re") return PretrainLoss::re;
    if (s == "dp") return PretrainLoss::dp;
    throw ContractError("unknown pre-training loss: " + std::string(s));
}
inline DpVariant parse_dp_variant(std::string_view s) {
    if (s == "stress") return DpVariant::stress;
    if (s == "literal") return DpVariant::literal;
    throw ContractError("unknown distance-preserving variant: " + std::string(s));
}

struct DenseLayer {
    Matrix weight;  // out x in
    Vector bias;    // out
};

/// Encoder layers map dims[m-1] -> dims[m]; decoder layer j mirrors encoder
/// layer M/2-j with the transposed shape. Hidden layers use `activation`,
/// the final decoder layer is linear.
struct AutoencoderParams {
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> decoder;
    Activation activation = Activation::relu;

    int depth() const { return static_cast<int>(encoder.size()); }

    std::vector<int> dims() const {
        std::vector<int> d;
        if (encoder.empty()) return d;
        d.push_back(static_cast<int>(encoder.front().weight.cols()));
        for (const auto& l : encoder) d.push_back(static_cast<int>(l.weight.rows()));
        return d;
    }
};

/// X^0 .. X^{M/2}; X^0 is the raw input.
using LayerStack = std::vector<Matrix>;

struct TrainConfig {
    double learning_rate = 1e-3;
    int pretrain_epochs = 100;
    int max_finetune_epochs = 300;
    int q_refresh_period = 10;
    double delta = 0.01;
    std::uint64_t seed = 0;
    std::optional<int> dp_pair_sample;  // pairs per epoch for the DP loss
    DpVariant dp_variant = DpVariant::stress;

    void validate() const {
        detail::require(learning_rate > 0.0, "TrainConfig: learning_rate must be positive");
        detail::require(delta > 0.0, "TrainConfig: delta must be positive");
        detail::require(pretrain_epochs >= 0 && max_finetune_epochs >= 0, "TrainConfig: epochs must be nonnegative");
        detail::require(q_refresh_period >= 1, "TrainConfig: q_refresh_period must be at least 1");
        detail::require(!dp_pair_sample || *dp_pair_sample >= 1, "TrainConfig: dp_pair_sample must be positive");
    }
};

/// Encoder widths decay geometrically from the input dimension to an
/// embedding of max(4*num_clusters, 32).
inline std::vector<int> default_architecture(int input_dim, int num_clusters, int encoder_layers = 3) {
    detail::require(input_dim >= 1 && encoder_layers >= 1, "default_architecture: invalid sizes");
    const int embed = std::max(4 * num_clusters, 32);
    std::vector<int> dims{input_dim};
    const double ratio = static_cast<double>(embed) / input_dim;
    for (int l = 1; l <= encoder_layers; ++l)
        dims.push_back(std::max(1, static_cast<int>(std::lround(input_dim * std::pow(ratio, double(l) / encoder_layers)))));
    return dims;
}

enum class WeightInit { fan_in, orthogonal };

inline const char* to_string(WeightInit w) { return w == WeightInit::fan_in ? "fan_in" : "orthogonal"; }

inline WeightInit parse_weight_init(std::string_view s) {
    if (s == "fan_in") return WeightInit::fan_in;
    if (s == "orthogonal") return WeightInit::orthogonal;
    throw ContractError("unknown weight init: " + std::string(s));
}

/// fan_in: uniform with He (relu) or LeCun (otherwise) scaling.
/// orthogonal: semi-orthogonal Q factor of a Gaussian matrix, gain sqrt(2)
/// for relu and 1 otherwise. Biases start at zero either way.
inline AutoencoderParams init_params(std::span<const int> dims, std::uint64_t seed,
                                     Activation act = Activation::relu, WeightInit init = WeightInit::fan_in) {
    detail::require(dims.size() >= 2, "init_params: need at least an input and one layer dimension");
    for (int d : dims) detail::require(d >= 1, "init_params: layer dimensions must be positive");
    std::mt19937_64 rng(seed);
    auto layer = [&](int in, int out) {
        DenseLayer l{Matrix(out, in), Vector::Zero(out)};
        if (init == WeightInit::fan_in) {
            const double limit = std::sqrt((act == Activation::relu ? 6.0 : 3.0) / in);
            std::uniform_real_distribution<double> u(-limit, limit);
            for (Eigen::Index j = 0; j < l.weight.cols(); ++j)
                for (Eigen::Index i = 0; i < l.weight.rows(); ++i) l.weight(i, j) = u(rng);
            return l;
        }
        const int tall = std::max(in, out), wide = std::min(in, out);
        std::normal_distribution<double> g(0.0, 1.0);
        Matrix a(tall, wide);
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = g(rng);
        Eigen::HouseholderQR<Matrix> qr(a);
        Matrix q = qr.householderQ() * Matrix::Identity(tall, wide);
        // Sign-fix against R's diagonal so the draw is Haar distributed.
        const Matrix r = qr.matrixQR().topRows(wide).template triangularView<Eigen::Upper>();
        for (int k = 0; k < wide; ++k)
            if (r(k, k) < 0.0) q.col(k) *= -1.0;
        const double gain = act == Activation::relu ? std::sqrt(2.0) : 1.0;
        l.weight = gain * (out >= in ? q : Matrix(q.transpose()));
        return l;
    };
    AutoencoderParams p;
    p.activation = act;
    for (size_t m = 1; m < dims.size(); ++m) p.encoder.push_back(layer(dims[m - 1], dims[m]));
    for (size_t m = dims.size() - 1; m >= 1; --m) p.decoder.push_back(layer(dims[m], dims[m - 1]));
    return p;
}

namespace detail {

inline Matrix activate(Matrix z, Activation a) {
    switch (a) {
        case Activation::relu: return z.cwiseMax(0.0);
        case Activation::tanh: return z.array().tanh().matrix();
        case Activation::linear: return z;
    }
    return z;
}

// Derivative expressed through the post-activation value.
inline Matrix activation_slope(const Matrix& out, Activation a) {
    switch (a) {
        case Activation::relu: return (out.array() > 0.0).cast<double>().matrix();
        case Activation::tanh: return (1.0 - out.array().square()).matrix();
        case Activation::linear: return Matrix::Ones(out.rows(), out.cols());
    }
    return Matrix::Ones(out.rows(), out.cols());
}

inline Matrix affine(const DenseLayer& l, const Matrix& in) {
    Matrix z = l.weight * in;
    z.colwise() += l.bias;
    return z;
}

}  // namespace detail

/// Every intermediate activation needed by the backward pass.
struct ForwardTrace {
    LayerStack stack;            // encoder outputs, stack[0] = input
    std::vector<Matrix> decoder; // decoder outputs, last one is the reconstruction
    const Matrix& reconstruction() const { return decoder.back(); }
};

inline ForwardTrace forward_trace(const AutoencoderParams& p, const Matrix& x, bool with_decoder = true) {
    detail::require(!p.encoder.empty(), "forward: network has no layers");
    detail::require(x.rows() == p.encoder.front().weight.cols(),
                    "forward: input has " + std::to_string(x.rows()) + " rows, network expects " +
                        std::to_string(p.encoder.front().weight.cols()));
    ForwardTrace t;
    t.stack.reserve(p.encoder.size() + 1);
    t.stack.push_back(x);
    for (const auto& l : p.encoder) t.stack.push_back(detail::activate(detail::affine(l, t.stack.back()), p.activation));
    if (!with_decoder) return t;
    const Matrix* in = &t.stack.back();
    for (size_t j = 0; j < p.decoder.size(); ++j) {
        const bool last = j + 1 == p.decoder.size();
        t.decoder.push_back(detail::activate(detail::affine(p.decoder[j], *in), last ? Activation::linear : p.activation));
        in = &t.decoder.back();
    }
    return t;
}

struct ForwardResult {
    LayerStack stack;
    Matrix reconstruction;
};

inline ForwardResult forward_collect(const AutoencoderParams& p, const Matrix& x) {
    ForwardTrace t = forward_trace(p, x);
    return {std::move(t.stack), std::move(t.decoder.back())};
}

/// Parameter-shaped gradient, zero-initialised.
inline AutoencoderParams zeros_like(const AutoencoderParams& p) {
    AutoencoderParams g = p;
    for (auto* side : {&g.encoder, &g.decoder})
        for (auto& l : *side) {
            l.weight.setZero();
            l.bias.setZero();
        }
    return g;
}

/// Backpropagates upstream gradients given with respect to encoder outputs
/// (stack_grad[m] for X^m, empty or zero-sized entries are skipped) and the
/// reconstruction (recon_grad, may be empty).
inline AutoencoderParams backward(const AutoencoderParams& p, const ForwardTrace& t,
                                  const std::vector<Matrix>& stack_grad, const Matrix& recon_grad) {
    AutoencoderParams g = zeros_like(p);
    const int depth = p.depth();
    Matrix upstream = Matrix::Zero(t.stack.back().rows(), t.stack.back().cols());

    if (recon_grad.size() > 0) {
        detail::require(!t.decoder.empty(), "backward: trace has no decoder outputs");
        Matrix dout = recon_grad;
        for (int j = static_cast<int>(p.decoder.size()) - 1; j >= 0; --j) {
            const bool last = j + 1 == static_cast<int>(p.decoder.size());
            Matrix dz = last ? dout : Matrix(dout.cwiseProduct(detail::activation_slope(t.decoder[j], p.activation)));
            const Matrix& in = j == 0 ? t.stack.back() : t.decoder[j - 1];
            g.decoder[j].weight = dz * in.transpose();
            g.decoder[j].bias = dz.rowwise().sum();
            dout = p.decoder[j].weight.transpose() * dz;
        }
        upstream += dout;
    }
    for (int m = depth; m >= 1; --m) {
        if (static_cast<int>(stack_grad.size()) > m && stack_grad[m].size() > 0) upstream += stack_grad[m];
        const Matrix dz = upstream.cwiseProduct(detail::activation_slope(t.stack[m], p.activation));
        g.encoder[m - 1].weight = dz * t.stack[m - 1].transpose();
        g.encoder[m - 1].bias = dz.rowwise().sum();
        if (m > 1) upstream = p.encoder[m - 1].weight.transpose() * dz;
    }
    return g;
}

/// (1/2N) ||X - X~||_F^2
inline double loss_re(const Matrix& x, const Matrix& reconstruction) {
    detail::require(x.rows() == reconstruction.rows() && x.cols() == reconstruction.cols(),
                    "loss_re: shape mismatch");
    if (x.cols() == 0) return 0.0;
    return (x - reconstruction).squaredNorm() / (2.0 * static_cast<double>(x.cols()));
}

/// Unordered index pairs (i < j) over which the distance-preserving loss is
/// evaluated; empty means all pairs.
struct PairSample {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    double weight = 1.0;  // total pairs / sampled pairs
    bool empty() const { return pairs.empty(); }
};

inline PairSample sample_pairs(Eigen::Index n, int count, std::mt19937_64& rng) {
    PairSample s;
    if (n < 2) return s;
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    s.pairs.reserve(static_cast<size_t>(count));
    while (static_cast<int>(s.pairs.size()) < count) {
        Eigen::Index i = pick(rng), j = pick(rng);
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        s.pairs.emplace_back(i, j);
    }
    s.weight = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1) / count;
    return s;
}

namespace detail {

inline void check_dp_inputs(const LayerStack& stack, const Matrix& h) {
    require(!stack.empty(), "loss_dp: empty layer stack");
    const Eigen::Index n = stack.front().cols();
    require(h.rows() == n && h.cols() == n, "loss_dp: weighting matrix must be N x N");
    for (const auto& l : stack) require(l.cols() == n, "loss_dp: layer column counts differ");
}

// Per-pair coefficient a_ij such that d(loss)/d x_i = 2 * sum_j a_ij (x_i - x_j).
inline double dp_pair_term(double d, double hij, DpVariant v, double& coeff) {
    if (v == DpVariant::literal) {
        // (i,j) and (j,i) both appear in the ordered sum
        coeff = d > 0.0 ? hij / d : 0.0;
        return 2.0 * hij * d;
    }
    coeff = d > 0.0 ? (d - hij) / d : 0.0;
    return (d - hij) * (d - hij);
}

}  // namespace detail

/// literal: sum_m sum_{i,j} H_ij ||x_i^m - x_j^m||   (ordered pairs)
/// stress:  sum_m sum_{i<j} (||x_i^m - x_j^m|| - H_ij)^2
/// Both include the raw layer m = 0.
inline double loss_dp(const LayerStack& stack, const Matrix& h, DpVariant variant,
                      const PairSample& sample = {}) {
    detail::check_dp_inputs(stack, h);
    double total = 0.0;
    double coeff = 0.0;
    for (const auto& xm : stack) {
        if (sample.empty()) {
            const Eigen::Index n = xm.cols();
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = j + 1; i < n; ++i)
                    total += detail::dp_pair_term((xm.col(i) - xm.col(j)).norm(), h(i, j), variant, coeff);
        } else {
            double part = 0.0;
            for (auto [i, j] : sample.pairs)
                part += detail::dp_pair_term((xm.col(i) - xm.col(j)).norm(), h(i, j), variant, coeff);
            total += sample.weight * part;
        }
    }
    return total;
}

/// Gradient of loss_dp with respect to each layer of the stack.
inline std::vector<Matrix> grad_loss_dp_stack(const LayerStack& stack, const Matrix& h, DpVariant variant,
                                              const PairSample& sample = {}) {
    detail::check_dp_inputs(stack, h);
    std::vector<Matrix> grads;
    grads.reserve(stack.size());
    for (const auto& xm : stack) {
        const Eigen::Index n = xm.cols();
        Matrix a = Matrix::Zero(n, n);
        double coeff = 0.0;
        auto visit = [&](Eigen::Index i, Eigen::Index j, double w) {
            detail::dp_pair_term((xm.col(i) - xm.col(j)).norm(), h(i, j), variant, coeff);
            a(i, j) += w * coeff;
            a(j, i) += w * coeff;
        };
        if (sample.empty()) {
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = j + 1; i < n; ++i) visit(i, j, 1.0);
        } else {
            for (auto [i, j] : sample.pairs) visit(i, j, sample.weight);
        }
        // d/dx_i = 2 sum_j a_ij (x_i - x_j)  =>  G = 2 X (diag(A 1) - A)
        const Vector deg = a.rowwise().sum();
        grads.push_back(2.0 * (xm * deg.asDiagonal() - xm * a));
    }
    return grads;
}

struct LossAndGrad {
    double loss = 0.0;
    AutoencoderParams grad;
};

/// Loss value and analytic gradient of the selected pre-training loss.
/// `h` is pairwise_l2(x), required for dp.
inline LossAndGrad grad_pretrain(const AutoencoderParams& p, const Matrix& x, PretrainLoss loss,
                                 const TrainConfig& cfg, const Matrix& h = {}, const PairSample& sample = {}) {
    const ForwardTrace t = forward_trace(p, x, loss == PretrainLoss::re);
    LossAndGrad out;
    if (loss == PretrainLoss::re) {
        out.loss = loss_re(x, t.reconstruction());
        const Matrix g = (t.reconstruction() - x) / static_cast<double>(std::max<Eigen::Index>(1, x.cols()));
        out.grad = backward(p, t, {}, g);
    } else {
        out.loss = loss_dp(t.stack, h, cfg.dp_variant, sample);
        out.grad = backward(p, t, grad_loss_dp_stack(t.stack, h, cfg.dp_variant, sample), Matrix());
    }
    return out;
}

enum class ParamGroup { encoder, decoder, all };

inline Eigen::Index parameter_count(const AutoencoderParams& p, ParamGroup g = ParamGroup::all) {
    Eigen::Index n = 0;
    if (g != ParamGroup::decoder)
        for (const auto& l : p.encoder) n += l.weight.size() + l.bias.size();
    if (g != ParamGroup::encoder)
        for (const auto& l : p.decoder) n += l.weight.size() + l.bias.size();
    return n;
}

/// Flattens the selected parameter group (weights column-major, then bias).
inline Vector pack(const AutoencoderParams& p, ParamGroup g = ParamGroup::all) {
    Vector v(parameter_count(p, g));
    Eigen::Index off = 0;
    auto put = [&](const std::vector<DenseLayer>& side) {
        for (const auto& l : side) {
            v.segment(off, l.weight.size()) = l.weight.reshaped();
            off += l.weight.size();
            v.segment(off, l.bias.size()) = l.bias;
            off += l.bias.size();
        }
    };
    if (g != ParamGroup::decoder) put(p.encoder);
    if (g != ParamGroup::encoder) put(p.decoder);
    return v;
}

inline void unpack(AutoencoderParams& p, const Vector& v, ParamGroup g = ParamGroup::all) {
    detail::require(v.size() == parameter_count(p, g), "unpack: size mismatch");
    Eigen::Index off = 0;
    auto get = [&](std::vector<DenseLayer>& side) {
        for (auto& l : side) {
            l.weight.reshaped() = v.segment(off, l.weight.size());
            off += l.weight.size();
            l.bias = v.segment(off, l.bias.size());
            off += l.bias.size();
        }
    };
    if (g != ParamGroup::decoder) get(p.encoder);
    if (g != ParamGroup::encoder) get(p.decoder);
}

/// Adam with bias correction.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(Vector& theta, const Vector& grad) {
        if (m_.size() != theta.size()) {
            m_ = Vector::Zero(theta.size());
            v_ = Vector::Zero(theta.size());
            t_ = 0;
        }
        ++t_;
        m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
        v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
    }

private:
    double lr_, beta1_, beta2_, eps_;
    Vector m_, v_;
    long t_ = 0;
};

struct PretrainResult {
    AutoencoderParams params;
    std::vector<double> losses;  // loss before each epoch, plus the final loss
};

/// Full-batch Adam on the reconstruction or distance-preserving loss.
inline PretrainResult pretrain(AutoencoderParams p, const Matrix& x, PretrainLoss loss, const TrainConfig& cfg) {
    cfg.validate();
    PretrainResult r;
    const Matrix h = loss == PretrainLoss::dp ? pairwise_l2(x) : Matrix();
    std::mt19937_64 pair_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    auto draw = [&]() {
        return cfg.dp_pair_sample && loss == PretrainLoss::dp ? sample_pairs(x.cols(), *cfg.dp_pair_sample, pair_rng)
                                                              : PairSample{};
    };
    Adam opt(cfg.learning_rate);
    Vector theta = pack(p);
    for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        const LossAndGrad lg = grad_pretrain(p, x, loss, cfg, h, draw());
        if (!std::isfinite(lg.loss)) throw TrainingError("pretrain", epoch, "loss is not finite");
        r.losses.push_back(lg.loss);
        opt.step(theta, pack(lg.grad));
        unpack(p, theta);
    }
    const LossAndGrad final_lg = grad_pretrain(p, x, loss, cfg, h, draw());
    if (!std::isfinite(final_lg.loss)) throw TrainingError("pretrain", cfg.pretrain_epochs, "loss is not finite");
    r.losses.push_back(final_lg.loss);
    r.params = std::move(p);
    return r;
}

}  // namespace dsc
