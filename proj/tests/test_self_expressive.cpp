#include <gtest/gtest.h>

#include <array>

#include "dsc/pipeline.hpp"
#include "dsc/self_expressive.hpp"
#include "support.hpp"

using namespace dsc;

namespace {

double se_oracle(const LayerStack& stack, const Matrix& c, size_t first) {
    double total = 0;
    for (size_t m = first; m < stack.size(); ++m) {
        const Matrix& x = stack[m];
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                double v = x(r, j);
                for (Eigen::Index k = 0; k < x.cols(); ++k) v -= x(r, k) * c(k, j);
                total += v * v;
            }
    }
    return total;
}

Matrix random_c(Eigen::Index n, std::uint64_t seed) {
    Matrix c = oracle::random_matrix(n, n, seed);
    c.diagonal().setZero();
    return c;
}

AutoencoderParams small_net(std::uint64_t seed, Activation act = Activation::tanh) {
    const std::array<int, 3> dims{3, 2, 2};
    AutoencoderParams p = init_params(dims, seed, act);
    std::uint64_t salt = seed * 100;
    for (auto* side : {&p.encoder, &p.decoder})
        for (auto& l : *side) l.bias = oracle::random_matrix(l.bias.size(), 1, ++salt, 0.5);
    return p;
}

// Two 2-point clusters {0,1} and {2,3} with strong in-cluster and weak cross links.
Matrix four_point_c() {
    Matrix c(4, 4);
    c << 0, 1.0, 0.2, -0.1,
         0.9, 0, 0.05, 0.1,
         -0.15, 0.1, 0, 1.1,
         0.1, 0.2, 0.8, 0;
    return c;
}

double cross_mass(const Matrix& c, const Labels& l) {
    double s = 0;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j)
            if (l[i] != l[j]) s += std::abs(c(i, j));
    return s;
}

}  // namespace

TEST(LossSe, HandExamples) {
    const LayerStack stack{oracle::random_matrix(3, 4, 1), oracle::random_matrix(2, 4, 2)};
    const Matrix zero = Matrix::Zero(4, 4);
    EXPECT_NEAR(loss_se_joint(stack, zero), stack[0].squaredNorm() + stack[1].squaredNorm(), 1e-12);
    EXPECT_NEAR(loss_se_last(stack, zero), stack[1].squaredNorm(), 1e-12);

    Matrix dup(2, 2);
    dup << 1, 1, 2, 2;
    Matrix c(2, 2);
    c << 0, 1, 1, 0;
    EXPECT_EQ(loss_se_joint({dup}, c), 0.0);

    const LayerStack single{stack[0]};
    const Matrix rc = random_c(4, 3);
    EXPECT_EQ(loss_se_joint(single, rc), loss_se_last(single, rc));
    EXPECT_THROW(loss_se_joint(stack, Matrix::Zero(3, 3)), ContractError);
}

TEST(LossSe, MatchesNaiveOracle) {
    for (int s = 0; s < 10; ++s) {
        const LayerStack stack{oracle::random_matrix(4, 6, 10 + s), oracle::random_matrix(3, 6, 20 + s),
                               oracle::random_matrix(2, 6, 30 + s)};
        const Matrix c = random_c(6, 40 + s);
        EXPECT_NEAR(loss_se_joint(stack, c), se_oracle(stack, c, 0), 1e-10);
        EXPECT_NEAR(loss_se_last(stack, c), se_oracle(stack, c, 2), 1e-10);
    }
}

TEST(LossSe, GradientWrtCMatchesFiniteDifferences) {
    const LayerStack stack{oracle::random_matrix(3, 5, 5), oracle::random_matrix(2, 5, 6)};
    const Matrix c = random_c(5, 7);
    for (auto mode : {SelfExpression::joint, SelfExpression::last}) {
        auto f = [&](const Vector& v) { return loss_se(stack, v.reshaped(5, 5), mode); };
        const Vector fd = oracle::fd_gradient(f, oracle::flat(c));
        EXPECT_LT(oracle::rel_err(oracle::flat(grad_se_c(stack, c, mode)), fd), 1e-4);
    }
}

TEST(LossSe, GradientWrtNetworkMatchesFiniteDifferences) {
    for (auto act : {Activation::tanh, Activation::relu}) {
        const AutoencoderParams p = small_net(8, act);
        const Matrix x = oracle::random_matrix(3, 5, 9);
        const Matrix c = random_c(5, 10) * 0.3;
        for (auto mode : {SelfExpression::joint, SelfExpression::last}) {
            auto f = [&](const Vector& theta) {
                AutoencoderParams q = p;
                unpack(q, theta, ParamGroup::encoder);
                return loss_se(forward_trace(q, x, false).stack, c, mode);
            };
            const ForwardTrace t = forward_trace(p, x, false);
            const AutoencoderParams g = backward(p, t, grad_se_stack(t.stack, c, mode), Matrix());
            const Vector fd = oracle::fd_gradient(f, pack(p, ParamGroup::encoder));
            EXPECT_LT(oracle::rel_err(pack(g, ParamGroup::encoder), fd), 1e-4);
        }
    }
}

TEST(LossQ, HandExamples) {
    Matrix c2(2, 2);
    c2 << 0, 1, 1, 0;
    EXPECT_DOUBLE_EQ(loss_q(c2, ClusterIndicator::from_labels({0, 1}, 2)), 2.0);
    EXPECT_EQ(loss_q(random_c(5, 1), ClusterIndicator::from_labels({0, 0, 0, 0, 0}, 2)), 0.0);

    Matrix block = Matrix::Zero(4, 4);
    block(0, 1) = 0.7;
    block(1, 0) = -0.2;
    block(2, 3) = 0.4;
    EXPECT_EQ(loss_q(block, ClusterIndicator::from_labels({0, 0, 1, 1}, 2)), 0.0);

    ClusterIndicator bad = ClusterIndicator::from_labels({0, 1}, 2);
    bad.q(0, 1) = 1;
    EXPECT_THROW(loss_q(c2, bad), ContractError);
}

TEST(LossQ, PairSumEqualsTraceForm) {
    std::mt19937_64 rng(2);
    for (int s = 0; s < 50; ++s) {
        const Eigen::Index n = 3 + s % 10;
        const Matrix c = random_c(n, 60 + s);
        const ClusterIndicator q = ClusterIndicator::from_labels(oracle::random_labels(n, 3, rng), 3);
        EXPECT_NEAR(loss_q(c, q), loss_q_trace(c, q), 1e-10);
    }
}

TEST(LossQ, SubgradientMatchesFiniteDifferencesAwayFromZero) {
    const Matrix c = random_c(6, 11);  // off-diagonal entries are nonzero almost surely
    const ClusterIndicator q = ClusterIndicator::from_labels({0, 1, 2, 0, 1, 2}, 3);
    auto f = [&](const Vector& v) { return loss_q(v.reshaped(6, 6), q); };
    Vector fd = oracle::fd_gradient(f, oracle::flat(c));
    Vector g = oracle::flat(grad_q_c(c, q));
    for (Eigen::Index i = 0; i < 6; ++i) fd(i * 6 + i) = g(i * 6 + i) = 0;  // diagonal sits at the kink
    EXPECT_LT(oracle::rel_err(g, fd), 1e-4);
}

TEST(Stage1, ZeroEpochsReturnsInputs) {
    const AutoencoderParams p = small_net(1);
    const Matrix x = oracle::random_matrix(3, 6, 1);
    const Matrix c = random_c(6, 2);
    TrainConfig cfg;
    cfg.max_finetune_epochs = 0;
    const FinetuneResult r = finetune_stage1(p, c, x, cfg);
    EXPECT_EQ(r.c, c);
    EXPECT_EQ(pack(r.params), pack(p));
    EXPECT_EQ(r.epochs, 0);
}

TEST(Stage1, LinearEncoderPreservesSubspaces) {
    SyntheticSpec s;
    s.num_subspaces = 2;
    s.subspace_dim = 3;
    s.ambient_dim = 30;
    s.points_per_subspace = 50;
    RunConfig cfg;
    cfg.dataset.synthetic = s;
    cfg.activation = Activation::linear;
    cfg.stages.q_loss = false;
    const RunReport r = run_pipeline(cfg);
    ASSERT_TRUE(r.ok()) << r.error;
    EXPECT_GE(*r.subspace_preserving_rate, 0.95);
    EXPECT_GT(r.epochs.stage1, 0);
}

TEST(Stage1, JointLossDescendsOverTenEpochWindows) {
    SyntheticSpec s;
    s.num_subspaces = 3;
    s.subspace_dim = 2;
    s.ambient_dim = 12;
    s.points_per_subspace = 15;
    s.noise_sigma = 0.05;
    const Dataset ds = generate_synthetic(s);
    const AutoencoderParams p = init_params(default_architecture(12, 3), 0, Activation::tanh, WeightInit::orthogonal);
    TrainConfig cfg;
    cfg.delta = 1e-12;  // keep the stopping rule from ending the run early
    cfg.max_finetune_epochs = 60;
    const FinetuneResult r = finetune_stage1(p, Matrix::Zero(45, 45), ds.x, cfg);
    ASSERT_GE(r.losses.size(), 20u);
    for (size_t t = 0; t + 10 < r.losses.size(); ++t) EXPECT_LE(r.losses[t + 10], r.losses[t]) << "epoch " << t;
    EXPECT_EQ(r.c.diagonal().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stage2, BlockDiagonalIsAFixedPoint) {
    Matrix c = Matrix::Zero(6, 6);
    c.block(0, 0, 3, 3).setConstant(0.5);
    c.block(3, 3, 3, 3).setConstant(-0.4);
    c.diagonal().setZero();
    TrainConfig cfg;
    cfg.max_finetune_epochs = 5;
    const FinetuneResult r = finetune_stage2(small_net(2), c, oracle::random_matrix(3, 6, 3), 2, cfg);
    EXPECT_EQ(r.c, c);
    for (double l : r.losses) EXPECT_EQ(l, 0.0);
}

TEST(Stage2, LossDescendsBetweenRefreshes) {
    SyntheticSpec s;
    s.num_subspaces = 3;
    s.noise_sigma = 0.1;
    s.points_per_subspace = 12;
    const Dataset ds = generate_synthetic(s);
    const BaselineRun b = run_baseline(BaselineKind::ssc, ds, AdmmConfig{.lambda = 20.0}, {}, 0);
    TrainConfig cfg;
    cfg.delta = 1e-12;
    cfg.max_finetune_epochs = 30;
    cfg.q_refresh_period = 10;
    const FinetuneResult r = finetune_stage2(small_net(3), *b.representation, oracle::random_matrix(3, 36, 4), 3, cfg);
    for (size_t t = 1; t < r.losses.size(); ++t)
        if (t % 10 != 0) EXPECT_LE(r.losses[t], r.losses[t - 1]) << "epoch " << t;
}

TEST(Stage2, FourPointCrossMassShrinks) {
    const Matrix c = four_point_c();
    TrainConfig cfg;
    cfg.max_finetune_epochs = 1;
    const FinetuneResult r = finetune_stage2(small_net(4), c, oracle::random_matrix(3, 4, 5), 2, cfg);
    const Labels truth{0, 0, 1, 1};
    EXPECT_LT(cross_mass(r.c, truth), cross_mass(c, truth));
    // In-cluster entries are untouched by the Q step.
    EXPECT_EQ(r.c(0, 1), c(0, 1));
    EXPECT_EQ(r.c(2, 3), c(2, 3));
}

TEST(Oracle, ZeroWeightsReduceToPretraining) {
    const AutoencoderParams p = small_net(5);
    const Matrix x = oracle::random_matrix(3, 6, 6);
    TrainConfig cfg;
    cfg.max_finetune_epochs = 8;
    const FinetuneResult r = oracle_train(p, Matrix::Zero(6, 6), x, OracleWeights{}, PretrainLoss::re, 2, cfg);
    EXPECT_EQ(r.c, Matrix::Zero(6, 6));
    TrainConfig pre = cfg;
    pre.pretrain_epochs = r.epochs;
    const PretrainResult ref = pretrain(p, x, PretrainLoss::re, pre);
    EXPECT_LT((pack(r.params) - pack(ref.params)).norm(), 1e-12);
}

TEST(Oracle, CompositeGradientIsSumOfParts) {
    const AutoencoderParams p = small_net(6);
    const Matrix x = oracle::random_matrix(3, 6, 7);
    const Matrix c = random_c(6, 8) * 0.2;
    const ClusterIndicator q = ClusterIndicator::from_labels({0, 0, 1, 1, 2, 2}, 3);
    const OracleWeights w{0.3, 0.7};
    TrainConfig cfg;
    const CompositeGradient g = composite_gradient(p, c, x, w, PretrainLoss::re, &q, cfg);

    const LossAndGrad re = grad_pretrain(p, x, PretrainLoss::re, cfg);
    const ForwardTrace t = forward_trace(p, x, false);
    const AutoencoderParams se = backward(p, t, grad_se_stack(t.stack, c, SelfExpression::joint), Matrix());
    const Vector want = pack(re.grad) + w.lambda1 * pack(se);
    EXPECT_LT((pack(g.params) - want).norm(), 1e-10 * std::max(1.0, want.norm()));
    const Matrix want_c = w.lambda1 * grad_se_c(t.stack, c, SelfExpression::joint) + w.lambda2 * grad_q_c(c, q);
    EXPECT_LT((g.c - want_c).norm(), 1e-10);
    EXPECT_NEAR(g.loss, re.loss + w.lambda1 * loss_se_joint(t.stack, c) + w.lambda2 * loss_q(c, q), 1e-10);
}

TEST(Ipd, HandExamples) {
    Matrix c = Matrix::Zero(5, 5);
    c.col(4).head(4) << 0.5, -0.9, 0.1, 0.3;
    const Matrix out = ipd_postprocess(c, 2);
    Vector want(5);
    want << 0.5, -0.9, 0, 0, 0;
    EXPECT_EQ(out.col(4), want);

    Matrix sparse = Matrix::Zero(4, 4);
    sparse(1, 0) = 0.2;
    sparse(3, 2) = -0.7;
    EXPECT_EQ(ipd_postprocess(sparse, 2), sparse);
    EXPECT_THROW(ipd_postprocess(sparse, 0), ContractError);
    EXPECT_THROW(ipd_postprocess(sparse, 4), ContractError);
}

TEST(Ipd, PropertiesOnRandomMatrices) {
    for (int s = 0; s < 100; ++s) {
        const Eigen::Index n = 3 + s % 12;
        const int d = 1 + s % static_cast<int>(n - 1);
        const Matrix c = random_c(n, 500 + s);
        const Matrix once = ipd_postprocess(c, d);
        EXPECT_EQ(ipd_postprocess(once, d), once);
        EXPECT_EQ(once.diagonal().cwiseAbs().maxCoeff(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            EXPECT_LE((once.col(j).array() != 0.0).count(), d);
            double kept_min = std::numeric_limits<double>::infinity(), dropped_max = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (once(i, j) != 0.0) {
                    EXPECT_EQ(once(i, j), c(i, j));
                    kept_min = std::min(kept_min, std::abs(c(i, j)));
                } else if (i != j) {
                    dropped_max = std::max(dropped_max, std::abs(c(i, j)));
                }
            }
            EXPECT_GE(kept_min, dropped_max);
        }
    }
}

TEST(Stopping, HandEvaluation) {
    EXPECT_TRUE(stopping_rule_met({5.0, 4.9}, 0.01, 100));
    EXPECT_FALSE(stopping_rule_met({5.0}, 0.01, 100));
    EXPECT_FALSE(stopping_rule_met({5.0, 2.0}, 0.01, 100));
}

TEST(Stopping, FirstCallNeverStopsAndConstantStreamStopsByThird) {
    const Affinity w = affinity_from_c(random_c(5, 1));
    StoppingState s(0.01, 5);
    EXPECT_FALSE(stopping_check(s, w));
    EXPECT_TRUE(s.epsilon_history.empty());
    bool stopped = stopping_check(s, w);
    stopped = stopped || stopping_check(s, w);
    EXPECT_TRUE(stopped);
    for (double e : s.epsilon_history) EXPECT_EQ(e, 0.0);
}

TEST(Stopping, OscillationNeverStops) {
    const Eigen::Index n = 4;
    const double delta = 0.01;
    StoppingState s(delta, n);
    // eps alternates between 0 and a jump larger than delta * N.
    const Matrix a = Matrix::Zero(n, n);
    Matrix b = Matrix::Zero(n, n);
    b(0, 1) = b(1, 0) = 1.0;
    const std::array<Matrix, 4> stream{a, a, b, b};
    for (int t = 0; t < 300; ++t) EXPECT_FALSE(stopping_check(s, Affinity{stream[t % 4]})) << t;
}

TEST(SubspacePreservingRate, ExamplesAndOracle) {
    const Labels l{0, 0, 1, 1};
    Matrix block = Matrix::Zero(4, 4);
    block(0, 1) = 0.3;
    block(3, 2) = -2;
    EXPECT_EQ(subspace_preserving_rate(block, l), 1.0);
    Matrix cross = Matrix::Zero(4, 4);
    cross(0, 2) = 1;
    cross(3, 1) = -0.5;
    EXPECT_EQ(subspace_preserving_rate(cross, l), 0.0);
    EXPECT_EQ(subspace_preserving_rate(Matrix::Zero(4, 4), l), 0.0);

    std::mt19937_64 rng(9);
    for (int s = 0; s < 20; ++s) {
        const Matrix c = random_c(6, 900 + s);
        const Labels lab = oracle::random_labels(6, 2, rng);
        double same = 0, total = 0;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) {
                total += std::abs(c(i, j));
                if (lab[i] == lab[j]) same += std::abs(c(i, j));
            }
        EXPECT_NEAR(subspace_preserving_rate(c, lab), same / total, 1e-12);
    }
}
