#include <gtest/gtest.h>

#include "dsc/metrics.hpp"
#include "support.hpp"

using namespace dsc;

TEST(Acc, HandExamples) {
    EXPECT_EQ(acc({0, 0, 1, 1}, {1, 1, 0, 0}), 1.0);
    EXPECT_EQ(acc({0, 1, 2}, {0, 1, 2}), 1.0);
    EXPECT_EQ(acc({0, 0, 1, 1}, {0, 1, 0, 1}), 0.5);
    EXPECT_EQ(oracle::brute_force_acc({0, 0, 1, 1}, {0, 1, 0, 1}), 0.5);
    EXPECT_THROW(acc({0, 1}, {0}), ContractError);
}

TEST(Acc, MatchesBruteForce) {
    std::mt19937_64 rng(3);
    for (int s = 0; s < 200; ++s) {
        const int k = 1 + s % 6;
        const size_t n = 6 + s % 15;
        const Labels t = oracle::random_labels(n, k, rng);
        const Labels p = oracle::random_labels(n, k, rng);
        EXPECT_NEAR(acc(t, p), oracle::brute_force_acc(t, p), 1e-12);
    }
}

TEST(Nmi, HandExamples) {
    EXPECT_NEAR(nmi({0, 0, 1, 1}, {1, 1, 0, 0}), 1.0, 1e-12);
    EXPECT_EQ(nmi({0, 0, 1, 1}, {0, 0, 0, 0}), 0.0);
    const Labels t{0, 0, 0, 0, 1, 1, 1, 1};
    const Labels p{0, 0, 0, 1, 1, 1, 1, 0};
    EXPECT_NEAR(nmi(t, p), oracle::naive_nmi(t, p), 1e-12);
}

TEST(F1, HandExamples) {
    EXPECT_NEAR(f1_pairwise({0, 0, 1, 1}, {5, 5, 3, 3}), 1.0, 1e-12);
    EXPECT_EQ(f1_pairwise({0, 0, 1, 1}, {0, 1, 2, 3}), 0.0);
}

TEST(NmiAndF1, MatchNaiveOracles) {
    std::mt19937_64 rng(4);
    for (int s = 0; s < 200; ++s) {
        const int k = 1 + s % 6;
        const size_t n = 6 + s % 20;
        const Labels t = oracle::random_labels(n, k, rng);
        const Labels p = oracle::random_labels(n, 1 + (s / 6) % 6, rng);
        EXPECT_NEAR(nmi(t, p), std::clamp(oracle::naive_nmi(t, p), 0.0, 1.0), 1e-12);
        EXPECT_NEAR(f1_pairwise(t, p), oracle::naive_f1(t, p), 1e-12);
    }
}

TEST(Metrics, InvariantToRelabelling) {
    std::mt19937_64 rng(5);
    for (int s = 0; s < 50; ++s) {
        const Labels t = oracle::random_labels(20, 4, rng);
        const Labels p = oracle::random_labels(20, 4, rng);
        std::vector<int> perm{0, 1, 2, 3};
        std::shuffle(perm.begin(), perm.end(), rng);
        Labels pp = p, tp = t;
        for (auto& v : pp) v = perm[v] + 10;
        for (auto& v : tp) v = perm[3 - v];
        const MetricsReport a = evaluate(t, p);
        for (const auto& b : {evaluate(t, pp), evaluate(tp, p), evaluate(tp, pp)}) {
            EXPECT_NEAR(a.acc, b.acc, 1e-12);
            EXPECT_NEAR(a.nmi, b.nmi, 1e-12);
            EXPECT_NEAR(a.f1, b.f1, 1e-12);
        }
        EXPECT_GE(a.acc, 0.0);
        EXPECT_LE(a.acc, 1.0);
        EXPECT_LE(a.nmi, 1.0);
        EXPECT_LE(a.f1, 1.0);
    }
}

TEST(Acc, ConstantPredictionOnBalancedClasses) {
    Labels t;
    for (int c = 0; c < 5; ++c)
        for (int i = 0; i < 4; ++i) t.push_back(c);
    EXPECT_GE(acc(t, Labels(t.size(), 0)), 1.0 / 5 - 1e-12);
}
