#include <gtest/gtest.h>

#include "dsc/metrics.hpp"
#include "dsc/spectral.hpp"
#include "support.hpp"

using namespace dsc;

namespace {

Matrix block_graph(const std::vector<int>& sizes, std::uint64_t seed) {
    int n = 0;
    for (int s : sizes) n += s;
    Matrix w = Matrix::Zero(n, n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.2, 1.0);
    int off = 0;
    for (int s : sizes) {
        for (int i = 0; i < s; ++i)
            for (int j = i + 1; j < s; ++j) w(off + i, off + j) = w(off + j, off + i) = u(rng);
        off += s;
    }
    return w;
}

}  // namespace

TEST(Affinity, HandExamples) {
    Matrix c(2, 2);
    c << 0, 2, -1, 0;
    const Affinity a = affinity_from_c(c);
    EXPECT_EQ(a.w(0, 1), 1.5);
    EXPECT_EQ(a.w(1, 0), 1.5);
    EXPECT_EQ(a.w.diagonal().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(affinity_from_c(Matrix::Zero(3, 3)).w, Matrix::Zero(3, 3));
}

TEST(Affinity, ExactlySymmetricAndNonnegative) {
    for (int s = 0; s < 20; ++s) {
        const Matrix w = affinity_from_c(oracle::random_matrix(7, 7, 50 + s)).w;
        EXPECT_EQ(w, w.transpose());
        EXPECT_GE(w.minCoeff(), 0.0);
    }
}

TEST(Laplacian, HandExamples) {
    Affinity a{Matrix(2, 2)};
    a.w << 0, 1, 1, 0;
    Matrix want(2, 2);
    want << 1, -1, -1, 1;
    EXPECT_LT((normalized_laplacian(a) - want).norm(), 1e-15);
    Matrix ls(2, 2);
    ls << 1, 1, 1, 1;
    EXPECT_LT((shifted_laplacian(a) - ls).norm(), 1e-15);
    const EigenPairs e = sym_eig(shifted_laplacian(a));
    EXPECT_NEAR(e.values(0), 2.0, 1e-12);
    EXPECT_NEAR(e.values(1), 0.0, 1e-12);

    EXPECT_EQ(normalized_laplacian(Affinity{Matrix::Zero(3, 3)}), Matrix::Identity(3, 3));
}

TEST(Laplacian, TwoCliquesGiveDoubleEigenvalueTwo) {
    const Affinity a{block_graph({2, 2}, 1)};
    const Vector v = sym_eig(shifted_laplacian(a)).values;
    EXPECT_NEAR(v(0), 2.0, 1e-12);
    EXPECT_NEAR(v(1), 2.0, 1e-12);
    EXPECT_LT(v(2), 2.0 - 1e-6);
}

TEST(Laplacian, SpectraOnRandomGraphs) {
    for (int s = 0; s < 100; ++s) {
        const Affinity a{oracle::random_affinity(2 + s % 49, 300 + s)};
        const Vector l = sym_eig(normalized_laplacian(a)).values;
        const Vector ls = sym_eig(shifted_laplacian(a)).values;
        EXPECT_GE(l.minCoeff(), -1e-10);
        EXPECT_LE(l.maxCoeff(), 2.0 + 1e-10);
        // l is sorted descending, so 2 - l is ascending; ls is descending.
        for (Eigen::Index i = 0; i < l.size(); ++i) EXPECT_NEAR(ls(i), 2.0 - l(l.size() - 1 - i), 1e-8);
    }
}

TEST(SpectralCluster, RecoversComponents) {
    const std::vector<int> sizes{6, 9, 5, 7};
    const Affinity a{block_graph(sizes, 2)};
    Labels truth;
    for (size_t c = 0; c < sizes.size(); ++c) truth.insert(truth.end(), sizes[c], static_cast<int>(c));
    const ClusterIndicator ci = spectral_cluster(a, 4, 0);
    EXPECT_EQ(acc(truth, ci.labels), 1.0);
    EXPECT_EQ(ClusterIndicator::labels_of(ci.q), ci.labels);
}

TEST(SpectralCluster, PermutationEquivariantAndDeterministic) {
    const Matrix noise = oracle::random_affinity(24, 9, 0.3) * 0.02;
    const Matrix w = block_graph({8, 8, 8}, 3) + noise;
    std::vector<int> perm(24);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(4);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix wp(24, 24);
    for (int i = 0; i < 24; ++i)
        for (int j = 0; j < 24; ++j) wp(i, j) = w(perm[i], perm[j]);
    const Labels base = spectral_cluster(Affinity{w}, 3, 7).labels;
    const Labels moved = spectral_cluster(Affinity{wp}, 3, 7).labels;
    Labels pulled(24);
    for (int i = 0; i < 24; ++i) pulled[perm[i]] = moved[i];
    EXPECT_EQ(acc(base, pulled), 1.0);
    EXPECT_EQ(base, spectral_cluster(Affinity{w}, 3, 7).labels);
}

TEST(SpectralCluster, RejectsBadK) {
    const Affinity a{block_graph({3, 3}, 5)};
    EXPECT_THROW(spectral_cluster(a, 1, 0), ContractError);
    EXPECT_THROW(spectral_cluster(a, 7, 0), ContractError);
}

TEST(ClusterIndicator, Validation) {
    const ClusterIndicator ci = ClusterIndicator::from_labels({0, 2, 1}, 3);
    EXPECT_EQ(ci.q.rowwise().sum(), Vector::Ones(3));
    EXPECT_EQ(ClusterIndicator::labels_of(ci.q), (Labels{0, 2, 1}));
    Matrix two = ci.q;
    two(0, 1) = 1;
    EXPECT_THROW(ClusterIndicator::labels_of(two), ContractError);
    Matrix none = ci.q;
    none(0, 0) = 0;
    EXPECT_THROW(ClusterIndicator::labels_of(none), ContractError);
    Matrix frac = ci.q;
    frac(0, 0) = 0.5;
    EXPECT_THROW(ClusterIndicator::labels_of(frac), ContractError);
    EXPECT_THROW(ClusterIndicator::from_labels({0, 3}, 3), ContractError);
}
