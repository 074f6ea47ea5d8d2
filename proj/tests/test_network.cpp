#include <gtest/gtest.h>

#include <random>

#include "idrift/network.hpp"
#include "test_support.hpp"

using namespace idrift;
using idrift::testing::kind_of;
using idrift::testing::admissible_beta;
using idrift::testing::admissible_times;
using idrift::testing::random_network;
using idrift::testing::random_vector;

namespace {

Matrix pair_weights(double w12) {
  Matrix w(2, 2);
  w << 0.0, w12, w12, 0.0;
  return w;
}

}  // namespace

TEST(BuildNetwork, AcceptsDegenerateAndSimpleGraphs) {
  const auto single = build_network(1, Matrix::Zero(1, 1));
  EXPECT_EQ(single.size(), 1);
  const auto edge = build_network(2, pair_weights(1.0));
  EXPECT_EQ(edge.neighbors(0), std::vector<Index>{1});
}

TEST(BuildNetwork, RejectsViolatedAssumptions) {
  EXPECT_EQ(kind_of([] { build_network(2, Matrix::Zero(2, 2)); }), ErrorKind::DisconnectedGraph);
  Matrix asym = pair_weights(1.0);
  asym(0, 1) = 2.0;
  EXPECT_EQ(kind_of([&] { build_network(2, asym); }), ErrorKind::AsymmetricWeights);
  EXPECT_EQ(kind_of([] { build_network(2, pair_weights(-1.0)); }), ErrorKind::NegativeWeight);
  Matrix nan = pair_weights(std::nan(""));
  EXPECT_EQ(kind_of([&] { build_network(2, nan); }), ErrorKind::NonFiniteWeight);
  EXPECT_EQ(kind_of([] { build_network(3, Matrix::Zero(2, 2)); }), ErrorKind::DimensionMismatch);
}

TEST(BuildNetwork, ConnectivityUsesOffDiagonalEntriesOnly) {
  Matrix w = Matrix::Zero(3, 3);
  w(0, 1) = w(1, 0) = 1.0;
  w(2, 2) = 5.0;  // a self-loop does not connect vertex 2
  EXPECT_EQ(kind_of([&] { build_network(3, w); }), ErrorKind::DisconnectedGraph);
}

TEST(HOperator, SmallCases) {
  const auto one = build_network(1, Matrix::Zero(1, 1));
  EXPECT_EQ(h_operator(one, {Vector::Ones(1)})(0, 0), 2.0);
  const auto edge = build_network(2, pair_weights(1.0));
  Matrix expected(2, 2);
  expected << 2, -1, -1, 2;
  EXPECT_EQ(h_operator(edge, {Vector::Ones(2)}), expected);
}

TEST(HOperator, MatchesEntrywiseDefinitionAndIsLinearInBeta) {
  std::mt19937_64 gen(7);
  const auto net = random_network(gen, 4, 0.5, true);
  const Vector beta = random_vector(gen, 4, -1.0, 3.0);
  const Matrix h = h_operator(net, {beta});
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) {
      const double want = (i == j ? 2.0 * beta[i] : 0.0) - net.weight(i, j);
      EXPECT_EQ(h(i, j), want);
    }
  }
  const Vector delta = random_vector(gen, 4, -1.0, 1.0);
  const Matrix diff = h_operator(net, {beta + delta}) - h;
  EXPECT_TRUE(diff.isApprox(Matrix(2.0 * delta.asDiagonal()), 1e-14));
  EXPECT_TRUE((diff - Matrix(diff.diagonal().asDiagonal())).isZero(0.0));
}

TEST(KOperator, IdentityAtZeroAndScalarCase) {
  std::mt19937_64 gen(8);
  const auto net = random_network(gen, 5);
  EXPECT_EQ(k_operator(net, TimeVector::zeros(5)), Matrix::Identity(5, 5));
  const auto one = ConductanceNetwork::from_weights(Matrix::Constant(1, 1, 0.75));
  EXPECT_DOUBLE_EQ(k_operator(one, {Vector::Constant(1, 0.4)})(0, 0), 1.0 - 0.4 * 0.75);
}

TEST(KOperator, EqualsTimesTimesHOfReciprocal) {
  std::mt19937_64 gen(9);
  const auto net = random_network(gen, 4);
  const Vector t = random_vector(gen, 4, 0.1, 2.0);
  const Matrix k = k_operator(net, {t});
  const Matrix via_h = t.asDiagonal() * h_operator(net, {(2.0 * t).cwiseInverse()});
  EXPECT_LT((k - via_h).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(KOperator, RejectsInfiniteEntries) {
  const auto edge = build_network(2, pair_weights(1.0));
  Vector t(2);
  t << 1.0, kNotHit;
  EXPECT_EQ(kind_of([&] { k_operator(edge, {t}); }), ErrorKind::InfiniteTimeEntry);
}

TEST(PositiveDefinite, KnownMatrices) {
  EXPECT_TRUE(is_positive_definite(Matrix::Identity(3, 3)));
  Matrix m(2, 2);
  m << 2, -1, -1, 2;  // eigenvalues 1, 3
  EXPECT_TRUE(is_positive_definite(m));
  m << 1, -2, -2, 1;  // determinant -3
  EXPECT_FALSE(is_positive_definite(m));
  m << 1, 1, 1, 1;  // singular
  EXPECT_FALSE(is_positive_definite(m));
}

TEST(PositiveDefinite, LogDeterminantMatchesDense) {
  std::mt19937_64 gen(10);
  const auto net = random_network(gen, 6);
  const Matrix h = h_operator(net, {admissible_beta(gen, net)});
  const auto f = factorize_symmetric(h);
  ASSERT_TRUE(f.positive_definite);
  EXPECT_NEAR(f.log_det, std::log(h.determinant()), 1e-12);
}

TEST(PositiveDefinite, RejectsAsymmetricInput) {
  Matrix m(2, 2);
  m << 1, 0.5, 0.2, 1;
  EXPECT_EQ(kind_of([&] { factorize_symmetric(m); }), ErrorKind::NotSymmetric);
}

TEST(HInverseExtended, ZeroAndScalar) {
  std::mt19937_64 gen(11);
  const auto net = random_network(gen, 4);
  EXPECT_TRUE(h_inverse_extended(net, TimeVector::zeros(4)).isZero(0.0));
  const auto one = build_network(1, Matrix::Zero(1, 1));
  EXPECT_DOUBLE_EQ(h_inverse_extended(one, {Vector::Constant(1, 0.3)})(0, 0), 0.3);
}

TEST(HInverseExtended, MatchesDenseInverseAndInvertsH) {
  std::mt19937_64 gen(12);
  for (int rep = 0; rep < 50; ++rep) {
    const auto net = random_network(gen, 3);
    const Vector t = admissible_times(gen, net.weights(), 0.7);
    const Matrix h = h_operator(net, {(2.0 * t).cwiseInverse()});
    const Matrix g = h_inverse_extended(net, {t});
    EXPECT_LT((g - h.inverse()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((g * h - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_TRUE(g.isApprox(g.transpose(), 0.0));
  }
}

TEST(HInverseExtended, ZeroClockGivesZeroRowAndColumn) {
  std::mt19937_64 gen(13);
  const auto net = random_network(gen, 4);
  Vector t = admissible_times(gen, net.weights(), 0.5);
  t[2] = 0.0;
  const Matrix g = h_inverse_extended(net, {t});
  EXPECT_TRUE(g.row(2).isZero(1e-15));
  EXPECT_TRUE(g.col(2).isZero(1e-15));
}

TEST(HInverseExtended, SingularK) {
  const auto edge = build_network(2, pair_weights(1.0));
  EXPECT_EQ(kind_of([&] { h_inverse_extended(edge, {Vector::Ones(2)}); }), ErrorKind::SingularK);
}

TEST(DeformParameters, ZeroShiftAndScalar) {
  std::mt19937_64 gen(14);
  const auto net = random_network(gen, 4);
  const Vector eta = random_vector(gen, 4, 0.0, 1.0);
  const auto d = deform_parameters(net, eta, TimeVector::zeros(4));
  EXPECT_EQ(d.w_tilde, net.weights());
  EXPECT_EQ(d.eta_tilde, eta);
  const auto one = build_network(1, Matrix::Zero(1, 1));
  const auto d1 = deform_parameters(one, Vector::Constant(1, 0.7), {Vector::Constant(1, 2.0)});
  EXPECT_EQ(d1.w_tilde(0, 0), 0.0);
  EXPECT_EQ(d1.eta_tilde[0], 0.7);
}

TEST(DeformParameters, BothEtaTildeFormulasAgreeAndWTildeIsSymmetric) {
  std::mt19937_64 gen(15);
  for (int rep = 0; rep < 100; ++rep) {
    const auto net = random_network(gen, 3);
    const Vector eta = random_vector(gen, 3, 0.0, 2.0);
    const Vector s = admissible_times(gen, net.weights(), 0.8);
    const auto d = deform_parameters(net, eta, {s});
    const Vector other = (h_inverse_extended(net, {s}) * eta).cwiseQuotient(s);
    EXPECT_LT((d.eta_tilde - other).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((d.w_tilde - d.w_tilde.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_TRUE((d.w_tilde.array() >= 0.0).all());
  }
}

TEST(DeformParameters, RequiresAdmissibleShift) {
  const auto edge = build_network(2, pair_weights(1.0));
  EXPECT_EQ(kind_of([&] { deform_parameters(edge, Vector::Zero(2), {Vector::Constant(2, 1.5)}); }),
            ErrorKind::SingularK);
}

TEST(AlgebraResiduals, ExactlyZeroForZeroSecondShift) {
  std::mt19937_64 gen(16);
  const auto net = random_network(gen, 4);
  const Vector t0 = admissible_times(gen, net.weights(), 0.6);
  const Vector eta = random_vector(gen, 4, 0.0, 1.0);
  const auto r = algebra_residuals(net, {t0}, TimeVector::zeros(4), eta);
  EXPECT_EQ(r.k_factorization, 0.0);
  EXPECT_EQ(r.determinant_ratio, 0.0);
  EXPECT_EQ(r.eta_bilinear, 0.0);
  EXPECT_LT(r.eta_tilde, 1e-12);
}

TEST(AlgebraResiduals, ZeroFirstShiftLeavesKUnchanged) {
  std::mt19937_64 gen(17);
  const auto net = random_network(gen, 4);
  const Vector t1 = admissible_times(gen, net.weights(), 0.6);
  const auto r = algebra_residuals(net, TimeVector::zeros(4), {t1}, Vector::Ones(4));
  EXPECT_EQ(r.k_factorization, 0.0);
}

TEST(AlgebraResiduals, RandomWellConditionedInstances) {
  std::mt19937_64 gen(18);
  std::uniform_int_distribution<Index> size(1, 6);
  std::uniform_real_distribution<double> frac(0.2, 0.8);
  std::uniform_real_distribution<double> split(0.1, 0.9);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Index n = size(gen);
    const auto net = random_network(gen, n, 0.4, rep % 3 == 0);
    const Vector total = admissible_times(gen, net.weights(), frac(gen));
    Vector t0 = total;
    for (Index i = 0; i < n; ++i) t0[i] *= split(gen);
    const Vector t1 = total - t0;
    const Vector eta = random_vector(gen, n, 0.0, 2.0);
    worst = std::max(worst, algebra_residuals(net, {t0}, {t1}, eta).max());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(AlgebraResiduals, RejectsInadmissibleTotalShift) {
  const auto edge = build_network(2, pair_weights(1.0));
  EXPECT_EQ(kind_of([&] {
              algebra_residuals(edge, {Vector::Constant(2, 0.6)}, {Vector::Constant(2, 0.6)},
                                Vector::Zero(2));
            }),
            ErrorKind::SingularK);
}

TEST(HInverse, EntriesArePositiveForAdmissibleBeta) {
  std::mt19937_64 gen(19);
  for (int rep = 0; rep < 200; ++rep) {
    const auto net = random_network(gen, 5, 0.2);
    const Matrix h = h_operator(net, {admissible_beta(gen, net)});
    ASSERT_TRUE(is_positive_definite(h));
    EXPECT_TRUE((h.inverse().array() > 0.0).all());
  }
}
