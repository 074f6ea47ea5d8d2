#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <random>

#include "idrift/nu_distribution.hpp"
#include "test_support.hpp"

using namespace idrift;
using idrift::testing::kind_of;
using idrift::testing::vec;
using idrift::testing::admissible_beta;
using idrift::testing::random_network;
using idrift::testing::random_vector;

namespace {

// Integral of f over {beta in R_+^2 : 4 beta_1 beta_2 > 1}, the support for an
// edge with unit weight and no diagonal. The inner variable is offset from the
// boundary so that the 1/sqrt(det H) singularity sits at an endpoint.
double integrate_edge_support(const std::function<double(double, double)>& f) {
  boost::math::quadrature::exp_sinh<double> outer;
  boost::math::quadrature::exp_sinh<double> inner;
  return outer.integrate(
      [&](double b1) {
        const double edge = 0.25 / b1;
        return inner.integrate([&](double u) { return f(b1, edge + u); }, 1e-10);
      },
      1e-9);
}

NuParams random_params(std::mt19937_64& gen, Index n, bool diagonal) {
  const auto net = random_network(gen, n, 0.4, diagonal);
  return NuParams::make(net, random_vector(gen, n, 0.5, 2.0), random_vector(gen, n, 0.0, 1.5));
}

}  // namespace

TEST(NuParams, RejectsInvalidParameters) {
  const auto net = ConductanceNetwork::from_weights(Matrix::Zero(1, 1));
  try {
    NuParams::make(net, Vector::Zero(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidParams);
    EXPECT_NE(std::string(e.what()).find("theta must be strictly positive"), std::string::npos);
  }
  EXPECT_EQ(kind_of([&] { NuParams::make(net, Vector::Ones(1), Vector::Constant(1, -1.0)); }),
            ErrorKind::InvalidParams);
}

TEST(LogDensity, OutsideSupportIsMinusInfinity) {
  const auto p = idrift::testing::edge();
  EXPECT_EQ(log_density(p, {vec({0.3, 0.3})}), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(log_density(p, {vec({-1.0, 5.0})}), -std::numeric_limits<double>::infinity());
}

TEST(LogDensity, SingleVertexIsHalfGamma) {
  const auto p = idrift::testing::single();
  for (double b : {0.01, 0.3, 1.0, 2.5, 17.0}) {
    const double gamma_half = -0.5 * std::log(std::numbers::pi) - 0.5 * std::log(b) - b;
    EXPECT_NEAR(log_density(p, {Vector::Constant(1, b)}), gamma_half, 1e-13);
  }
}

TEST(LogDensity, EdgeNormalizesUnderQuadrature) {
  const auto p = idrift::testing::edge();
  const double mass = integrate_edge_support(
      [&](double b1, double b2) { return std::exp(log_density(p, {vec({b1, b2})})); });
  EXPECT_NEAR(mass, 1.0, 1e-3);
}

TEST(LogDensity, SingleVertexLaplaceMatchesClosedForm) {
  boost::math::quadrature::exp_sinh<double> integrator;
  for (const auto& [theta, eta, w11] :
       std::vector<std::tuple<double, double, double>>{{1.0, 0.0, 0.0}, {1.3, 0.7, 0.4}, {0.6, 2.0, 1.5}}) {
    const auto p = idrift::testing::single(theta, eta, w11);
    for (double lambda : {0.0, 0.5, 3.0, -0.5 * theta * theta}) {
      const double numeric = integrator.integrate(
          [&](double u) {
            const double b = 0.5 * w11 + u;
            return std::exp(-lambda * b + log_density(p, {Vector::Constant(1, b)}));
          },
          1e-12);
      const double closed = laplace_transform(p, {Vector::Constant(1, lambda)});
      EXPECT_NEAR(numeric, closed, 1e-6) << "theta=" << theta << " lambda=" << lambda;
    }
  }
}

TEST(LaplaceTransform, ClosedFormValues) {
  std::mt19937_64 gen(21);
  const auto p = random_params(gen, 4, true);
  EXPECT_DOUBLE_EQ(laplace_transform(p, {Vector::Zero(4)}), 1.0);
  EXPECT_DOUBLE_EQ(laplace_transform(idrift::testing::single(), {vec({3.0})}), 0.5);
  EXPECT_NEAR(laplace_transform(idrift::testing::edge(), {vec({3.0, 0.0})}), std::exp(-1.0) / 2.0,
              1e-15);
}

TEST(LaplaceTransform, EdgeMatchesQuadrature) {
  const auto p = idrift::testing::edge();
  const Vector lambda = vec({0.7, 2.0});
  const double numeric = integrate_edge_support([&](double b1, double b2) {
    return std::exp(-lambda[0] * b1 - lambda[1] * b2 + log_density(p, {vec({b1, b2})}));
  });
  EXPECT_NEAR(numeric, laplace_transform(p, {lambda}), 1e-3);
}

TEST(LaplaceTransform, DomainViolation) {
  EXPECT_EQ(kind_of([] { laplace_transform(idrift::testing::single(), {vec({-1.0})}); }),
            ErrorKind::DomainViolation);
}

TEST(MarginalIg, KnownParameters) {
  const auto p = idrift::testing::edge(2.0, 1.0, 3.0);
  const IgParams ig = marginal_ig_params(p, 0);
  EXPECT_DOUBLE_EQ(ig.mu, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(ig.shape, 1.0);
  const IgParams one = marginal_ig_params(idrift::testing::single(2.0, 0.5), 0);
  EXPECT_DOUBLE_EQ(one.mu, 4.0);
  EXPECT_DOUBLE_EQ(one.shape, 4.0);
  EXPECT_EQ(kind_of([] { marginal_ig_params(idrift::testing::single(), 0); }),
            ErrorKind::ZeroDriftDenominator);
}

TEST(MarginalIg, AgreesWithLaplaceOfOneCoordinate) {
  // beta_i = (1/X + W_ii)/2 with X ~ IG(mu, shape), and E[1/X] = 1/mu + 1/shape,
  // so the marginal must reproduce -d/dlambda_i of the Laplace transform at 0.
  std::mt19937_64 gen(22);
  const auto p = random_params(gen, 4, true);
  for (Index i = 0; i < 4; ++i) {
    const IgParams ig = marginal_ig_params(p, i);
    const double h = 1e-6;
    Vector up = Vector::Zero(4);
    up[i] = h;
    const double derivative =
        (laplace_transform(p, {-up}) - laplace_transform(p, {up})) / (2.0 * h);
    const double mean_beta = 0.5 * (1.0 / ig.mu + 1.0 / ig.shape + p.network.weight(i, i));
    EXPECT_NEAR(derivative, mean_beta, 1e-6);
  }
}

TEST(RestrictedParams, Examples) {
  const auto p = idrift::testing::path3();
  const auto same = restricted_params(p, {0, 1, 2});
  EXPECT_EQ(same.network.weights(), p.network.weights());
  EXPECT_EQ(same.eta, p.eta);
  const auto r = restricted_params(p, {0, 1});
  EXPECT_EQ(r.eta, vec({0.0, 1.0}));
  EXPECT_EQ(kind_of([&] { restricted_params(p, {0, 2}); }), ErrorKind::DisconnectedRestriction);
  EXPECT_NO_THROW(restricted_params(p, {0, 2}, true));
  EXPECT_EQ(kind_of([&] { restricted_params(p, {}); }), ErrorKind::EmptySubset);
}

TEST(RestrictedParams, LaplaceOfRestrictionIsZeroPaddedLaplace) {
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = 2 + rep % 4;
    const auto p = random_params(gen, n, rep % 2 == 0);
    VertexSet u;
    for (Index i = 0; i < n; ++i) {
      if (gen() % 2 == 0) u.push_back(i);
    }
    if (u.empty()) u.push_back(0);
    const auto r = restricted_params(p, u, true);
    const Vector lambda_u = random_vector(gen, static_cast<Index>(u.size()), 0.0, 3.0);
    Vector padded = Vector::Zero(n);
    padded(u) = lambda_u;
    EXPECT_NEAR(laplace_transform(r, {lambda_u}), laplace_transform(p, {padded}), 1e-12);
  }
}

TEST(ConditionalParams, Examples) {
  const auto p = idrift::testing::path3();
  const auto c = conditional_params(p, {1}, vec({1.0}));
  Matrix expected = Matrix::Constant(2, 2, 0.5);
  EXPECT_TRUE(c.network.weights().isApprox(expected, 1e-15));
  EXPECT_TRUE(c.eta.isZero(0.0));
  EXPECT_EQ(kind_of([&] { conditional_params(p, {1}, vec({-0.1})); }),
            ErrorKind::ConditioningOutOfSupport);
  EXPECT_EQ(kind_of([&] { conditional_params(p, {0, 1, 2}, vec({1.0, 1.0, 1.0})); }),
            ErrorKind::EmptySubset);
}

TEST(ConditionalParams, ZeroCouplingLeavesComplementUnchanged) {
  Matrix w = Matrix::Zero(3, 3);
  w(1, 2) = w(2, 1) = 1.5;
  const auto p = NuParams::make(ConductanceNetwork::from_weights(w, false), vec({1.0, 2.0, 0.5}),
                                vec({0.3, 0.4, 0.0}));
  const auto c = conditional_params(p, {0}, vec({0.8}));
  EXPECT_EQ(c.network.weights(), block(w, {1, 2}, {1, 2}));
  EXPECT_EQ(c.theta, vec({2.0, 0.5}));
  EXPECT_EQ(c.eta, vec({0.4, 0.0}));
}

TEST(ConditionalParams, ChainRuleAtRandomSupportPoints) {
  std::mt19937_64 gen(24);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Index n = 2 + rep % 4;
    const auto p = random_params(gen, n, rep % 3 == 0);
    VertexSet u;
    for (Index i = 0; i < n; ++i) {
      if (gen() % 2 == 0) u.push_back(i);
    }
    if (u.empty()) u.push_back(0);
    if (static_cast<Index>(u.size()) == n) u.pop_back();
    const VertexSet rest = complement(u, n);
    const Vector beta = admissible_beta(gen, p.network);
    const double joint = log_density(p, {beta});
    const double marginal = log_density(restricted_params(p, u, true), {restrict(beta, u)});
    const double conditional =
        log_density(conditional_params(p, u, restrict(beta, u)), {restrict(beta, rest)});
    worst = std::max(worst, std::abs(joint - (marginal + conditional)));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(LogDensity, DiagonalActsAsTranslation) {
  std::mt19937_64 gen(25);
  for (int rep = 0; rep < 100; ++rep) {
    const auto p = random_params(gen, 4, true);
    Matrix w0 = p.network.weights();
    const Vector d = w0.diagonal();
    w0.diagonal().setZero();
    const auto p0 = NuParams::make(ConductanceNetwork::from_weights(w0), p.theta, p.eta);
    const Vector beta = admissible_beta(gen, p.network);
    EXPECT_NEAR(log_density(p, {beta}), log_density(p0, {beta - 0.5 * d}), 1e-10);
  }
}

TEST(LogDensity, ScalingCovariance) {
  std::mt19937_64 gen(26);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 1 + rep % 5;
    const auto p = random_params(gen, n, rep % 2 == 0);
    const Vector& th = p.theta;
    const Matrix w1 = th.asDiagonal() * p.network.weights() * th.asDiagonal();
    const auto p1 = NuParams::make(ConductanceNetwork::from_weights(w1), Vector::Ones(n),
                                   th.cwiseProduct(p.eta));
    const Vector beta = admissible_beta(gen, p.network);
    const Vector beta1 = th.cwiseAbs2().cwiseProduct(beta);
    const double jacobian = 2.0 * th.array().log().sum();
    EXPECT_NEAR(log_density(p, {beta}), log_density(p1, {beta1}) + jacobian, 1e-9);
  }
}

TEST(FunctionalIdentity, ZeroLambdaAndErrors) {
  std::mt19937_64 gen(27);
  const auto p = random_params(gen, 3, false);
  EXPECT_EQ(functional_identity_integrand(p, {Vector::Zero(3)}, {admissible_beta(gen, p.network)}),
            1.0);
  EXPECT_EQ(kind_of([&] { functional_identity_integrand(p, {Vector::Ones(3)}, {Vector::Zero(3)}); }),
            ErrorKind::OutOfSupport);
  EXPECT_EQ(kind_of([&] {
              functional_identity_integrand(p, {-Vector::Ones(3)}, {admissible_beta(gen, p.network)});
            }),
            ErrorKind::DomainViolation);
}

TEST(FunctionalIdentity, SingleVertexMeanUnderQuadrature) {
  boost::math::quadrature::exp_sinh<double> integrator;
  const auto p = idrift::testing::single();
  for (double l : {0.1, 1.0, 2.5}) {
    const double mean = integrator.integrate(
        [&](double b) {
          return functional_identity_integrand(p, {Vector::Constant(1, l)}, {Vector::Constant(1, b)}) *
                 std::exp(log_density(p, {Vector::Constant(1, b)}));
        },
        1e-12);
    EXPECT_NEAR(mean, std::exp(-l), 1e-8);
  }
}

TEST(FunctionalIdentity, EdgeMeanUnderQuadrature) {
  const Matrix w = (Matrix(2, 2) << 0, 1, 1, 0).finished();
  const auto p = NuParams::make(ConductanceNetwork::from_weights(w), Vector::Ones(2), vec({0.4, 0.9}));
  const Vector lambda = vec({0.5, 1.2});
  const double mean = integrate_edge_support([&](double b1, double b2) {
    const PotentialVector beta{vec({b1, b2})};
    if (!is_positive_definite(h_operator(p.network, beta))) return 0.0;
    return functional_identity_integrand(p, {lambda}, beta) * std::exp(log_density(p, beta));
  });
  EXPECT_NEAR(mean, std::exp(-lambda.sum()), 1e-3);
}

TEST(RadonNikodym, TrivialCases) {
  const auto one = idrift::testing::single();
  for (double t : {0.01, 1.0, 40.0}) {
    EXPECT_DOUBLE_EQ(radon_nikodym_weight(one, {Vector::Constant(1, t)}), 1.0);
  }
  EXPECT_EQ(radon_nikodym_weight(idrift::testing::edge(), {vec({2.0, 1.0})}), 0.0);
  EXPECT_EQ(kind_of([] { radon_nikodym_weight(idrift::testing::edge(), {vec({0.0, 1.0})}); }),
            ErrorKind::DomainViolation);
}

TEST(RadonNikodym, EdgeWeightIntegratesToOne) {
  // T_i has the one-vertex hitting density theta_i exp(-theta_i^2/(2t)) / sqrt(2 pi t^3).
  const auto hitting = [](double theta, double t) {
    if (!(t > 0.0)) return 0.0;
    return std::exp(std::log(theta) - theta * theta / (2.0 * t) -
                    0.5 * std::log(2.0 * std::numbers::pi) - 1.5 * std::log(t));
  };
  const Matrix w = (Matrix(2, 2) << 0, 1, 1, 0).finished();
  for (const Vector& eta : {vec({0.0, 0.0}), vec({0.5, 0.3})}) {
    const auto p = NuParams::make(ConductanceNetwork::from_weights(w), vec({1.0, 0.8}), eta);
    boost::math::quadrature::exp_sinh<double> outer;
    boost::math::quadrature::tanh_sinh<double> inner;
    const double mass = outer.integrate(
        [&](double t1) {
          return hitting(p.theta[0], t1) *
                 inner.integrate(
                     [&](double t2) {
                       if (!(t2 > 0.0) || t1 * t2 >= 1.0) return 0.0;
                       return hitting(p.theta[1], t2) * radon_nikodym_weight(p, {vec({t1, t2})});
                     },
                     0.0, 1.0 / t1, 1e-9);
        },
        1e-8);
    EXPECT_NEAR(mass, 1.0, 1e-4) << eta.transpose();
  }
}
