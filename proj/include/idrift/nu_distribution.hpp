#pragma once

// The law nu_V^{W,theta,eta} on {beta : H_beta > 0}:
//
//   nu(dbeta) = 1{H_beta > 0} (2/pi)^{|V|/2}
//               exp(-<theta, H theta>/2 - <eta, H^{-1} eta>/2 + <eta, theta>)
//               prod(theta_i) / sqrt(det H) dbeta
//
// together with its Laplace transform, the parameter maps for marginals and
// conditionals, and the two closed-form check quantities (the functional
// identity integrand and the Radon-Nikodym weight against independent
// one-vertex hitting times).

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "idrift/network.hpp"

namespace idrift {

/// Parameters (W, theta, eta) with theta > 0 and eta >= 0.
struct NuParams {
  ConductanceNetwork network;
  Vector theta;
  Vector eta;

  Index size() const { return network.size(); }

  static NuParams make(ConductanceNetwork network, Vector theta, Vector eta) {
    const Index n = network.size();
    detail::require_size(theta.size(), n, "theta");
    detail::require_size(eta.size(), n, "eta");
    if (!theta.allFinite() || (theta.array() <= 0.0).any()) {
      fail(ErrorKind::InvalidParams, "theta must be strictly positive");
    }
    if (!eta.allFinite() || (eta.array() < 0.0).any()) {
      fail(ErrorKind::InvalidParams, "eta must be nonnegative");
    }
    return NuParams{std::move(network), std::move(theta), std::move(eta)};
  }

  static NuParams make(ConductanceNetwork network, Vector theta) {
    const Index n = network.size();
    return make(std::move(network), std::move(theta), Vector::Zero(n));
  }
};

/// A Laplace argument lambda; valid when lambda_i + theta_i^2 > 0.
struct LaplaceQuery {
  Vector lambda;
};

/// Mean and shape of an inverse Gaussian law.
struct IgParams {
  double mu = 0.0;
  double shape = 0.0;
};

/// log nu(beta); -inf outside {H_beta > 0}.
inline double log_density(const NuParams& params, const PotentialVector& beta) {
  const Index n = params.size();
  detail::require_size(beta.size(), n, "beta");
  if (!beta.beta.allFinite()) return -std::numeric_limits<double>::infinity();
  const Matrix h = h_operator(params.network, beta);
  const SymmetricFactorization f = factorize_symmetric(h);
  if (!f.positive_definite) return -std::numeric_limits<double>::infinity();
  const Vector& theta = params.theta;
  const Vector& eta = params.eta;
  const double quad_theta = theta.dot(h * theta);
  const double quad_eta = eta.isZero(0.0) ? 0.0 : eta.dot(f.solve(eta));
  return 0.5 * static_cast<double>(n) * std::log(2.0 / std::numbers::pi) - 0.5 * quad_theta -
         0.5 * quad_eta + eta.dot(theta) + theta.array().log().sum() - 0.5 * f.log_det;
}

inline double laplace_transform(const NuParams& params, const LaplaceQuery& q) {
  const Index n = params.size();
  detail::require_size(q.lambda.size(), n, "lambda");
  const Vector& theta = params.theta;
  const Vector shifted = theta.cwiseAbs2() + q.lambda;
  if ((shifted.array() <= 0.0).any() || !shifted.allFinite()) {
    fail(ErrorKind::DomainViolation, "the Laplace transform needs lambda_i + theta_i^2 > 0");
  }
  const Vector root = shifted.cwiseSqrt();
  const Matrix& w = params.network.weights();
  const double exponent = -0.5 * root.dot(w * root) + 0.5 * theta.dot(w * theta) +
                          params.eta.dot(theta - root);
  return std::exp(exponent + (theta.array().log() - root.array().log()).sum());
}

/// 1/(2 beta_i - W_ii) ~ IG(theta_i / (eta_i + sum_{j != i} W_ij theta_j), theta_i^2).
inline IgParams marginal_ig_params(const NuParams& params, Index i) {
  if (i < 0 || i >= params.size()) fail(ErrorKind::DimensionMismatch, "vertex out of range");
  const Matrix& w = params.network.weights();
  double denom = params.eta[i];
  for (Index j = 0; j < params.size(); ++j) {
    if (j != i) denom += w(i, j) * params.theta[j];
  }
  if (!(denom > 0.0)) {
    fail(ErrorKind::ZeroDriftDenominator,
         "eta_i + sum_j W_ij theta_j = 0: the marginal is the inverse-Gamma law, not IG");
  }
  const double th = params.theta[i];
  return {th / denom, th * th};
}

namespace detail {

inline VertexSet normalized_subset(VertexSet u, Index n) {
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  for (Index i : u) {
    if (i < 0 || i >= n) fail(ErrorKind::DimensionMismatch, "vertex subset out of range");
  }
  return u;
}

}  // namespace detail

/// Law of beta_U: nu_U^{W_UU, theta_U, eta_U + W_{U,U^c} theta_{U^c}}.
inline NuParams restricted_params(const NuParams& params, VertexSet u,
                                  bool allow_disconnected = false) {
  const Index n = params.size();
  u = detail::normalized_subset(std::move(u), n);
  if (u.empty()) fail(ErrorKind::EmptySubset, "cannot restrict to the empty vertex set");
  const VertexSet rest = complement(u, n);
  const Matrix& w = params.network.weights();
  Matrix w_uu = block(w, u, u);
  if (!allow_disconnected && !is_connected(w_uu)) {
    fail(ErrorKind::DisconnectedRestriction, "the subnetwork induced by U is disconnected");
  }
  Vector eta_hat = restrict(params.eta, u);
  if (!rest.empty()) eta_hat += block(w, u, rest) * restrict(params.theta, rest);
  return NuParams::make(ConductanceNetwork::from_weights(std::move(w_uu), !allow_disconnected),
                        restrict(params.theta, u), std::move(eta_hat));
}

/// Law of beta_{U^c} given beta_U = beta_u (Schur complement through (H_beta)_{UU}).
inline NuParams conditional_params(const NuParams& params, VertexSet u, const Vector& beta_u) {
  const Index n = params.size();
  u = detail::normalized_subset(std::move(u), n);
  detail::require_size(beta_u.size(), static_cast<Index>(u.size()), "beta_u");
  const VertexSet rest = complement(u, n);
  if (rest.empty()) fail(ErrorKind::EmptySubset, "conditioning on every vertex leaves nothing");
  if (u.empty()) return params;
  const Matrix& w = params.network.weights();
  const Matrix h_uu = h_operator(block(w, u, u), beta_u);
  const SymmetricFactorization f = factorize_symmetric(h_uu);
  if (!f.positive_definite) {
    fail(ErrorKind::ConditioningOutOfSupport, "(H_beta)_{U,U} is not positive definite");
  }
  const Matrix w_cu = block(w, rest, u);
  Matrix w_check = block(w, rest, rest) + w_cu * f.solve(Matrix(w_cu.transpose()));
  w_check = 0.5 * (w_check + w_check.transpose());
  Vector eta_check = restrict(params.eta, rest) + w_cu * f.solve(restrict(params.eta, u));
  return NuParams::make(ConductanceNetwork::from_weights(std::move(w_check)),
                        restrict(params.theta, rest), std::move(eta_check));
}

/// exp(-<eta, H^{-1} lambda> - <lambda, H^{-1} lambda>/2); its nu-mean is exp(-<lambda, theta>).
inline double functional_identity_integrand(const NuParams& params, const LaplaceQuery& q,
                                            const PotentialVector& beta) {
  detail::require_size(q.lambda.size(), params.size(), "lambda");
  if ((q.lambda.array() < 0.0).any()) {
    fail(ErrorKind::DomainViolation, "the functional identity is stated for lambda >= 0");
  }
  const SymmetricFactorization f = factorize_symmetric(h_operator(params.network, beta));
  if (!f.positive_definite) fail(ErrorKind::OutOfSupport, "H_beta is not positive definite");
  const Vector g = f.solve(q.lambda);
  return std::exp(-params.eta.dot(g) - 0.5 * q.lambda.dot(g));
}

/// Density of the Bessel-bridge mixture against independent stopped Brownian
/// motions, as a function of the hitting times T.
inline double radon_nikodym_weight(const NuParams& params, const TimeVector& t_hit) {
  detail::require_size(t_hit.size(), params.size(), "t_hit");
  if (!t_hit.all_finite() || (t_hit.t.array() <= 0.0).any()) {
    fail(ErrorKind::DomainViolation, "hitting times must be finite and positive");
  }
  const Matrix& w = params.network.weights();
  if (!k_positive_definite(w, t_hit.t)) return 0.0;
  const Matrix k = k_operator(w, t_hit.t);
  const Eigen::PartialPivLU<Matrix> lu(k);
  const Vector& theta = params.theta;
  const Vector& eta = params.eta;
  const double quad_eta = eta.dot(lu.solve(t_hit.t.cwiseProduct(eta)));
  const double exponent = 0.5 * theta.dot(w * theta) - 0.5 * quad_eta + eta.dot(theta);
  return std::exp(exponent) / std::sqrt(lu.determinant());
}

}  // namespace idrift
