#pragma once

// Conductance networks and the deterministic operators built on them:
//   H_beta = 2 diag(beta) - W,   K_t = Id - diag(t) W,
// the extended inverse H^{-1}_{1/(2t)} = K_t^{-1} diag(t), and the parameter
// deformation (W~, eta~) used by the shifted processes.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <vector>

#include "idrift/errors.hpp"

namespace idrift {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Clock value of a coordinate that has not hit zero yet. IEEE arithmetic gives
// the conventions 1/inf = 0 and 1/0 = inf for free.
inline constexpr double kNotHit = std::numeric_limits<double>::infinity();

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPivotTolerance = 1e-12;

/// A point beta of R^V; admissible when H_beta is positive definite.
struct PotentialVector {
  Vector beta;

  Index size() const { return beta.size(); }
  double operator[](Index i) const { return beta[i]; }
};

/// Per-vertex clock or hitting times, entries in [0, +inf].
struct TimeVector {
  Vector t;

  Index size() const { return t.size(); }
  double operator[](Index i) const { return t[i]; }
  bool all_finite() const { return t.allFinite(); }

  static TimeVector zeros(Index n) { return {Vector::Zero(n)}; }
};

/// (W~, eta~): parameters of the process restarted after a time shift.
struct DeformedParams {
  Matrix w_tilde;
  Vector eta_tilde;
};

namespace detail {

inline std::string describe(Index i, Index j) {
  std::ostringstream os;
  os << "(" << i << "," << j << ")";
  return os.str();
}

inline void require_size(Index got, Index want, const char* what) {
  if (got != want) {
    std::ostringstream os;
    os << what << " has length " << got << ", expected " << want;
    fail(ErrorKind::DimensionMismatch, os.str());
  }
}

}  // namespace detail

/// Connectivity of the graph {i != j : w(i,j) > 0} by breadth-first search.
inline bool is_connected(const Matrix& w) {
  const Index n = w.rows();
  if (n <= 1) return true;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<Index> frontier;
  frontier.push(0);
  seen[0] = 1;
  Index reached = 1;
  while (!frontier.empty()) {
    const Index i = frontier.front();
    frontier.pop();
    for (Index j = 0; j < n; ++j) {
      if (j != i && !seen[static_cast<std::size_t>(j)] && w(i, j) > 0.0) {
        seen[static_cast<std::size_t>(j)] = 1;
        ++reached;
        frontier.push(j);
      }
    }
  }
  return reached == n;
}

inline double max_abs_entry(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Matrix& m, double rel_tol = kSymmetryTolerance) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, max_abs_entry(m));
  return ((m - m.transpose()).cwiseAbs().array() <= rel_tol * scale).all();
}

/// Symmetric nonnegative irreducible weight matrix. Immutable once built.
class ConductanceNetwork {
 public:
  ConductanceNetwork() = default;

  /// Validates the weights. Asymmetric inputs are rejected, never symmetrized.
  static ConductanceNetwork from_weights(Matrix weights, bool require_connected = true) {
    if (weights.rows() != weights.cols() || weights.rows() == 0) {
      std::ostringstream os;
      os << "weights must be a nonempty square matrix, got " << weights.rows() << "x"
         << weights.cols();
      fail(ErrorKind::DimensionMismatch, os.str());
    }
    const Index n = weights.rows();
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        const double v = weights(i, j);
        if (!std::isfinite(v)) {
          fail(ErrorKind::NonFiniteWeight, "weight " + detail::describe(i, j) + " is not finite");
        }
        if (v < 0.0) {
          fail(ErrorKind::NegativeWeight,
               "weight " + detail::describe(i, j) + " is negative; conductances must be >= 0");
        }
      }
    }
    if (!is_symmetric(weights)) {
      fail(ErrorKind::AsymmetricWeights, "conductances must satisfy W(i,j) == W(j,i)");
    }
    if (require_connected && !is_connected(weights)) {
      fail(ErrorKind::DisconnectedGraph,
           "W must be irreducible: the graph of positive off-diagonal weights is disconnected");
    }
    ConductanceNetwork net;
    net.w_ = std::move(weights);
    return net;
  }

  Index size() const { return w_.rows(); }
  const Matrix& weights() const { return w_; }
  double weight(Index i, Index j) const { return w_(i, j); }

  bool has_zero_diagonal() const { return (w_.diagonal().array() == 0.0).all(); }

  std::vector<Index> neighbors(Index i) const {
    std::vector<Index> out;
    for (Index j = 0; j < size(); ++j) {
      if (j != i && w_(i, j) > 0.0) out.push_back(j);
    }
    return out;
  }

 private:
  Matrix w_;
};

inline ConductanceNetwork build_network(Index n, const Matrix& weights) {
  if (weights.rows() != n || weights.cols() != n) {
    std::ostringstream os;
    os << "weights must be " << n << "x" << n;
    fail(ErrorKind::DimensionMismatch, os.str());
  }
  return ConductanceNetwork::from_weights(weights);
}

inline ConductanceNetwork build_network(Index n, const std::vector<std::vector<double>>& rows) {
  Matrix w(n, n);
  if (static_cast<Index>(rows.size()) != n) {
    fail(ErrorKind::DimensionMismatch, "weights must have n rows");
  }
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != n) {
      fail(ErrorKind::DimensionMismatch, "every weight row must have n entries");
    }
    for (Index j = 0; j < n; ++j) w(i, j) = row[static_cast<std::size_t>(j)];
  }
  return build_network(n, w);
}

// ---------------------------------------------------------------------------
// Index-set helpers (vertex subsets are sorted index lists).

using VertexSet = std::vector<Index>;

inline VertexSet complement(const VertexSet& u, Index n) {
  VertexSet out;
  for (Index i = 0; i < n; ++i) {
    if (std::find(u.begin(), u.end(), i) == u.end()) out.push_back(i);
  }
  return out;
}

inline Matrix block(const Matrix& m, const VertexSet& rows, const VertexSet& cols) {
  return m(rows, cols);
}

inline Vector restrict(const Vector& v, const VertexSet& idx) { return v(idx); }

// ---------------------------------------------------------------------------
// Operators.

inline Matrix h_operator(const Matrix& w, const Vector& beta) {
  Matrix h = -w;
  h.diagonal() += 2.0 * beta;
  return h;
}

inline Matrix h_operator(const ConductanceNetwork& net, const PotentialVector& beta) {
  detail::require_size(beta.size(), net.size(), "beta");
  return h_operator(net.weights(), beta.beta);
}

inline Matrix k_operator(const Matrix& w, const Vector& t) {
  if (!t.allFinite()) {
    fail(ErrorKind::InfiniteTimeEntry, "K_t is only defined for finite time vectors");
  }
  Matrix k = -(t.asDiagonal() * w);
  k.diagonal().array() += 1.0;
  return k;
}

inline Matrix k_operator(const ConductanceNetwork& net, const TimeVector& t) {
  detail::require_size(t.size(), net.size(), "t");
  return k_operator(net.weights(), t.t);
}

/// Result of the pivoted symmetric factorization used for the PD test.
struct SymmetricFactorization {
  bool positive_definite = false;
  Vector pivots;          // D of P^T L D L^T P, in pivoted order
  double log_det = -std::numeric_limits<double>::infinity();  // valid when PD
  Eigen::LDLT<Matrix> ldlt;

  Vector solve(const Vector& rhs) const { return ldlt.solve(rhs); }
  Matrix solve(const Matrix& rhs) const { return ldlt.solve(rhs); }
};

/// Positive definite iff every LDL^T pivot exceeds 1e-12 * max diagonal.
inline SymmetricFactorization factorize_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) fail(ErrorKind::NotSymmetric, "matrix is not square");
  if (!is_symmetric(m)) fail(ErrorKind::NotSymmetric, "matrix is not symmetric within 1e-12");
  SymmetricFactorization f;
  if (m.rows() == 0) {
    f.positive_definite = true;
    f.log_det = 0.0;
    return f;
  }
  f.ldlt.compute(m);
  f.pivots = f.ldlt.vectorD();
  const double max_diag = m.diagonal().cwiseAbs().maxCoeff();
  const double threshold = kPivotTolerance * max_diag;
  f.positive_definite = f.ldlt.info() == Eigen::Success && max_diag > 0.0 &&
                        (f.pivots.array() > threshold).all();
  if (f.positive_definite) f.log_det = f.pivots.array().log().sum();
  return f;
}

inline bool is_positive_definite(const Matrix& m) { return factorize_symmetric(m).positive_definite; }

/// K_t has a positive spectrum iff Id - sqrt(t) W sqrt(t) is positive definite
/// (the two share their principal minors). Requires W symmetric and t >= 0.
inline bool k_positive_definite(const Matrix& w, const Vector& t) {
  if (!t.allFinite()) return false;
  const Vector root = t.cwiseMax(0.0).cwiseSqrt();
  Matrix s = -(root.asDiagonal() * w * root.asDiagonal());
  s.diagonal().array() += 1.0;
  s = 0.5 * (s + s.transpose());
  return factorize_symmetric(s).positive_definite;
}

inline double determinant(const Matrix& m) {
  if (m.rows() == 0) return 1.0;
  return m.partialPivLu().determinant();
}

/// H^{-1}_{1/(2t)} := K_t^{-1} diag(t); row/column i vanish when t_i = 0.
inline Matrix h_inverse_extended(const Matrix& w, const Vector& t) {
  const Matrix k = k_operator(w, t);
  const Eigen::PartialPivLU<Matrix> lu(k);
  if (!(std::abs(lu.determinant()) > 0.0) || lu.rcond() < kPivotTolerance) {
    fail(ErrorKind::SingularK, "K_t is singular; H_{1/(2t)} is not invertible");
  }
  Matrix out = lu.solve(Matrix(t.asDiagonal()));
  return 0.5 * (out + out.transpose());
}

inline Matrix h_inverse_extended(const ConductanceNetwork& net, const TimeVector& t) {
  detail::require_size(t.size(), net.size(), "t");
  return h_inverse_extended(net.weights(), t.t);
}

/// W~ = W K_s^{-1},  eta~ = eta + W~ (s * eta).
inline DeformedParams deform_parameters(const Matrix& w, const Vector& eta, const Vector& s) {
  detail::require_size(eta.size(), w.rows(), "eta");
  detail::require_size(s.size(), w.rows(), "s");
  if (!k_positive_definite(w, s)) {
    fail(ErrorKind::SingularK, "K_s must be positive definite to deform the parameters");
  }
  const Matrix k = k_operator(w, s);
  // W K^{-1} = (K^{-T} W^T)^T
  Matrix w_tilde = k.transpose().partialPivLu().solve(w.transpose()).transpose();
  w_tilde = 0.5 * (w_tilde + w_tilde.transpose());
  Vector eta_tilde = eta + w_tilde * s.cwiseProduct(eta);
  return {std::move(w_tilde), std::move(eta_tilde)};
}

inline DeformedParams deform_parameters(const ConductanceNetwork& net, const Vector& eta,
                                        const TimeVector& s) {
  return deform_parameters(net.weights(), eta, s.t);
}

/// Residuals of the time-shift identities, each a max relative deviation.
struct AlgebraResiduals {
  double k_factorization = 0.0;   // K_{t0+t1} vs K~_{t1} K_{t0}
  double determinant_ratio = 0.0; // |H_{1/2(t0+t1)}| / |H~_{1/2t1}| vs prod(t1/(t0+t1)) |K_{t0}|
  double eta_tilde = 0.0;         // eta + W~(t0 eta) vs t0^{-1} H^{-1}_{1/2t0} eta (t0 > 0 only)
  double eta_bilinear = 0.0;      // <eta~, H~^{-1} eta~> vs difference of <eta, H^{-1} eta>

  double max() const {
    return std::max({k_factorization, determinant_ratio, eta_tilde, eta_bilinear});
  }
};

namespace detail {

inline double relative_gap(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

// Determinants can be arbitrarily small, so no floor of 1 here.
inline double strict_relative_gap(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace detail

inline AlgebraResiduals algebra_residuals(const ConductanceNetwork& net, const TimeVector& t0,
                                          const TimeVector& t1, const Vector& eta) {
  const Index n = net.size();
  detail::require_size(t0.size(), n, "t0");
  detail::require_size(t1.size(), n, "t1");
  detail::require_size(eta.size(), n, "eta");
  const Matrix& w = net.weights();
  const Vector sum = t0.t + t1.t;
  if (!k_positive_definite(w, sum)) {
    fail(ErrorKind::SingularK, "K_{t0+t1} must be positive definite");
  }

  AlgebraResiduals r;
  const Matrix k0 = k_operator(w, t0.t);
  const Matrix k_sum = k_operator(w, sum);
  const DeformedParams deformed = deform_parameters(w, eta, t0.t);
  const Matrix& w_tilde = deformed.w_tilde;
  const Matrix k_tilde = k_operator(w_tilde, t1.t);

  const Matrix product = k_tilde * k0;
  r.k_factorization = (k_sum - product).cwiseAbs().maxCoeff() / std::max(1.0, max_abs_entry(k_sum));

  // Determinant ratio. With every t1_i > 0 evaluate the H form literally;
  // otherwise use the equivalent K form det K_{t0+t1} = det K~_{t1} det K_{t0}.
  const double det_k0 = determinant(k0);
  if ((t1.t.array() > 0.0).all()) {
    Matrix h_sum = -w;
    h_sum.diagonal() += sum.cwiseInverse();
    Matrix h_tilde = -w_tilde;
    h_tilde.diagonal() += t1.t.cwiseInverse();
    const double lhs = determinant(h_sum) / determinant(h_tilde);
    const double rhs = t1.t.cwiseQuotient(sum).prod() * det_k0;
    r.determinant_ratio = detail::strict_relative_gap(lhs, rhs);
  } else {
    const double lhs = determinant(k_sum);
    const double rhs = determinant(k_tilde) * det_k0;
    r.determinant_ratio = detail::strict_relative_gap(lhs, rhs);
  }

  const Vector& eta_tilde = deformed.eta_tilde;
  const Matrix h0_inv = h_inverse_extended(w, t0.t);
  if ((t0.t.array() > 0.0).all()) {
    const Vector other = (h0_inv * eta).cwiseQuotient(t0.t);
    const double scale = std::max(1.0, eta_tilde.cwiseAbs().maxCoeff());
    r.eta_tilde = (eta_tilde - other).cwiseAbs().maxCoeff() / scale;
  }

  const Matrix h_tilde_inv = h_inverse_extended(w_tilde, t1.t);
  const Matrix h_sum_inv = h_inverse_extended(w, sum);
  const double lhs = eta_tilde.dot(h_tilde_inv * eta_tilde);
  const double rhs = eta.dot(h_sum_inv * eta) - eta.dot(h0_inv * eta);
  r.eta_bilinear = detail::relative_gap(lhs, rhs);
  return r;
}

}  // namespace idrift
