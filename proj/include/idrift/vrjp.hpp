#pragma once

// Vertex reinforced jump process in the exchangeable time scale, the Markov
// jump processes it mixes, and the map beta -> psi between them.

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "idrift/nu_distribution.hpp"
#include "idrift/parallel.hpp"
#include "idrift/random.hpp"
#include "idrift/sde.hpp"

namespace idrift {

struct VrjpRecord {
  std::vector<double> jump_times;  // time of each jump
  std::vector<Index> visited;      // Z: start vertex, then the vertex entered at each jump
  Vector local_times;              // l_i(horizon)
  std::vector<long> jump_counts;   // N_i(horizon): number of visits to i
  double horizon = 0.0;

  Index size() const { return local_times.size(); }
};

namespace detail {

inline void require_zero_diagonal(const ConductanceNetwork& net) {
  if (!net.has_zero_diagonal()) {
    fail(ErrorKind::NonzeroDiagonal, "jump processes need W_ii = 0 for every vertex");
  }
}

inline void require_start(const ConductanceNetwork& net, Index delta) {
  if (delta < 0 || delta >= net.size()) fail(ErrorKind::DimensionMismatch, "start vertex out of range");
  if (net.neighbors(delta).empty()) fail(ErrorKind::IsolatedStart, "start vertex has no neighbours");
}

inline VrjpRecord start_record(Index n, Index delta, double t_max) {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) fail(ErrorKind::InvalidParams, "t_max must be positive");
  VrjpRecord rec;
  rec.local_times = Vector::Zero(n);
  rec.jump_counts.assign(static_cast<std::size_t>(n), 0);
  rec.visited.push_back(delta);
  rec.jump_counts[static_cast<std::size_t>(delta)] = 1;
  rec.horizon = t_max;
  return rec;
}

template <class WeightFn>
Index pick_neighbour(const ConductanceNetwork& net, Index i, double total, WeightFn&& weight,
                     RandomStream& rng) {
  const double target = rng.uniform() * total;
  double acc = 0.0;
  Index last = -1;
  for (Index j = 0; j < net.size(); ++j) {
    if (j == i || net.weight(i, j) <= 0.0) continue;
    acc += weight(j);
    last = j;
    if (target < acc) return j;
  }
  return last;
}

}  // namespace detail

/// Jump rate i -> j is W_ij sqrt(theta_j^2 + l_j) / (2 sqrt(theta_i^2 + l_i)):
/// the process whose local time at j starts at theta_j, run in the clock
/// l -> L^2 - theta^2. These are the rates for which the Markov mixture below
/// holds.
///
/// While at i the integrated rate over a sojourn of length s is
/// A(sqrt(c + s) - sqrt(c)), A = sum_j W_ij sqrt(theta_j^2 + l_j),
/// c = theta_i^2 + l_i, which inverts in closed form against an Exp(1) draw.
inline VrjpRecord vrjp_simulate(const ConductanceNetwork& net, const Vector& theta, Index delta,
                                double t_max, RandomStream& rng) {
  detail::require_zero_diagonal(net);
  detail::require_size(theta.size(), net.size(), "theta");
  if ((theta.array() <= 0.0).any()) fail(ErrorKind::InvalidParams, "theta must be strictly positive");
  detail::require_start(net, delta);
  VrjpRecord rec = detail::start_record(net.size(), delta, t_max);
  const Matrix& w = net.weights();
  Vector& ell = rec.local_times;

  double t = 0.0;
  Index i = delta;
  for (;;) {
    double a = 0.0;
    for (Index j = 0; j < net.size(); ++j) {
      if (j != i && w(i, j) > 0.0) a += w(i, j) * std::sqrt(theta[j] * theta[j] + ell[j]);
    }
    const double c = theta[i] * theta[i] + ell[i];
    const double e = rng.exponential();
    // (sqrt(c) + e/a)^2 - c without the cancellation
    const double sojourn = 2.0 * e * std::sqrt(c) / a + e * e / (a * a);
    if (t + sojourn >= t_max) {
      ell[i] += t_max - t;
      break;
    }
    ell[i] += sojourn;
    t += sojourn;
    const Index next = detail::pick_neighbour(
        net, i, a, [&](Index j) { return w(i, j) * std::sqrt(theta[j] * theta[j] + ell[j]); }, rng);
    rec.jump_times.push_back(t);
    rec.visited.push_back(next);
    ++rec.jump_counts[static_cast<std::size_t>(next)];
    i = next;
  }
  return rec;
}

/// Markov jump process with rates W_ij psi_j / (2 psi_i).
inline VrjpRecord markov_jump_simulate(const ConductanceNetwork& net, const Vector& psi, Index delta,
                                       double t_max, RandomStream& rng) {
  detail::require_zero_diagonal(net);
  detail::require_size(psi.size(), net.size(), "psi");
  if (!psi.allFinite() || (psi.array() <= 0.0).any()) {
    fail(ErrorKind::NonpositivePsi, "psi must be entrywise positive");
  }
  detail::require_start(net, delta);
  VrjpRecord rec = detail::start_record(net.size(), delta, t_max);
  const Matrix& w = net.weights();

  // Total departure rate per vertex is constant.
  Vector total = Vector::Zero(net.size());
  for (Index i = 0; i < net.size(); ++i) {
    for (Index j = 0; j < net.size(); ++j) {
      if (j != i) total[i] += 0.5 * w(i, j) * psi[j] / psi[i];
    }
  }
  double t = 0.0;
  Index i = delta;
  for (;;) {
    const double sojourn = rng.exponential() / total[i];
    if (t + sojourn >= t_max) {
      rec.local_times[i] += t_max - t;
      break;
    }
    rec.local_times[i] += sojourn;
    t += sojourn;
    const Index next = detail::pick_neighbour(
        net, i, total[i], [&](Index j) { return 0.5 * w(i, j) * psi[j] / psi[i]; }, rng);
    rec.jump_times.push_back(t);
    rec.visited.push_back(next);
    ++rec.jump_counts[static_cast<std::size_t>(next)];
    i = next;
  }
  return rec;
}

/// psi_delta = 1 and (H_beta psi)_U = 0 on U = V \ {delta}. beta_delta is not read.
inline Vector psi_from_beta(const ConductanceNetwork& net, const PotentialVector& beta, Index delta) {
  const Index n = net.size();
  detail::require_size(beta.size(), n, "beta");
  if (delta < 0 || delta >= n) fail(ErrorKind::DimensionMismatch, "start vertex out of range");
  const VertexSet u = complement({delta}, n);
  Vector psi = Vector::Ones(n);
  if (u.empty()) return psi;
  const Matrix& w = net.weights();
  const SymmetricFactorization f =
      factorize_symmetric(h_operator(block(w, u, u), restrict(beta.beta, u)));
  if (!f.positive_definite) fail(ErrorKind::BlockNotPD, "(H_beta)_{U,U} is not positive definite");
  psi(u) = f.solve(Vector(block(w, u, {delta}).col(0)));
  return psi;
}

/// N_i / l_i per vertex; unvisited vertices are reported as nullopt.
inline std::vector<std::optional<double>> empirical_beta(const VrjpRecord& record) {
  std::vector<std::optional<double>> out(static_cast<std::size_t>(record.size()));
  for (Index i = 0; i < record.size(); ++i) {
    const auto visits = record.jump_counts[static_cast<std::size_t>(i)];
    const double ell = record.local_times[i];
    if (visits > 0 && ell > 0.0) out[static_cast<std::size_t>(i)] = static_cast<double>(visits) / ell;
  }
  return out;
}

/// Replica k: VRJP on stream (seed, k, 0).
inline std::vector<VrjpRecord> sample_vrjp(const ConductanceNetwork& net, const Vector& theta,
                                           Index delta, double t_max, std::size_t n_samples,
                                           std::uint64_t seed, unsigned workers = 1) {
  return run_replicas(n_samples, workers, [&](std::size_t k) {
    RandomStream rng(seed, k, 0);
    return vrjp_simulate(net, theta, delta, t_max, rng);
  });
}

/// Two-stage draw of the mixture: beta_U from the S.D.E. on U = V \ {delta}
/// with eta = W_{U,delta} theta_delta (stream (seed, k, 0)), psi from beta_U,
/// then the Markov jump process (stream (seed, k, 1)).
inline std::vector<VrjpRecord> sample_vrjp_mixture(const ConductanceNetwork& net, const Vector& theta,
                                                   Index delta, double t_max, std::size_t n_samples,
                                                   const SdeConfig& config, unsigned workers = 1) {
  detail::require_zero_diagonal(net);
  detail::require_start(net, delta);
  const NuParams full = NuParams::make(net, theta);
  const VertexSet u = complement({delta}, net.size());
  const NuParams on_u = restricted_params(full, u, /*allow_disconnected=*/true);
  const DriftSystem system = DriftSystem::from(on_u);
  SdeConfig cfg = config;
  cfg.record_path = false;
  cfg.probe_times.clear();
  return run_replicas(n_samples, workers, [&](std::size_t k) {
    RandomStream sde_rng(cfg.seed, k, 0);
    const PathRecord rec = simulate(system, cfg, sde_rng);
    Vector beta = Vector::Zero(net.size());
    beta(u) = (2.0 * rec.t_hit.t).cwiseInverse();
    const Vector psi = psi_from_beta(net, {beta}, delta);
    RandomStream jump_rng(cfg.seed, k, 1);
    return markov_jump_simulate(net, psi, delta, t_max, jump_rng);
  });
}

}  // namespace idrift
