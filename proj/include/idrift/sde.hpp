#pragma once

// Euler-Maruyama integration of the interacting-drift system
//
//   X_i(t) = theta_i + int 1{s<T_i} dB_i - int 1{s<T_i} ((W psi)(s) + eta)_i ds,
//   psi(t) = K_{t^T}^{-1} (X(t) + (t^T) eta),
//
// each coordinate absorbed at its first hitting time T_i of zero. The engine
// works on a DriftSystem (W, start, eta) rather than on NuParams so that it
// also integrates the deformed systems (W~, X(t0), eta~) of the shifted
// processes, whose W~ may carry a diagonal and whose start may contain zeros.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <variant>
#include <vector>

#include "idrift/network.hpp"
#include "idrift/nu_distribution.hpp"
#include "idrift/parallel.hpp"
#include "idrift/random.hpp"

namespace idrift {

enum class HitRule { LinearInterpolation, BridgeProbability };

struct SdeConfig {
  double dt = 1e-4;
  std::optional<double> t_max;           // default: 50 * max_i(theta_i / eta^_i or theta_i^2)
  HitRule hit_rule = HitRule::BridgeProbability;
  std::optional<double> adaptive_floor;  // default: 0.05 * min positive start value
  std::uint64_t seed = 0;
  // Away from zero the step may grow to (growth_ratio * min alive X)^2, capped
  // at max_dt. Disabled while max_dt <= dt. Only exact for W = 0.
  double max_dt = 0.0;
  double growth_ratio = 0.1;
  bool record_path = false;
  std::vector<double> probe_times;  // the grid always lands on these

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::InvalidParams, "dt must be positive");
    if (t_max && !(*t_max > 0.0)) fail(ErrorKind::InvalidParams, "t_max must be positive");
    if (adaptive_floor && !(*adaptive_floor > 0.0)) {
      fail(ErrorKind::InvalidParams, "adaptive_floor must be positive");
    }
    if (!(growth_ratio > 0.0)) fail(ErrorKind::InvalidParams, "growth_ratio must be positive");
    for (double p : probe_times) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        fail(ErrorKind::InvalidParams, "probe times must be finite and nonnegative");
      }
    }
  }
};

/// (W, start, eta) of E^{W,start,eta}(X). start_i == 0 means already absorbed.
struct DriftSystem {
  Matrix w;
  Vector start;
  Vector eta;

  Index size() const { return w.rows(); }

  static DriftSystem from(const NuParams& p) { return {p.network.weights(), p.theta, p.eta}; }

  static DriftSystem shifted(const DeformedParams& d, Vector x0) {
    return {d.w_tilde, std::move(x0), d.eta_tilde};
  }

  void validate() const {
    const Index n = size();
    if (w.cols() != n || n == 0) fail(ErrorKind::DimensionMismatch, "W must be square and nonempty");
    detail::require_size(start.size(), n, "start");
    detail::require_size(eta.size(), n, "eta");
    if (!w.allFinite() || (w.array() < 0.0).any()) {
      fail(ErrorKind::NegativeWeight, "drift matrix must be finite and nonnegative");
    }
    if (!is_symmetric(w, 1e-9)) fail(ErrorKind::AsymmetricWeights, "drift matrix must be symmetric");
    if (!start.allFinite() || (start.array() < 0.0).any()) {
      fail(ErrorKind::InvalidParams, "start values must be nonnegative");
    }
    if (!eta.allFinite() || (eta.array() < 0.0).any()) {
      fail(ErrorKind::InvalidParams, "eta must be nonnegative");
    }
  }

  /// eta^_i = eta_i + sum_{j != i} W_ij start_j, the drift of the i-th marginal.
  Vector effective_drift() const {
    Vector out = eta;
    for (Index i = 0; i < size(); ++i) {
      for (Index j = 0; j < size(); ++j) {
        if (j != i) out[i] += w(i, j) * start[j];
      }
    }
    return out;
  }

  double default_horizon() const {
    const Vector drift = effective_drift();
    double scale = 0.0;
    for (Index i = 0; i < size(); ++i) {
      const double th = start[i];
      if (th <= 0.0) continue;
      scale = std::max(scale, drift[i] > 0.0 ? th / drift[i] : th * th);
    }
    return 50.0 * std::max(scale, 1e-12);
  }
};

/// State at a requested probe time.
struct ProbeSample {
  double time = 0.0;
  Vector x;
  Vector psi;
  Vector clock;  // t ^ T
};

/// One integrated trajectory. Dense per-step fields are filled only when the
/// config asks for the full path; t_hit and probes are always present.
struct PathRecord {
  DriftSystem system;
  std::vector<double> grid;        // time stamps
  std::vector<double> x;           // [k * n + i]
  std::vector<double> y;           // X + (t ^ T) eta
  std::vector<double> psi;
  std::vector<double> increments;  // dB on (grid[k-1], grid[k]], stored at k >= 1
  TimeVector t_hit;
  std::vector<ProbeSample> probes;
  std::size_t steps = 0;

  Index size() const { return system.size(); }
  bool has_path() const { return !grid.empty(); }
  bool complete() const { return t_hit.all_finite(); }

  double x_at(std::size_t k, Index i) const { return x[k * static_cast<std::size_t>(size()) + static_cast<std::size_t>(i)]; }
  double psi_at(std::size_t k, Index i) const { return psi[k * static_cast<std::size_t>(size()) + static_cast<std::size_t>(i)]; }

  Vector psi_vector(std::size_t k) const {
    Vector v(size());
    for (Index i = 0; i < size(); ++i) v[i] = psi_at(k, i);
    return v;
  }

  const ProbeSample* probe(double time) const {
    for (const auto& p : probes) {
      if (p.time == time) return &p;
    }
    return nullptr;
  }
};

namespace detail {

// Workspace for the per-step solve with K = Id - diag(s) W. Unpivoted LU is
// enough: all leading minors of K are positive exactly when K_s is in the
// admissible region, so the pivots double as the positivity test.
class KSolver {
 public:
  explicit KSolver(const Matrix& w) : n_(static_cast<std::size_t>(w.rows())), w_(n_ * n_), lu_(n_ * n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) w_[i * n_ + j] = w(static_cast<Index>(i), static_cast<Index>(j));
    }
  }

  // Factorizes K_s. Returns false if some pivot is not positive.
  bool factorize(const std::vector<double>& s) {
    const std::size_t n = n_;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        lu_[i * n + j] = (i == j ? 1.0 : 0.0) - s[i] * w_[i * n + j];
      }
    }
    min_pivot_ = std::numeric_limits<double>::infinity();
    max_pivot_ = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double pivot = lu_[k * n + k];
      if (!(pivot > 0.0)) {
        min_pivot_ = pivot;
        return false;
      }
      min_pivot_ = std::min(min_pivot_, pivot);
      max_pivot_ = std::max(max_pivot_, pivot);
      const double inv = 1.0 / pivot;
      for (std::size_t i = k + 1; i < n; ++i) {
        const double factor = lu_[i * n + k] * inv;
        lu_[i * n + k] = factor;
        if (factor == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) lu_[i * n + j] -= factor * lu_[k * n + j];
      }
    }
    return true;
  }

  void solve(std::vector<double>& v) const {
    const std::size_t n = n_;
    for (std::size_t i = 1; i < n; ++i) {
      double acc = v[i];
      for (std::size_t j = 0; j < i; ++j) acc -= lu_[i * n + j] * v[j];
      v[i] = acc;
    }
    for (std::size_t i = n; i-- > 0;) {
      double acc = v[i];
      for (std::size_t j = i + 1; j < n; ++j) acc -= lu_[i * n + j] * v[j];
      v[i] = acc / lu_[i * n + i];
    }
  }

  void apply_w(const std::vector<double>& v, std::vector<double>& out) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n_; ++j) acc += w_[i * n_ + j] * v[j];
      out[i] = acc;
    }
  }

  double min_pivot() const { return min_pivot_; }
  double condition_estimate() const { return max_pivot_ / min_pivot_; }

 private:
  std::size_t n_;
  std::vector<double> w_;
  std::vector<double> lu_;
  double min_pivot_ = 1.0;
  double max_pivot_ = 1.0;
};

inline constexpr double kConditionLimit = 1e12;

}  // namespace detail

inline PathRecord simulate(const DriftSystem& system, const SdeConfig& config, RandomStream& rng) {
  system.validate();
  config.validate();
  const std::size_t n = static_cast<std::size_t>(system.size());

  std::vector<double> x(n), s(n, 0.0), eta(n), psi(n), rhs(n), drift(n), dB(n);
  std::vector<char> alive(n);
  PathRecord rec;
  rec.system = system;
  rec.t_hit.t = Vector::Constant(static_cast<Index>(n), kNotHit);
  std::size_t n_alive = 0;
  double min_start = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = system.start[static_cast<Index>(i)];
    eta[i] = system.eta[static_cast<Index>(i)];
    alive[i] = x[i] > 0.0;
    if (alive[i]) {
      ++n_alive;
      min_start = std::min(min_start, x[i]);
    } else {
      rec.t_hit.t[static_cast<Index>(i)] = 0.0;
    }
  }

  const double t_max = config.t_max.value_or(system.default_horizon());
  const double floor = config.adaptive_floor.value_or(n_alive > 0 ? 0.05 * min_start : 1.0);
  const bool grow = config.max_dt > config.dt;
  std::vector<double> probes = config.probe_times;
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
  std::size_t next_probe = 0;

  detail::KSolver solver(system.w);
  auto compute_psi = [&] {
    for (std::size_t i = 0; i < n; ++i) psi[i] = x[i] + s[i] * eta[i];
    solver.solve(psi);
  };
  auto to_vector = [&](const std::vector<double>& v) {
    Vector out(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) out[static_cast<Index>(i)] = v[i];
    return out;
  };
  auto record_state = [&](double t) {
    if (!config.record_path) return;
    rec.grid.push_back(t);
    for (std::size_t i = 0; i < n; ++i) {
      rec.x.push_back(x[i]);
      rec.y.push_back(x[i] + s[i] * eta[i]);
      rec.psi.push_back(psi[i]);
    }
  };
  auto record_probes = [&](double t) {
    while (next_probe < probes.size() && probes[next_probe] <= t) {
      rec.probes.push_back({probes[next_probe], to_vector(x), to_vector(psi), to_vector(s)});
      ++next_probe;
    }
  };

  double t = 0.0;
  solver.factorize(s);
  compute_psi();
  record_state(t);
  record_probes(t);

  std::vector<double> s_next(n);
  while (n_alive > 0) {
    if (t >= t_max) {
      std::ostringstream os;
      os << n_alive << " coordinate(s) still alive at t_max = " << t_max;
      fail(ErrorKind::HorizonExceeded, os.str());
    }
    double min_x = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (alive[i]) min_x = std::min(min_x, x[i]);
    }
    double h = config.dt;
    if (min_x < floor) {
      h = 0.25 * config.dt;
    } else if (grow) {
      const double scaled = config.growth_ratio * min_x;
      h = std::clamp(scaled * scaled, config.dt, config.max_dt);
    }
    bool lands_on_probe = false;
    if (next_probe < probes.size() && t + h >= probes[next_probe]) {
      h = probes[next_probe] - t;
      lands_on_probe = true;
    }
    bool lands_on_horizon = false;
    if (t + h >= t_max) {
      h = t_max - t;
      lands_on_horizon = true;
      lands_on_probe = false;
    }

    // Refine until K stays comfortably positive over the step: the drift blows
    // up as det K -> 0, so the smallest pivot may at most halve per step.
    const double pivot_before = solver.min_pivot();
    for (;;) {
      for (std::size_t i = 0; i < n; ++i) s_next[i] = alive[i] ? s[i] + h : s[i];
      if (solver.factorize(s_next) && solver.min_pivot() >= 0.5 * pivot_before &&
          solver.condition_estimate() < detail::kConditionLimit) {
        break;
      }
      h *= 0.5;
      lands_on_probe = false;
      lands_on_horizon = false;
      if (h < 1e-15 * std::max(1.0, t)) {
        std::ostringstream os;
        os << "K_{t^T} is nearly singular at t = " << t << " (condition estimate "
           << solver.condition_estimate() << "); reduce dt";
        fail(ErrorKind::KNearSingular, os.str());
      }
    }

    // drift = W psi + eta, evaluated at the start of the step
    solver.apply_w(psi, drift);
    const double sqrt_h = std::sqrt(h);
    bool any_hit = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) {
        dB[i] = 0.0;
        continue;
      }
      dB[i] = sqrt_h * rng.normal();
      const double before = x[i];
      const double after = before + dB[i] - (drift[i] + eta[i]) * h;
      double tau = -1.0;
      if (after <= 0.0) {
        tau = h * before / (before - after);
      } else if (config.hit_rule == HitRule::BridgeProbability) {
        const double exponent = 2.0 * before * after / h;
        if (exponent < 40.0 && rng.uniform() < std::exp(-exponent)) {
          // crossing of the reflected straight line from `before` to -`after`
          tau = h * before / (before + after);
        }
      }
      if (tau >= 0.0) {
        any_hit = true;
        alive[i] = 0;
        --n_alive;
        x[i] = 0.0;
        s_next[i] = s[i] + tau;
        rec.t_hit.t[static_cast<Index>(i)] = t + tau;
      } else {
        x[i] = after;
      }
    }
    if (any_hit) solver.factorize(s_next);
    s.swap(s_next);
    t = lands_on_probe ? probes[next_probe] : (lands_on_horizon ? t_max : t + h);
    compute_psi();
    ++rec.steps;
    if (config.record_path) {
      rec.increments.insert(rec.increments.end(), dB.begin(), dB.end());
      record_state(t);
    }
    record_probes(t);
  }
  // After absorption the state is frozen; later probes see the final values.
  record_probes(std::numeric_limits<double>::infinity());
  return rec;
}

inline PathRecord simulate(const NuParams& params, const SdeConfig& config, RandomStream& rng) {
  return simulate(DriftSystem::from(params), config, rng);
}

/// beta = 1/(2T) from independent replicas; replica k uses stream (seed, k).
inline std::vector<PotentialVector> sample_beta(const NuParams& params, std::size_t n_samples,
                                                const SdeConfig& config, unsigned workers = 1) {
  SdeConfig cfg = config;
  cfg.record_path = false;
  cfg.probe_times.clear();
  const DriftSystem system = DriftSystem::from(params);
  return run_replicas(n_samples, workers, [&](std::size_t k) {
    RandomStream rng(cfg.seed, k);
    const PathRecord rec = simulate(system, cfg, rng);
    return PotentialVector{(2.0 * rec.t_hit.t).cwiseInverse()};
  });
}

/// lim psi(t) = H^{-1}_{1/(2T)} eta, from the hitting times alone.
inline Vector psi_limit(const PathRecord& record) {
  if (!record.complete()) fail(ErrorKind::IncompleteRecord, "some coordinate never hit zero");
  return h_inverse_extended(record.system.w, record.t_hit.t) * record.system.eta;
}

inline Vector psi_limit(const PathRecord& record, const NuParams& params) {
  if (!record.complete()) fail(ErrorKind::IncompleteRecord, "some coordinate never hit zero");
  return h_inverse_extended(params.network.weights(), record.t_hit.t) * params.eta;
}

struct QuadraticVariationReport {
  double time = 0.0;
  Matrix empirical;  // sum of dpsi dpsi^T over the grid up to `time`
  Matrix expected;   // H^{-1}_{1/(2(t ^ T))}
  double max_deviation = 0.0;
};

/// Realized quadratic covariation of psi up to the last grid time <= t.
inline QuadraticVariationReport quadratic_variation_residual(const PathRecord& record, double t) {
  if (!record.complete()) fail(ErrorKind::IncompleteRecord, "some coordinate never hit zero");
  if (!record.has_path()) fail(ErrorKind::IncompleteRecord, "record has no stored path");
  const Index n = record.size();
  QuadraticVariationReport out;
  out.empirical = Matrix::Zero(n, n);
  std::size_t k = 0;
  while (k + 1 < record.grid.size() && record.grid[k + 1] <= t) {
    const Vector d = record.psi_vector(k + 1) - record.psi_vector(k);
    out.empirical.noalias() += d * d.transpose();
    ++k;
  }
  out.time = record.grid[k];
  const Vector clock = record.t_hit.t.cwiseMin(out.time);
  out.expected = h_inverse_extended(record.system.w, clock);
  out.max_deviation = (out.empirical - out.expected).cwiseAbs().maxCoeff();
  return out;
}

/// Parameters of the process restarted at per-coordinate times t0.
struct ShiftResult {
  DeformedParams deformed;
  Vector x0;           // X_i(t0_i), zero for coordinates already absorbed
  Vector clock;        // t0 ^ T
  Vector t0;           // shift times actually used
  VertexSet surviving; // {i : T_i > t0_i}

  DriftSystem restarted() const { return DriftSystem::shifted(deformed, x0); }
};

namespace detail {

inline double state_at(const PathRecord& record, Index i, double time) {
  if (const ProbeSample* p = record.probe(time)) return p->x[i];
  if (!record.has_path() || time > record.grid.back()) {
    std::ostringstream os;
    os << "no recorded state of coordinate " << i << " at time " << time;
    fail(ErrorKind::BeyondHorizon, os.str());
  }
  const auto it = std::lower_bound(record.grid.begin(), record.grid.end(), time);
  const auto k = static_cast<std::size_t>(it - record.grid.begin());
  if (*it == time || k == 0) return record.x_at(k, i);
  const double t_lo = record.grid[k - 1];
  const double t_hi = record.grid[k];
  const double w = (time - t_lo) / (t_hi - t_lo);
  return (1.0 - w) * record.x_at(k - 1, i) + w * record.x_at(k, i);
}

}  // namespace detail

inline ShiftResult shift_state(const PathRecord& record, const TimeVector& t0) {
  const Index n = record.size();
  detail::require_size(t0.size(), n, "t0");
  if (!t0.all_finite() || (t0.t.array() < 0.0).any()) {
    fail(ErrorKind::BeyondHorizon, "shift times must be finite and nonnegative");
  }
  ShiftResult out;
  out.t0 = t0.t;
  out.clock = t0.t.cwiseMin(record.t_hit.t);
  out.x0 = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (record.t_hit[i] > t0[i]) {
      out.surviving.push_back(i);
      out.x0[i] = detail::state_at(record, i, t0[i]);
    }
  }
  out.deformed = deform_parameters(record.system.w, record.system.eta, out.clock);
  return out;
}

inline ShiftResult shift_state(const PathRecord& record, const TimeVector& t0, const NuParams&) {
  return shift_state(record, t0);
}

struct FixedTimes {
  Vector t0;
};

/// T0_i = first recorded time at which X_i <= level_i.
struct LevelCrossing {
  Vector levels;
};

using StoppingRule = std::variant<FixedTimes, LevelCrossing>;

inline ShiftResult shift_at_multistopping(const PathRecord& record, const StoppingRule& rule) {
  const Index n = record.size();
  if (const auto* fixed = std::get_if<FixedTimes>(&rule)) return shift_state(record, {fixed->t0});
  const auto& levels = std::get<LevelCrossing>(rule).levels;
  detail::require_size(levels.size(), n, "levels");
  Vector t0(n);
  for (Index i = 0; i < n; ++i) {
    if (record.system.start[i] <= levels[i]) {
      t0[i] = 0.0;
      continue;
    }
    if (!record.has_path()) fail(ErrorKind::RuleNeverTriggered, "level rules need a stored path");
    bool found = false;
    for (std::size_t k = 0; k < record.grid.size(); ++k) {
      if (record.x_at(k, i) <= levels[i]) {
        t0[i] = record.grid[k];
        found = true;
        break;
      }
    }
    if (!found) {
      std::ostringstream os;
      os << "X_" << i << " never reached level " << levels[i];
      fail(ErrorKind::RuleNeverTriggered, os.str());
    }
    // Absorbed coordinates reach the level at their hitting time at the latest.
    t0[i] = std::min(t0[i], record.t_hit[i]);
  }
  return shift_state(record, {t0});
}

inline ShiftResult shift_at_multistopping(const PathRecord& record, const StoppingRule& rule,
                                          const NuParams&) {
  return shift_at_multistopping(record, rule);
}

}  // namespace idrift
