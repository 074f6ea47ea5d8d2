#pragma once

// 3-dimensional Bessel bridges from theta > 0 to 0 on [0, T], realized as the
// Euclidean norm of a 3-component Brownian bridge from (theta, 0, 0) to the
// origin. Grid values are exact Gaussian bridge draws, so there is no
// discretization bias at grid points. Paths are extended by 0 after T.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "idrift/sde.hpp"

namespace idrift {

struct BridgeParams {
  double theta = 1.0;
  double t_end = 1.0;

  void validate() const {
    if (!(theta > 0.0) || !std::isfinite(theta)) fail(ErrorKind::InvalidParams, "theta must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) fail(ErrorKind::InvalidParams, "T must be positive");
  }
};

/// Density of X(t), 0 < t < T, under the Bessel bridge from theta to 0 on [0, T].
inline double bridge_density(const BridgeParams& p, double t, double y) {
  p.validate();
  if (!(t > 0.0 && t < p.t_end)) fail(ErrorKind::TimeOutOfRange, "bridge density needs 0 < t < T");
  if (!(y > 0.0)) return 0.0;
  const double big_t = p.t_end;
  const double rest = big_t - t;
  const double th = p.theta;
  const double log_p = -0.5 * std::log(2.0 * std::numbers::pi * t) + std::log(y / th) +
                       1.5 * std::log(big_t / rest) - y * y / (2.0 * rest) +
                       th * th / (2.0 * big_t) - (y - th) * (y - th) / (2.0 * t) +
                       std::log(-std::expm1(-2.0 * y * th / t));
  return std::exp(log_p);
}

/// P(X(t) <= y) under the same bridge, by adaptive Gauss-Kronrod quadrature of the density.
inline double bridge_cdf(const BridgeParams& p, double t, double y) {
  p.validate();
  if (!(t > 0.0 && t < p.t_end)) fail(ErrorKind::TimeOutOfRange, "bridge CDF needs 0 < t < T");
  if (!(y > 0.0)) return 0.0;
  const auto density = [&](double v) { return bridge_density(p, t, v); };
  return std::clamp(
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, 0.0, y, 15, 1e-12), 0.0, 1.0);
}

/// A sampled bridge that keeps its 3-D knots, so the grid can be refined later
/// by conditioning on the neighbouring knots instead of resampling.
class BesselBridgePath {
 public:
  using Point = std::array<double, 3>;

  static BesselBridgePath sample(const BridgeParams& p, std::span<const double> grid,
                                 RandomStream& rng) {
    p.validate();
    double prev = 0.0;
    for (double g : grid) {
      if (!(g >= 0.0 && g <= p.t_end) || g < prev) {
        fail(ErrorKind::GridOutOfRange, "grid must be increasing and inside [0, T]");
      }
      prev = g;
    }
    BesselBridgePath path;
    path.params_ = p;
    path.times_.push_back(0.0);
    path.points_.push_back({p.theta, 0.0, 0.0});
    for (double g : grid) {
      if (g == path.times_.back()) continue;
      if (g == p.t_end) break;
      const double s = path.times_.back();
      const Point& v = path.points_.back();
      const double remaining = p.t_end - s;
      const double mean_factor = (p.t_end - g) / remaining;
      const double sd = std::sqrt((g - s) * (p.t_end - g) / remaining);
      Point next{};
      for (int c = 0; c < 3; ++c) next[c] = v[c] * mean_factor + sd * rng.normal();
      path.times_.push_back(g);
      path.points_.push_back(next);
    }
    path.times_.push_back(p.t_end);
    path.points_.push_back({0.0, 0.0, 0.0});
    return path;
  }

  /// Inserts a knot at time t in (0, T) drawn from the bridge between its neighbours.
  void refine(double t, RandomStream& rng) {
    if (!(t > 0.0 && t < params_.t_end)) fail(ErrorKind::GridOutOfRange, "refinement time outside (0, T)");
    const auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (*it == t) return;
    const auto hi = static_cast<std::size_t>(it - times_.begin());
    const std::size_t lo = hi - 1;
    const double a = times_[lo];
    const double b = times_[hi];
    const double w = (t - a) / (b - a);
    const double sd = std::sqrt((t - a) * (b - t) / (b - a));
    Point next{};
    for (int c = 0; c < 3; ++c) {
      next[c] = (1.0 - w) * points_[lo][c] + w * points_[hi][c] + sd * rng.normal();
    }
    times_.insert(times_.begin() + static_cast<std::ptrdiff_t>(hi), t);
    points_.insert(points_.begin() + static_cast<std::ptrdiff_t>(hi), next);
  }

  /// Norm at a knot time; 0 at and after T.
  double value_at(double t) const {
    if (t >= params_.t_end) return 0.0;
    const auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.end() || *it != t) fail(ErrorKind::GridOutOfRange, "time is not a knot of the path");
    const Point& v = points_[static_cast<std::size_t>(it - times_.begin())];
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  }

  const std::vector<double>& times() const { return times_; }
  const BridgeParams& params() const { return params_; }

 private:
  BridgeParams params_;
  std::vector<double> times_;
  std::vector<Point> points_;
};

/// Bessel bridge values on `grid` (a subset of [0, T]).
inline std::vector<double> sample_bridge(const BridgeParams& p, std::span<const double> grid,
                                         RandomStream& rng) {
  const BesselBridgePath path = BesselBridgePath::sample(p, grid, rng);
  std::vector<double> out;
  out.reserve(grid.size());
  for (double g : grid) out.push_back(path.value_at(g));
  return out;
}

/// One draw of the mixture: hitting times and per-vertex bridge values.
struct MixtureBundle {
  Vector t_end;                            // T_i = 1/(2 beta_i)
  std::vector<std::vector<double>> paths;  // paths[i][k] = X_i(grid_i[k])
};

/// Replica k draws beta from the S.D.E. on stream (seed, k, 0) and the bridges
/// on stream (seed, k, 1). grid_per_vertex may be empty-per-vertex; times past
/// T_i read as 0.
inline std::vector<MixtureBundle> sample_mixture(const NuParams& params, std::size_t n_samples,
                                                 const std::vector<std::vector<double>>& grid_per_vertex,
                                                 const SdeConfig& config, unsigned workers = 1) {
  const Index n = params.size();
  if (static_cast<Index>(grid_per_vertex.size()) != n) {
    fail(ErrorKind::DimensionMismatch, "need one grid per vertex");
  }
  SdeConfig cfg = config;
  cfg.record_path = false;
  cfg.probe_times.clear();
  const DriftSystem system = DriftSystem::from(params);
  return run_replicas(n_samples, workers, [&](std::size_t k) {
    RandomStream sde_rng(cfg.seed, k, 0);
    const PathRecord rec = simulate(system, cfg, sde_rng);
    RandomStream bridge_rng(cfg.seed, k, 1);
    MixtureBundle bundle;
    bundle.t_end = rec.t_hit.t;
    for (Index i = 0; i < n; ++i) {
      const auto& grid = grid_per_vertex[static_cast<std::size_t>(i)];
      const BridgeParams bp{params.theta[i], rec.t_hit[i]};
      std::vector<double> inside;
      for (double g : grid) {
        if (g < bp.t_end) inside.push_back(g);
      }
      std::vector<double> values = sample_bridge(bp, inside, bridge_rng);
      values.resize(grid.size(), 0.0);
      bundle.paths.push_back(std::move(values));
    }
    return bundle;
  });
}

}  // namespace idrift
