#pragma once

// Experiment configuration and the verification checks run by the CLI and the
// acceptance binary. Each check owns one acceptance criterion, derives its
// seed from (config seed, criterion id) and writes its artifacts under
// <output_dir>/<id>/, so a criterion produces the same bytes whichever suite
// runs it and however many workers share the replicas.

#include <boost/math/quadrature/exp_sinh.hpp>

#include <Eigen/Eigenvalues>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string_view>

#include "idrift/bessel.hpp"
#include "idrift/io.hpp"
#include "idrift/nu_distribution.hpp"
#include "idrift/sde.hpp"
#include "idrift/stats.hpp"
#include "idrift/vrjp.hpp"

namespace idrift {

// ---------------------------------------------------------------------------
// Configuration

/// Integrator settings given in the config file; unset fields keep each
/// check's own defaults.
struct SdeOverrides {
  std::optional<double> dt;
  std::optional<double> t_max;
  std::optional<HitRule> hit_rule;
  std::optional<double> adaptive_floor;
  std::optional<double> max_dt;
  std::optional<double> growth_ratio;
  bool record_path = false;

  SdeConfig apply(SdeConfig base) const {
    if (dt) base.dt = *dt;
    if (t_max) base.t_max = *t_max;
    if (hit_rule) base.hit_rule = *hit_rule;
    if (adaptive_floor) base.adaptive_floor = *adaptive_floor;
    if (max_dt) base.max_dt = *max_dt;
    if (growth_ratio) base.growth_ratio = *growth_ratio;
    return base;
  }
};

struct ExperimentConfig {
  std::string suite = "all";
  std::optional<NuParams> nu_params;  // replaces the default law in sample-beta, C3, C4 and C6b
  SdeOverrides sde;
  std::optional<std::size_t> replicas;  // replaces every check's default replica count
  std::vector<LaplaceQuery> lambda_grid;
  std::vector<double> probe_times;
  std::filesystem::path output_dir = "idrift-out";
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::size_t export_replicas = 100;  // replicas written out in full (paths, jump chains)

  void validate() const;
};

inline const std::vector<std::string>& suite_names();

namespace detail {

inline std::string hit_rule_name(HitRule r) {
  return r == HitRule::BridgeProbability ? "bridge" : "linear";
}

inline Json sde_overrides_json(const SdeOverrides& s) {
  Json out = Json::object();
  if (s.dt) out["dt"] = *s.dt;
  if (s.t_max) out["t_max"] = *s.t_max;
  if (s.hit_rule) out["hit_rule"] = hit_rule_name(*s.hit_rule);
  if (s.adaptive_floor) out["adaptive_floor"] = *s.adaptive_floor;
  if (s.max_dt) out["max_dt"] = *s.max_dt;
  if (s.growth_ratio) out["growth_ratio"] = *s.growth_ratio;
  out["record_path"] = s.record_path;
  return out;
}

inline std::uint64_t json_u64(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) parse_fail(field, "expected a nonnegative integer");
  // A negative count is a bad value, not bad syntax.
  if (!j.is_number_unsigned() && j.get<long long>() < 0) fail(ErrorKind::InvalidParams, field + " must be nonnegative");
  return j.get<std::uint64_t>();
}

inline std::string json_string(const Json& j, const std::string& field) {
  if (!j.is_string()) parse_fail(field, "expected a string");
  return j.get<std::string>();
}

inline SdeOverrides sde_overrides_from_json(const Json& j) {
  if (!j.is_object()) parse_fail("sde", "expected an object");
  SdeOverrides s;
  for (const auto& [key, value] : j.items()) {
    const std::string field = "sde." + key;
    if (key == "dt") s.dt = json_number(value, field);
    else if (key == "t_max") s.t_max = json_number(value, field);
    else if (key == "adaptive_floor") s.adaptive_floor = json_number(value, field);
    else if (key == "max_dt") s.max_dt = json_number(value, field);
    else if (key == "growth_ratio") s.growth_ratio = json_number(value, field);
    else if (key == "record_path") {
      if (!value.is_boolean()) parse_fail(field, "expected true or false");
      s.record_path = value.get<bool>();
    } else if (key == "hit_rule") {
      const std::string name = json_string(value, field);
      if (name == "bridge") s.hit_rule = HitRule::BridgeProbability;
      else if (name == "linear") s.hit_rule = HitRule::LinearInterpolation;
      else parse_fail(field, "expected \"bridge\" or \"linear\"");
    } else {
      parse_fail(field, "unknown field");
    }
  }
  return s;
}

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    fail(ErrorKind::InvalidParams, "unknown suite \"" + suite + "\"");
  }
  if (replicas && *replicas < 1) fail(ErrorKind::InvalidParams, "replicas must be at least 1");
  if (workers < 1) fail(ErrorKind::InvalidParams, "workers must be at least 1");
  sde.apply(SdeConfig{}).validate();
  for (double p : probe_times) {
    if (!(p > 0.0) || !std::isfinite(p)) fail(ErrorKind::InvalidParams, "probe times must be finite and positive");
  }
  const Index n = nu_params ? nu_params->size() : 3;
  const Vector theta = nu_params ? nu_params->theta : Vector::Ones(3);
  for (const LaplaceQuery& q : lambda_grid) {
    if (q.lambda.size() != n) fail(ErrorKind::InvalidParams, "every lambda needs one entry per vertex");
    if (!q.lambda.allFinite() || (q.lambda.array() + theta.array().square() <= 0.0).any()) {
      fail(ErrorKind::InvalidParams, "lambda must satisfy lambda_i + theta_i^2 > 0");
    }
  }
}

/// Canonical form used for the provenance hash. The worker count and the
/// output directory do not change any result, so they are left out.
inline Json config_to_json(const ExperimentConfig& c) {
  Json out = {{"suite", c.suite}, {"seed", c.seed}, {"sde", detail::sde_overrides_json(c.sde)},
              {"export_replicas", c.export_replicas}};
  out["replicas"] = c.replicas ? Json(*c.replicas) : Json(nullptr);
  out["nu_params"] = c.nu_params ? to_json(*c.nu_params) : Json(nullptr);
  Json grid = Json::array();
  for (const auto& q : c.lambda_grid) grid.push_back(detail::vector_json(q.lambda));
  out["lambda_grid"] = std::move(grid);
  out["probe_times"] = c.probe_times;
  return out;
}

inline std::string config_hash(const ExperimentConfig& c) { return fnv1a_hex(config_to_json(c).dump()); }

/// Builds a config from parsed JSON; unknown fields are rejected.
inline ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) detail::parse_fail("config", "expected a JSON object");
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "suite") c.suite = detail::json_string(value, key);
    else if (key == "nu_params") c.nu_params = nu_params_from_json(value);
    else if (key == "sde") c.sde = detail::sde_overrides_from_json(value);
    else if (key == "replicas") c.replicas = detail::json_u64(value, key);
    else if (key == "seed") c.seed = detail::json_u64(value, key);
    else if (key == "workers") c.workers = static_cast<unsigned>(detail::json_u64(value, key));
    else if (key == "export_replicas") c.export_replicas = detail::json_u64(value, key);
    else if (key == "output_dir") c.output_dir = detail::json_string(value, key);
    else if (key == "probe_times") {
      const Vector v = detail::json_vector(value, key);
      c.probe_times.assign(v.data(), v.data() + v.size());
    } else if (key == "lambda_grid") {
      if (!value.is_array()) detail::parse_fail(key, "expected an array of vectors");
      for (std::size_t k = 0; k < value.size(); ++k) {
        c.lambda_grid.push_back({detail::json_vector(value[k], key + "[" + std::to_string(k) + "]")});
      }
    } else {
      detail::parse_fail(key, "unknown field");
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig parse_config_text(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::ParseError,
         "line " + std::to_string(detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) + ": " + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ParseError, "cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

// ---------------------------------------------------------------------------
// Running checks

struct CriterionResult {
  std::string id;
  std::string title;
  std::vector<TestReport> reports;

  bool pass() const {
    return !reports.empty() && std::all_of(reports.begin(), reports.end(), [](const TestReport& r) { return r.pass; });
  }

  /// "k/m checks pass" plus the least comfortable check.
  std::string summary() const {
    std::size_t passed = 0;
    for (const auto& r : reports) passed += r.pass ? 1 : 0;
    std::ostringstream os;
    os << passed << "/" << reports.size() << " checks pass";
    const TestReport* worst = nullptr;
    for (const auto& r : reports) {
      if (!r.p_value) continue;
      if (!worst || *r.p_value < *worst->p_value) worst = &r;
    }
    if (worst) os << "; smallest p = " << format_double(*worst->p_value) << " (" << worst->name << ")";
    return os.str();
  }
};

class RunContext {
 public:
  explicit RunContext(const ExperimentConfig& config)
      : config_(config), provenance_{config_hash(config), config.seed} {}

  const ExperimentConfig& config() const { return config_; }
  const Provenance& provenance() const { return provenance_; }
  unsigned workers() const { return config_.workers; }
  std::size_t replicas_or(std::size_t fallback) const { return config_.replicas.value_or(fallback); }

  std::uint64_t seed_for(std::string_view tag) const {
    // splitmix64 finalizer over seed ^ FNV-1a(tag)
    std::uint64_t z = config_.seed ^ std::stoull(fnv1a_hex(tag), nullptr, 16);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  SdeConfig sde(SdeConfig base, std::string_view tag) const {
    SdeConfig out = config_.sde.apply(std::move(base));
    out.seed = seed_for(tag);
    return out;
  }

  std::ofstream open(std::string_view id, std::string_view file) const {
    const std::filesystem::path dir = config_.output_dir / std::string(id);
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / std::string(file), std::ios::binary);
    if (!out) fail(ErrorKind::InvalidParams, "output directory is not writable: " + dir.string());
    return out;
  }

  void write_json(std::string_view id, std::string_view file, const Json& j) const {
    open(id, file) << j.dump(2) << '\n';
  }

 private:
  ExperimentConfig config_;
  Provenance provenance_;
};

namespace experiment {

// --- parameter sets -------------------------------------------------------

inline NuParams make_params(const Matrix& w, const Vector& theta, const Vector& eta) {
  return NuParams::make(ConductanceNetwork::from_weights(w), theta, eta);
}

inline Matrix complete_graph(Index n) {
  Matrix w = Matrix::Ones(n, n);
  w.diagonal().setZero();
  return w;
}

inline NuParams triangle(double eta = 0.0) {
  return make_params(complete_graph(3), Vector::Ones(3), Vector::Constant(3, eta));
}

inline NuParams path3() {
  Matrix w = Matrix::Zero(3, 3);
  w(0, 1) = w(1, 0) = w(1, 2) = w(2, 1) = 1.0;
  return make_params(w, Vector::Ones(3), Vector::Zero(3));
}

inline NuParams edge(double w12, const Vector& theta, const Vector& eta) {
  Matrix w(2, 2);
  w << 0.0, w12, w12, 0.0;
  return make_params(w, theta, eta);
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// --- random instances ------------------------------------------------------

inline double uniform(RandomStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

/// Connected network: random spanning tree plus extra edges, weights in [0.2, 2].
inline ConductanceNetwork random_network(RandomStream& rng, Index n, bool with_diagonal) {
  Matrix w = Matrix::Zero(n, n);
  for (Index i = 1; i < n; ++i) {
    const auto parent = static_cast<Index>(rng.uniform() * static_cast<double>(i));
    w(i, parent) = w(parent, i) = uniform(rng, 0.2, 2.0);
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (w(i, j) == 0.0 && rng.uniform() < 0.4) w(i, j) = w(j, i) = uniform(rng, 0.2, 2.0);
    }
    if (with_diagonal) w(i, i) = 0.5 * uniform(rng, 0.2, 2.0);
  }
  return ConductanceNetwork::from_weights(w);
}

/// s scaled to `fraction` of the way to the boundary of {K_s > 0}.
inline Vector admissible_times(RandomStream& rng, const Matrix& w, double fraction) {
  Vector s(w.rows());
  for (Index i = 0; i < s.size(); ++i) s[i] = uniform(rng, 0.2, 1.0);
  const Vector root = s.cwiseSqrt();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(root.asDiagonal() * w * root.asDiagonal());
  const double top = eig.eigenvalues().maxCoeff();
  return top > 0.0 ? Vector(fraction / top * s) : s;
}

/// beta with H_beta strictly diagonally dominant.
inline Vector admissible_beta(RandomStream& rng, const Matrix& w) {
  Vector beta(w.rows());
  for (Index i = 0; i < beta.size(); ++i) beta[i] = 0.5 * (w.row(i).sum() + uniform(rng, 0.05, 1.0));
  return beta;
}

// --- sampling helpers -----------------------------------------------------

/// Hitting times T of independent replicas; replica k uses stream (seed, k).
inline std::vector<Vector> hitting_times(const DriftSystem& system, std::size_t n, const SdeConfig& cfg,
                                         unsigned workers) {
  return run_replicas(n, workers, [&](std::size_t k) {
    RandomStream rng(cfg.seed, k);
    return simulate(system, cfg, rng).t_hit.t;
  });
}

inline std::vector<double> column(const std::vector<Vector>& rows, Index i) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const Vector& r : rows) out.push_back(r[i]);
  return out;
}

/// Default Laplace grid: six isotropic scales and four anisotropic points.
inline std::vector<LaplaceQuery> default_lambda_grid(Index n) {
  std::vector<LaplaceQuery> grid;
  for (double c : {0.1, 0.3, 0.6, 1.0, 2.0, 5.0}) grid.push_back({Vector::Constant(n, c)});
  Vector first = Vector::Zero(n);
  first[0] = 1.5;
  Vector alternating(n), ramp(n), last = Vector::Constant(n, 0.2);
  for (Index i = 0; i < n; ++i) {
    alternating[i] = i % 2 == 0 ? 1.0 : 0.2;
    ramp[i] = 0.5 + 1.5 * static_cast<double>(i) / static_cast<double>(std::max<Index>(n - 1, 1));
  }
  last[n - 1] = 3.0;
  for (const Vector& v : {first, alternating, ramp, last}) grid.push_back({v});
  return grid;
}

inline std::string join(const Vector& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) out += (i ? ";" : "") + format_double(v[i]);
  return out;
}

/// Percentile table (q, sample quantile, reference CDF there): a P-P plot.
inline void write_pp_rows(std::ostream& os, std::string_view label, std::vector<double> samples,
                          const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  for (int q = 1; q < 100; ++q) {
    const double x = samples[static_cast<std::size_t>(q * (samples.size() - 1) / 99)];
    os << label << ',' << q << ',' << format_double(x) << ',' << format_double(cdf(x)) << '\n';
  }
}

/// Percentile table of two samples side by side: a Q-Q plot.
inline void write_qq_rows(std::ostream& os, std::string_view label, std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (int q = 1; q < 100; ++q) {
    const double xa = a[static_cast<std::size_t>(q * (a.size() - 1) / 99)];
    const double xb = b[static_cast<std::size_t>(q * (b.size() - 1) / 99)];
    os << label << ',' << q << ',' << format_double(xa) << ',' << format_double(xb) << '\n';
  }
}

inline TestReport threshold_report(std::string name, double value, double bound, std::size_t n) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = value;
  r.n = n;
  r.pass = value < bound;
  r.tolerance = "< " + format_double(bound);
  return r;
}

/// CDF of beta = 1/(2T) when T ~ IG(mu, shape).
inline std::function<double(double)> beta_cdf_from_ig(IgParams ig) {
  return [ig](double b) { return b <= 0.0 ? 0.0 : 1.0 - ig_cdf(ig.mu, ig.shape, 0.5 / b); };
}

}  // namespace experiment

// ---------------------------------------------------------------------------
// The checks, one per acceptance criterion

/// C1: K-factorization, determinant ratio and the two eta~ identities on
/// random instances with n in 1..6.
inline CriterionResult check_algebra(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C1", "algebraic identities", {}};
  RandomStream rng(ctx.seed_for("C1"), 0);
  const std::size_t count = ctx.replicas_or(1000);
  std::ofstream csv = ctx.open("C1", "residuals.csv");
  csv << ctx.provenance().csv_comment() << "instance,n,k_factorization,determinant_ratio,eta_tilde,eta_bilinear\n";
  double worst = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const auto n = static_cast<Index>(1 + std::min(5.0, std::floor(6.0 * rng.uniform())));
    const ConductanceNetwork net = random_network(rng, n, k % 3 == 0);
    const Vector total = admissible_times(rng, net.weights(), uniform(rng, 0.2, 0.8));
    Vector t0 = total;
    for (Index i = 0; i < n; ++i) t0[i] *= uniform(rng, 0.1, 0.9);
    const Vector t1 = total - t0;
    Vector eta(n);
    for (Index i = 0; i < n; ++i) eta[i] = uniform(rng, 0.0, 2.0);
    const AlgebraResiduals r = algebra_residuals(net, {t0}, {t1}, eta);
    worst = std::max(worst, r.max());
    csv << k << ',' << n << ',' << format_double(r.k_factorization) << ',' << format_double(r.determinant_ratio)
        << ',' << format_double(r.eta_tilde) << ',' << format_double(r.eta_bilinear) << '\n';
  }
  out.reports.push_back(threshold_report("max relative residual", worst, 1e-9, count));
  return out;
}

/// C2: one vertex, W = 0. (a) eta = 0: 1/(2T) ~ Gamma(1/2, theta^2);
/// (b) eta = 1: T ~ IG(theta/eta, theta^2).
inline CriterionResult check_one_vertex_laws(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C2", "one-vertex hitting laws", {}};
  const std::size_t n = ctx.replicas_or(100000);
  // With W = 0 the drift is constant, so growing the step away from zero is
  // exact; the Levy tail of case (a) needs the very long horizon.
  SdeConfig base;
  base.dt = 1e-4;
  base.max_dt = 1e12;
  base.t_max = 1e16;
  std::ofstream csv = ctx.open("C2", "pp.csv");
  csv << ctx.provenance().csv_comment() << "law,percentile,sample_quantile,reference_cdf\n";

  const NuParams zero_drift = make_params(Matrix::Zero(1, 1), Vector::Ones(1), Vector::Zero(1));
  const auto t_a = hitting_times(DriftSystem::from(zero_drift), n, ctx.sde(base, "C2a"), ctx.workers());
  std::vector<double> beta;
  for (const Vector& t : t_a) beta.push_back(0.5 / t[0]);
  const auto gamma = [](double x) { return x <= 0.0 ? 0.0 : gamma_cdf(0.5, 1.0, x); };
  out.reports.push_back(ks_one_sample("(a) 1/(2T) vs Gamma(1/2, 1)", beta, gamma));
  write_pp_rows(csv, "gamma", beta, gamma);

  const NuParams unit_drift = make_params(Matrix::Zero(1, 1), Vector::Ones(1), Vector::Ones(1));
  const auto t_b = hitting_times(DriftSystem::from(unit_drift), n, ctx.sde(base, "C2b"), ctx.workers());
  const auto ig = [](double x) { return x <= 0.0 ? 0.0 : ig_cdf(1.0, 1.0, x); };
  out.reports.push_back(ks_one_sample("(b) T vs IG(1, 1)", column(t_b, 0), ig));
  write_pp_rows(csv, "inverse_gaussian", column(t_b, 0), ig);
  return out;
}

/// Parameters of C3/C4/C6b: the configured law, else the unit triangle with eta = 0.
inline NuParams laplace_params(const RunContext& ctx) {
  return ctx.config().nu_params.value_or(experiment::triangle());
}

/// C3: empirical E[exp(-<lambda, beta>)] against the closed form on a lambda grid.
inline CriterionResult check_laplace(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C3", "Laplace transform of beta = 1/(2T)", {}};
  const NuParams params = laplace_params(ctx);
  const std::size_t n = ctx.replicas_or(100000);
  SdeConfig base;
  base.dt = 1e-4;
  const auto samples = sample_beta(params, n, ctx.sde(base, "C3"), ctx.workers());
  std::vector<Vector> betas;
  betas.reserve(samples.size());
  for (const auto& s : samples) betas.push_back(s.beta);
  const auto grid = ctx.config().lambda_grid.empty() ? default_lambda_grid(params.size()) : ctx.config().lambda_grid;
  std::ofstream csv = ctx.open("C3", "laplace.csv");
  csv << ctx.provenance().csv_comment() << "point,lambda,empirical,std_error,closed_form\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const MeanEstimate est = empirical_laplace(betas, grid[k].lambda);
    const double exact = laplace_transform(params, grid[k]);
    out.reports.push_back(standard_error_check("lambda[" + std::to_string(k) + "]", est, exact, n));
    csv << k << ',' << join(grid[k].lambda) << ',' << format_double(est.mean) << ',' << format_double(est.std_error)
        << ',' << format_double(exact) << '\n';
  }
  return out;
}

/// C4: per-vertex KS of 1/(2 beta_i - W_ii) against its inverse Gaussian law.
inline CriterionResult check_marginals(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C4", "inverse Gaussian marginals", {}};
  const NuParams params = laplace_params(ctx);
  const std::size_t n = ctx.replicas_or(20000);
  SdeConfig base;
  base.dt = 1e-4;
  const auto samples = sample_beta(params, n, ctx.sde(base, "C4"), ctx.workers());
  const Matrix& w = params.network.weights();
  const double alpha = bonferroni(kDefaultAlpha, static_cast<std::size_t>(params.size()));
  std::ofstream csv = ctx.open("C4", "pp.csv");
  csv << ctx.provenance().csv_comment() << "vertex,percentile,sample_quantile,reference_cdf\n";
  for (Index i = 0; i < params.size(); ++i) {
    std::vector<double> t;
    for (const auto& s : samples) t.push_back(1.0 / (2.0 * s[i] - w(i, i)));
    const IgParams ig = marginal_ig_params(params, i);
    const auto cdf = [ig](double x) { return x <= 0.0 ? 0.0 : ig_cdf(ig.mu, ig.shape, x); };
    out.reports.push_back(ks_one_sample("vertex " + std::to_string(i), t, cdf, alpha));
    write_pp_rows(csv, std::to_string(i), t, cdf);
  }
  return out;
}

/// C5: on the path 0-1-2 the end potentials beta_0 and beta_2 are independent.
inline CriterionResult check_dependence(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C5", "1-dependence on a path", {}};
  const NuParams params = path3();
  const std::size_t n = ctx.replicas_or(20000);
  SdeConfig base;
  base.dt = 1e-4;
  const auto samples = sample_beta(params, n, ctx.sde(base, "C5"), ctx.workers());
  std::vector<std::pair<double, double>> ends;
  for (const auto& s : samples) ends.emplace_back(s[0], s[2]);
  out.reports.push_back(independence_check("E[e^{-b0-b2}] vs E[e^{-b0}]E[e^{-b2}]", ends, 1.0, 1.0));
  std::ofstream csv = ctx.open("C5", "ends.csv");
  csv << ctx.provenance().csv_comment() << "replica,beta_0,beta_2\n";
  for (std::size_t k = 0; k < std::min(n, ctx.config().export_replicas); ++k) {
    csv << k << ',' << format_double(ends[k].first) << ',' << format_double(ends[k].second) << '\n';
  }
  return out;
}

/// C6a: log density = restricted log density + conditional log density at
/// random support points, n in 2..5.
inline CriterionResult check_chain_rule(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C6a", "restriction/conditioning chain rule", {}};
  RandomStream rng(ctx.seed_for("C6a"), 0);
  const std::size_t count = ctx.replicas_or(1000);
  double worst = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const auto n = static_cast<Index>(2 + k % 4);
    const ConductanceNetwork net = random_network(rng, n, k % 3 == 0);
    Vector theta(n), eta(n);
    for (Index i = 0; i < n; ++i) {
      theta[i] = uniform(rng, 0.3, 2.0);
      eta[i] = uniform(rng, 0.0, 1.5);
    }
    const NuParams p = NuParams::make(net, theta, eta);
    VertexSet u;
    for (Index i = 0; i < n; ++i) {
      if (rng.uniform() < 0.5) u.push_back(i);
    }
    if (u.empty()) u.push_back(0);
    if (static_cast<Index>(u.size()) == n) u.pop_back();
    const VertexSet rest = complement(u, n);
    const Vector beta = admissible_beta(rng, net.weights());
    const double joint = log_density(p, {beta});
    const double marginal = log_density(restricted_params(p, u, true), {restrict(beta, u)});
    const double conditional = log_density(conditional_params(p, u, restrict(beta, u)), {restrict(beta, rest)});
    worst = std::max(worst, std::abs(joint - (marginal + conditional)));
  }
  out.reports.push_back(threshold_report("max |log density gap|", worst, 1e-8, count));
  return out;
}

/// C6b: beta_U sampled from the restricted law has the Laplace transform of
/// the full law at lambda padded with zeros off U.
inline CriterionResult check_restricted_laplace(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C6b", "restricted-sample Laplace transform", {}};
  const NuParams full = laplace_params(ctx);
  if (full.size() < 2) fail(ErrorKind::InvalidParams, "the restriction check needs at least two vertices");
  VertexSet u;
  for (Index i = 0; i + 1 < full.size(); ++i) u.push_back(i);
  const NuParams restricted = restricted_params(full, u, true);
  const std::size_t n = ctx.replicas_or(100000);
  SdeConfig base;
  base.dt = 1e-4;
  const auto samples = sample_beta(restricted, n, ctx.sde(base, "C6b"), ctx.workers());
  std::vector<Vector> betas;
  for (const auto& s : samples) betas.push_back(s.beta);
  std::ofstream csv = ctx.open("C6b", "laplace.csv");
  csv << ctx.provenance().csv_comment() << "point,lambda_u,empirical,std_error,full_law_padded\n";
  const auto grid = default_lambda_grid(static_cast<Index>(u.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Vector padded = Vector::Zero(full.size());
    padded(u) = grid[k].lambda;
    const MeanEstimate est = empirical_laplace(betas, grid[k].lambda);
    const double exact = laplace_transform(full, {padded});
    out.reports.push_back(standard_error_check("lambda_U[" + std::to_string(k) + "]", est, exact, n));
    csv << k << ',' << join(grid[k].lambda) << ',' << format_double(est.mean) << ',' << format_double(est.std_error)
        << ',' << format_double(exact) << '\n';
  }
  return out;
}

/// C7a/C7b: the Bessel bridge kernel integrates to one, and the sampler's
/// marginal matches it.
inline CriterionResult check_bessel_kernel(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C7ab", "Bessel bridge kernel and sampler", {}};
  RandomStream rng(ctx.seed_for("C7a"), 0);
  boost::math::quadrature::exp_sinh<double> integrator;
  double worst = 0.0;
  constexpr int kCases = 50;
  for (int k = 0; k < kCases; ++k) {
    const BridgeParams p{uniform(rng, 0.2, 3.0), uniform(rng, 0.1, 5.0)};
    const double t = uniform(rng, 0.01, 0.99) * p.t_end;
    const double mass = integrator.integrate([&](double y) { return bridge_density(p, t, y); }, 1e-13);
    worst = std::max(worst, std::abs(mass - 1.0));
  }
  out.reports.push_back(threshold_report("(a) max |kernel mass - 1|", worst, 1e-8, kCases));

  const std::size_t n = ctx.replicas_or(10000);
  const BridgeParams p{1.0, 1.5};
  std::ofstream csv = ctx.open("C7ab", "pp.csv");
  csv << ctx.provenance().csv_comment() << "time,percentile,sample_quantile,kernel_cdf\n";
  const std::vector<double> grid{0.3, 0.75, 1.2};
  const std::uint64_t seed = ctx.seed_for("C7b");
  const auto paths = run_replicas(n, ctx.workers(), [&](std::size_t k) {
    RandomStream r(seed, k);
    return sample_bridge(p, grid, r);
  });
  const double alpha = kDefaultAlpha;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> x;
    for (const auto& path : paths) x.push_back(path[g]);
    const double t = grid[g];
    const auto cdf = [&](double y) { return bridge_cdf(p, t, y); };
    out.reports.push_back(ks_one_sample("(b) sampler at t=" + format_double(t), x, cdf, alpha));
    write_pp_rows(csv, format_double(t), x, cdf);
  }
  return out;
}

/// C7c: on an edge, X_i(t) from the Bessel-bridge mixture and from the S.D.E.
/// agree in law.
inline CriterionResult check_mixture(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C7c", "Bessel-bridge mixture vs S.D.E.", {}};
  const NuParams params = edge(1.0, vec({1.0, 0.7}), vec({0.2, 0.0}));
  const std::size_t n = ctx.replicas_or(10000);
  const double t = 0.3;
  SdeConfig base;
  base.dt = 1e-4;
  const auto bundles = sample_mixture(params, n, {{t}, {t}}, ctx.sde(base, "C7c-mixture"), ctx.workers());
  SdeConfig direct = ctx.sde(base, "C7c-sde");
  direct.probe_times = {t};
  const DriftSystem system = DriftSystem::from(params);
  const auto states = run_replicas(n, ctx.workers(), [&](std::size_t k) {
    RandomStream rng(direct.seed, k);
    return simulate(system, direct, rng).probes.front().x;
  });
  std::ofstream csv = ctx.open("C7c", "qq.csv");
  csv << ctx.provenance().csv_comment() << "vertex,percentile,mixture_quantile,sde_quantile\n";
  for (Index i = 0; i < params.size(); ++i) {
    std::vector<double> a, b;
    for (const auto& bundle : bundles) a.push_back(bundle.paths[static_cast<std::size_t>(i)][0]);
    for (const auto& x : states) b.push_back(x[i]);
    out.reports.push_back(ks_two_sample("X_" + std::to_string(i) + "(" + format_double(t) + ")", a, b));
    write_qq_rows(csv, std::to_string(i), a, b);
  }
  return out;
}

/// C8: residual hitting times after a (multi)stopping time against fresh runs
/// of the deformed system from an independent batch of stopped states.
inline CriterionResult check_markov(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C8", "Markov and strong Markov restarts", {}};
  const NuParams params = edge(1.0, vec({1.0, 0.8}), vec({0.5, 0.3}));
  const std::size_t n = ctx.replicas_or(10000);
  const Vector t0 = vec({0.05, 0.15});
  const Vector levels = vec({0.5, 0.4});
  const DriftSystem system = DriftSystem::from(params);
  std::ofstream csv = ctx.open("C8", "qq.csv");
  csv << ctx.provenance().csv_comment() << "rule,vertex,percentile,residual_quantile,fresh_quantile\n";

  for (const bool level_rule : {false, true}) {
    const std::string rule = level_rule ? "level" : "fixed";
    SdeConfig base;
    base.dt = 1e-4;
    SdeConfig cfg = ctx.sde(base, "C8-" + rule);
    if (level_rule) cfg.record_path = true;
    else cfg.probe_times = {t0[0], t0[1]};
    const auto stop = [&](const PathRecord& rec) {
      return level_rule ? shift_at_multistopping(rec, LevelCrossing{levels}) : shift_state(rec, {t0});
    };
    // Batch A (streams (seed, k)): residual times T_i - t0_i of the surviving coordinates.
    const auto residual = run_replicas(n, ctx.workers(), [&](std::size_t k) {
      RandomStream rng(cfg.seed, k);
      const PathRecord rec = simulate(system, cfg, rng);
      const ShiftResult s = stop(rec);
      Vector r = Vector::Constant(2, -1.0);
      for (Index i : s.surviving) r[i] = rec.t_hit[i] - s.t0[i];
      return r;
    });
    // Batch B (streams (seed, n + k)): stop, then restart the deformed system on lane 1.
    SdeConfig fresh_cfg = cfg;
    fresh_cfg.record_path = false;
    fresh_cfg.probe_times.clear();
    fresh_cfg.t_max.reset();
    const auto fresh = run_replicas(n, ctx.workers(), [&](std::size_t k) {
      RandomStream rng(cfg.seed, n + k);
      const ShiftResult s = stop(simulate(system, cfg, rng));
      Vector r = Vector::Constant(2, -1.0);
      if (s.surviving.empty()) return r;
      RandomStream restart(cfg.seed, n + k, 1);
      const PathRecord again = simulate(s.restarted(), fresh_cfg, restart);
      for (Index i : s.surviving) r[i] = again.t_hit[i];
      return r;
    });
    for (Index i = 0; i < 2; ++i) {
      std::vector<double> a, b;
      for (const auto& r : residual) if (r[i] >= 0.0) a.push_back(r[i]);
      for (const auto& r : fresh) if (r[i] >= 0.0) b.push_back(r[i]);
      out.reports.push_back(ks_two_sample(rule + " rule, vertex " + std::to_string(i), a, b));
      write_qq_rows(csv, rule + "," + std::to_string(i), a, b);
    }
  }
  return out;
}

/// C9: E[dP-bar/dP] = 1 with T_i independent driftless one-vertex hitting
/// times, T_i = theta_i^2 / Z_i^2. eta > 0 keeps the weight square integrable:
/// with eta = 0 the second moment diverges logarithmically at det K_T -> 0.
inline CriterionResult check_radon_nikodym(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C9", "Radon-Nikodym weight normalization", {}};
  const std::size_t n = ctx.replicas_or(400000);
  const std::vector<std::pair<std::string, NuParams>> cases = {
      {"edge", edge(1.0, vec({1.0, 0.8}), vec({0.5, 0.3}))},
      {"triangle", make_params(complete_graph(3), vec({1.0, 0.7, 1.2}), vec({0.4, 0.3, 0.5}))},
  };
  std::ofstream csv = ctx.open("C9", "weights.csv");
  csv << ctx.provenance().csv_comment() << "case,replicas,mean,std_error\n";
  for (const auto& [name, params] : cases) {
    const std::uint64_t seed = ctx.seed_for("C9-" + name);
    const auto weights = run_replicas(n, ctx.workers(), [&](std::size_t k) {
      RandomStream rng(seed, k);
      Vector t(params.size());
      for (Index i = 0; i < t.size(); ++i) {
        const double z = rng.normal();
        t[i] = params.theta[i] * params.theta[i] / (z * z);
      }
      return radon_nikodym_weight(params, {t});
    });
    const MeanEstimate est = mean_and_error(weights);
    out.reports.push_back(standard_error_check(name, est, 1.0, n));
    csv << name << ',' << n << ',' << format_double(est.mean) << ',' << format_double(est.std_error) << '\n';
  }
  return out;
}

/// C10: on the unit triangle from delta = 0 up to t = 200, the VRJP and the
/// two-stage mixture agree on occupation fractions and visit counts. On a
/// separate long run (t = 5000) N_i / l_i matches the law of beta_i on
/// U = V \ {delta}. At t = 200 the Poisson noise in N_i (l_i is about 57)
/// still shifts the KS distance by about 0.01, so the t = 200 estimates are
/// exported for plotting but not tested.
inline CriterionResult check_vrjp(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C10", "VRJP as a mixture of Markov jump processes", {}};
  const NuParams params = triangle();
  const Index delta = 0;
  const double horizon = 200.0;
  const std::size_t n = ctx.replicas_or(10000);
  SdeConfig base;
  base.dt = 1e-4;
  const auto direct = sample_vrjp(params.network, params.theta, delta, horizon, n, ctx.seed_for("C10-vrjp"),
                                  ctx.workers());
  const auto mixture = sample_vrjp_mixture(params.network, params.theta, delta, horizon, n,
                                           ctx.sde(base, "C10-mixture"), ctx.workers());
  std::ofstream qq = ctx.open("C10", "qq.csv");
  qq << ctx.provenance().csv_comment() << "functional,percentile,vrjp_quantile,mixture_quantile\n";
  for (Index i = 0; i < params.size(); ++i) {
    std::vector<double> a, b, na, nb;
    for (const auto& r : direct) {
      a.push_back(r.local_times[i] / horizon);
      na.push_back(static_cast<double>(r.jump_counts[static_cast<std::size_t>(i)]));
    }
    for (const auto& r : mixture) {
      b.push_back(r.local_times[i] / horizon);
      nb.push_back(static_cast<double>(r.jump_counts[static_cast<std::size_t>(i)]));
    }
    const std::string v = std::to_string(i);
    out.reports.push_back(ks_two_sample("occupation l_" + v + "/t", a, b));
    out.reports.push_back(ks_two_sample("visits N_" + v, na, nb));
    write_qq_rows(qq, "occupation_" + v, a, b);
    write_qq_rows(qq, "visits_" + v, na, nb);
  }
  const VertexSet u = complement({delta}, params.size());
  const NuParams on_u = restricted_params(params, u, true);
  const double long_horizon = 5000.0;
  const auto long_run = sample_vrjp(params.network, params.theta, delta, long_horizon, n,
                                    ctx.seed_for("C10-long"), ctx.workers());
  std::ofstream pp = ctx.open("C10", "empirical_beta_pp.csv");
  pp << ctx.provenance().csv_comment() << "horizon,vertex,percentile,sample_quantile,reference_cdf\n";
  const auto estimates = [&](const std::vector<VrjpRecord>& records, Index i) {
    std::vector<double> out;
    for (const auto& r : records) {
      if (const auto b = empirical_beta(r)[static_cast<std::size_t>(i)]) out.push_back(*b);
    }
    return out;
  };
  for (std::size_t k = 0; k < u.size(); ++k) {
    const std::string v = std::to_string(u[k]);
    const auto cdf = beta_cdf_from_ig(marginal_ig_params(on_u, static_cast<Index>(k)));
    const auto settled = estimates(long_run, u[k]);
    out.reports.push_back(ks_one_sample("N_" + v + "/l_" + v + " at t=" + format_double(long_horizon) +
                                            " vs beta law",
                                        settled, cdf));
    write_pp_rows(pp, format_double(long_horizon) + "," + v, settled, cdf);
    write_pp_rows(pp, format_double(horizon) + "," + v, estimates(direct, u[k]), cdf);
  }
  const std::size_t keep = std::min(n, ctx.config().export_replicas);
  const std::vector<VrjpRecord> head_direct(direct.begin(), direct.begin() + static_cast<std::ptrdiff_t>(keep));
  const std::vector<VrjpRecord> head_mixture(mixture.begin(), mixture.begin() + static_cast<std::ptrdiff_t>(keep));
  auto jumps = ctx.open("C10", "vrjp_jumps.csv");
  write_vrjp_csv(jumps, head_direct, ctx.provenance());
  auto mixture_jumps = ctx.open("C10", "mixture_jumps.csv");
  write_vrjp_csv(mixture_jumps, head_mixture, ctx.provenance());
  ctx.write_json("C10", "vrjp_summary.json", vrjp_summary_json(direct, ctx.provenance()));
  ctx.write_json("C10", "mixture_summary.json", vrjp_summary_json(mixture, ctx.provenance()));
  return out;
}

/// C11: psi is a martingale started at theta with quadratic covariation
/// H^{-1}_{1/(2(t ^ T))}.
inline CriterionResult check_psi_martingale(const RunContext& ctx) {
  using namespace experiment;
  CriterionResult out{"C11", "psi martingale and its bracket", {}};
  const NuParams params = triangle(1.0);
  const Index dim = params.size();
  const std::size_t n = ctx.replicas_or(10000);
  std::vector<double> probes = ctx.config().probe_times.empty() ? std::vector<double>{0.05, 0.1, 0.2}
                                                                 : ctx.config().probe_times;
  std::sort(probes.begin(), probes.end());
  const double bracket_time = probes[probes.size() / 2];
  SdeConfig base;
  base.dt = 1e-4;
  SdeConfig cfg = ctx.sde(base, "C11");
  cfg.probe_times = probes;
  cfg.record_path = true;
  struct Draw {
    std::vector<Vector> psi;
    Matrix bracket_gap;
  };
  const DriftSystem system = DriftSystem::from(params);
  const auto draws = run_replicas(n, ctx.workers(), [&](std::size_t k) {
    RandomStream rng(cfg.seed, k);
    const PathRecord rec = simulate(system, cfg, rng);
    Draw d;
    for (double t : probes) d.psi.push_back(rec.probe(t)->psi);
    const QuadraticVariationReport qv = quadratic_variation_residual(rec, bracket_time);
    d.bracket_gap = qv.empirical - qv.expected;
    return d;
  });
  std::ofstream csv = ctx.open("C11", "moments.csv");
  csv << ctx.provenance().csv_comment() << "quantity,time,i,j,mean,std_error,expected\n";
  for (std::size_t p = 0; p < probes.size(); ++p) {
    for (Index i = 0; i < dim; ++i) {
      std::vector<double> v;
      for (const auto& d : draws) v.push_back(d.psi[p][i]);
      const MeanEstimate est = mean_and_error(v);
      out.reports.push_back(standard_error_check(
          "E[psi_" + std::to_string(i) + "(" + format_double(probes[p]) + ")]", est, params.theta[i], n));
      csv << "psi," << format_double(probes[p]) << ',' << i << ",," << format_double(est.mean) << ','
          << format_double(est.std_error) << ',' << format_double(params.theta[i]) << '\n';
    }
  }
  for (Index i = 0; i < dim; ++i) {
    for (Index j = i; j < dim; ++j) {
      std::vector<double> v;
      for (const auto& d : draws) v.push_back(d.bracket_gap(i, j));
      const MeanEstimate est = mean_and_error(v);
      out.reports.push_back(standard_error_check("<psi_" + std::to_string(i) + ",psi_" + std::to_string(j) + ">(" +
                                                     format_double(bracket_time) + ") - H^{-1}",
                                                 est, 0.0, n, 5.0));
      csv << "bracket_gap," << format_double(bracket_time) << ',' << i << ',' << j << ',' << format_double(est.mean)
          << ',' << format_double(est.std_error) << ",0\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Suites

using CheckFn = CriterionResult (*)(const RunContext&);

struct SuiteSpec {
  std::string name;
  std::vector<CheckFn> checks;
};

inline const std::vector<SuiteSpec>& suite_table() {
  static const std::vector<SuiteSpec> table = {
      {"algebra", {check_algebra, check_chain_rule}},
      {"verify-marginals", {check_one_vertex_laws, check_marginals}},
      {"verify-laplace", {check_laplace, check_restricted_laplace, check_radon_nikodym}},
      {"verify-dependence", {check_dependence}},
      {"verify-markov", {check_markov, check_psi_martingale}},
      {"verify-mixture", {check_mixture}},
      {"bessel-check", {check_bessel_kernel}},
      {"vrjp-compare", {check_vrjp}},
      {"sample-beta", {}},
  };
  return table;
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& s : suite_table()) out.push_back(s.name);
    out.push_back("all");
    return out;
  }();
  return names;
}

/// beta samples of the configured law (default: unit triangle, eta = 0), plus
/// the first export_replicas paths when the config asks for them.
inline void write_beta_samples(const RunContext& ctx) {
  const NuParams params = laplace_params(ctx);
  const std::size_t n = ctx.replicas_or(1000);
  SdeConfig base;
  base.dt = 1e-4;
  const SdeConfig cfg = ctx.sde(base, "sample-beta");
  auto csv = ctx.open("sample-beta", "beta.csv");
  write_beta_csv(csv, sample_beta(params, n, cfg, ctx.workers()), ctx.provenance());
  if (!ctx.config().sde.record_path) return;
  SdeConfig with_path = cfg;
  with_path.record_path = true;
  const DriftSystem system = DriftSystem::from(params);
  const auto records = run_replicas(std::min(n, ctx.config().export_replicas), ctx.workers(), [&](std::size_t k) {
    RandomStream rng(with_path.seed, k);
    return simulate(system, with_path, rng);
  });
  auto paths = ctx.open("sample-beta", "paths.csv");
  write_paths_csv(paths, records, ctx.provenance());
  ctx.write_json("sample-beta", "t_hit.json", hitting_times_json(records, ctx.provenance()));
}

inline std::vector<CheckFn> checks_for(const std::string& suite) {
  std::vector<CheckFn> out;
  for (const auto& s : suite_table()) {
    if (suite == "all" || suite == s.name) out.insert(out.end(), s.checks.begin(), s.checks.end());
  }
  return out;
}

/// Exit codes of run_suite and the CLI.
enum ExitCode : int { kExitPass = 0, kExitFailure = 1, kExitUsage = 2, kExitNumerical = 3 };

inline int exit_code_for(ErrorKind kind) {
  if (is_numerical_abort(kind)) return kExitNumerical;
  if (kind == ErrorKind::ParseError || kind == ErrorKind::InvalidParams) return kExitUsage;
  return kExitFailure;
}

/// Runs every check of config.suite, writes per-check reports.jsonl and a
/// summary.json, and prints one line per check to `log`. Returns 0 iff every
/// check passes; module errors become a JSON diagnostic on `err`.
inline int run_suite(const ExperimentConfig& config, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  try {
    config.validate();
    const RunContext ctx(config);
    std::filesystem::create_directories(config.output_dir);
    if (config.suite == "sample-beta" || config.suite == "all") write_beta_samples(ctx);
    Json summary = {{"provenance", ctx.provenance().to_json()}, {"suite", config.suite}, {"criteria", Json::array()}};
    bool all_pass = true;
    for (CheckFn check : checks_for(config.suite)) {
      const CriterionResult r = check(ctx);
      auto jsonl = ctx.open(r.id, "reports.jsonl");
      write_reports_jsonl(jsonl, r.reports, ctx.provenance());
      log << (r.pass() ? "PASS " : "FAIL ") << r.id << "  " << r.title << ": " << r.summary() << std::endl;
      summary["criteria"].push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass()}, {"checks", r.reports.size()}});
      all_pass = all_pass && r.pass();
    }
    summary["pass"] = all_pass;
    std::ofstream(config.output_dir / "summary.json", std::ios::binary) << summary.dump(2) << '\n';
    return all_pass ? kExitPass : kExitFailure;
  } catch (const Error& e) {
    err << Json{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}}.dump() << std::endl;
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << Json{{"error", "IoError"}, {"message", e.what()}}.dump() << std::endl;
    return kExitUsage;
  }
}

}  // namespace idrift
