#pragma once

// JSON and CSV artifacts. Every file carries the provenance triple (config
// hash, seed, toolkit version) and nothing time-dependent, so reruns with the
// same inputs are byte-identical.

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "idrift/nu_distribution.hpp"
#include "idrift/sde.hpp"
#include "idrift/stats.hpp"
#include "idrift/vrjp.hpp"

namespace idrift {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

using Json = nlohmann::json;

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k, h >>= 4) out[static_cast<std::size_t>(k)] = kDigits[h & 0xf];
  return out;
}

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version{kToolkitVersion};

  Json to_json() const { return {{"config_hash", config_hash}, {"seed", seed}, {"version", version}}; }
  std::string csv_comment() const {
    return "# config_hash=" + config_hash + " seed=" + std::to_string(seed) + " version=" + version + "\n";
  }
};

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& field, const std::string& what) {
  fail(ErrorKind::ParseError, field + ": " + what);
}

inline double json_number(const Json& j, const std::string& field) {
  if (!j.is_number()) parse_fail(field, "expected a number, got " + std::string(j.type_name()));
  return j.get<double>();
}

inline Vector json_vector(const Json& j, const std::string& field) {
  if (!j.is_array()) parse_fail(field, "expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    v[static_cast<Index>(k)] = json_number(j[k], field + "[" + std::to_string(k) + "]");
  }
  return v;
}

inline Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

// nlohmann writes non-finite doubles as null; keep them readable instead.
inline Json number_or_string(double v) { return std::isfinite(v) ? Json(v) : Json(format_double(v)); }

}  // namespace detail

inline Json to_json(const ConductanceNetwork& net) {
  Json rows = Json::array();
  for (Index i = 0; i < net.size(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < net.size(); ++j) row.push_back(net.weight(i, j));
    rows.push_back(std::move(row));
  }
  return {{"n", net.size()}, {"weights", std::move(rows)}};
}

/// {"n": int, "weights": [[...]]}. Structural problems are ParseErrors; bad
/// values (negative, asymmetric, disconnected) keep their network error kinds.
inline ConductanceNetwork network_from_json(const Json& j) {
  if (!j.is_object()) detail::parse_fail("network", "expected an object");
  if (!j.contains("n") || !j["n"].is_number_integer()) detail::parse_fail("network.n", "expected an integer");
  if (!j.contains("weights") || !j["weights"].is_array()) detail::parse_fail("network.weights", "expected an array of rows");
  const auto n = j["n"].get<long long>();
  if (n < 1) detail::parse_fail("network.n", "must be at least 1");
  const Json& rows = j["weights"];
  if (static_cast<long long>(rows.size()) != n) detail::parse_fail("network.weights", "needs n rows");
  Matrix w(n, n);
  for (Index i = 0; i < n; ++i) {
    const Json& row = rows[static_cast<std::size_t>(i)];
    const std::string field = "network.weights[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<long long>(row.size()) != n) detail::parse_fail(field, "needs n entries");
    for (Index k = 0; k < n; ++k) {
      w(i, k) = detail::json_number(row[static_cast<std::size_t>(k)], field + "[" + std::to_string(k) + "]");
    }
  }
  return build_network(n, w);
}

inline Json to_json(const NuParams& p) {
  return {{"network", to_json(p.network)}, {"theta", detail::vector_json(p.theta)}, {"eta", detail::vector_json(p.eta)}};
}

/// {"network": ..., "theta": [...], "eta": [...]}; eta defaults to zero.
inline NuParams nu_params_from_json(const Json& j) {
  if (!j.is_object()) detail::parse_fail("nu_params", "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "network" && key != "theta" && key != "eta") detail::parse_fail("nu_params." + key, "unknown field");
  }
  if (!j.contains("network")) detail::parse_fail("nu_params.network", "missing");
  if (!j.contains("theta")) detail::parse_fail("nu_params.theta", "missing");
  ConductanceNetwork net = network_from_json(j["network"]);
  Vector theta = detail::json_vector(j["theta"], "nu_params.theta");
  Vector eta = j.contains("eta") ? detail::json_vector(j["eta"], "nu_params.eta") : Vector::Zero(net.size());
  return NuParams::make(std::move(net), std::move(theta), std::move(eta));
}

inline Json to_json(const TestReport& r) {
  Json out = {{"name", r.name}, {"statistic", detail::number_or_string(r.statistic)}, {"n", r.n},
              {"pass", r.pass}, {"tolerance", r.tolerance}};
  out["p_value"] = r.p_value ? Json(*r.p_value) : Json(nullptr);
  return out;
}

/// One JSON object per line, each tagged with the provenance.
inline void write_reports_jsonl(std::ostream& os, const std::vector<TestReport>& reports, const Provenance& prov) {
  for (const TestReport& r : reports) {
    Json line = to_json(r);
    line["provenance"] = prov.to_json();
    os << line.dump() << '\n';
  }
}

/// replica,vertex,beta
inline void write_beta_csv(std::ostream& os, const std::vector<PotentialVector>& samples, const Provenance& prov) {
  os << prov.csv_comment() << "replica,vertex,beta\n";
  for (std::size_t k = 0; k < samples.size(); ++k) {
    for (Index i = 0; i < samples[k].size(); ++i) {
      os << k << ',' << i << ',' << format_double(samples[k][i]) << '\n';
    }
  }
}

/// replica,vertex,t,x,psi over the stored grid of each record.
inline void write_paths_csv(std::ostream& os, const std::vector<PathRecord>& records, const Provenance& prov) {
  os << prov.csv_comment() << "replica,vertex,t,x,psi\n";
  for (std::size_t k = 0; k < records.size(); ++k) {
    const PathRecord& rec = records[k];
    for (Index i = 0; i < rec.size(); ++i) {
      for (std::size_t s = 0; s < rec.grid.size(); ++s) {
        os << k << ',' << i << ',' << format_double(rec.grid[s]) << ',' << format_double(rec.x_at(s, i)) << ','
           << format_double(rec.psi_at(s, i)) << '\n';
      }
    }
  }
}

/// Sidecar of write_paths_csv: {"provenance": ..., "t_hit": [[T_0, T_1, ...] per replica]}.
inline Json hitting_times_json(const std::vector<PathRecord>& records, const Provenance& prov) {
  Json rows = Json::array();
  for (const PathRecord& rec : records) {
    Json row = Json::array();
    for (Index i = 0; i < rec.size(); ++i) row.push_back(detail::number_or_string(rec.t_hit[i]));
    rows.push_back(std::move(row));
  }
  return {{"provenance", prov.to_json()}, {"t_hit", std::move(rows)}};
}

/// replica,jump,time,vertex; jump 0 is the start at time 0.
inline void write_vrjp_csv(std::ostream& os, const std::vector<VrjpRecord>& records, const Provenance& prov) {
  os << prov.csv_comment() << "replica,jump,time,vertex\n";
  for (std::size_t k = 0; k < records.size(); ++k) {
    const VrjpRecord& rec = records[k];
    for (std::size_t m = 0; m < rec.visited.size(); ++m) {
      const double time = m == 0 ? 0.0 : rec.jump_times[m - 1];
      os << k << ',' << m << ',' << format_double(time) << ',' << rec.visited[m] << '\n';
    }
  }
}

/// Per replica local times and visit counts at the horizon.
inline Json vrjp_summary_json(const std::vector<VrjpRecord>& records, const Provenance& prov) {
  Json rows = Json::array();
  for (const VrjpRecord& rec : records) {
    rows.push_back({{"horizon", rec.horizon},
                    {"local_times", detail::vector_json(rec.local_times)},
                    {"visits", rec.jump_counts}});
  }
  return {{"provenance", prov.to_json()}, {"replicas", std::move(rows)}};
}

}  // namespace idrift
