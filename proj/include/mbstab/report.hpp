#ifndef MBSTAB_REPORT_HPP
#define MBSTAB_REPORT_HPP

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mbstab/criteria.hpp"
#include "mbstab/growth.hpp"
#include "mbstab/timedomain.hpp"

namespace mbstab {

inline constexpr const char* kVersion = "0.1.0";

/// Rectangular (R, Q) grid with all other parameters fixed.
struct SweepSpec {
  std::vector<double> R_values;
  std::vector<double> Q_values;
  Params fixed;  // R, Q ignored; P_theta, tau, L1, L2, bc used
  int N = 96;
  double a_max = 8.0;
  int workers = 1;
};

struct SweepRow {
  double R = 0.0;
  double Q = 0.0;
  std::string classification;
  double R0 = kNaN;
  double lambda0 = kNaN;
  double upsilon1 = kNaN;
  double upsilon2 = kNaN;
  std::optional<double> lambda_star;
  double margin_exact = kNaN;
  double margin_sufficient = kNaN;
  std::string error;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::map<std::string, std::string> params;  // resolved reproducibility set
  std::string version = kVersion;
  double wall_time_seconds = 0.0;
};

namespace detail {

inline std::string fmt17(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string sanitize_cell(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace detail

inline std::map<std::string, std::string> resolved_sweep_params(const SweepSpec& spec) {
  std::map<std::string, std::string> m;
  m["P_theta"] = detail::fmt17(spec.fixed.P_theta);
  m["tau"] = detail::fmt17(spec.fixed.tau);
  m["L1"] = detail::fmt17(spec.fixed.L1);
  m["L2"] = detail::fmt17(spec.fixed.L2);
  m["bc"] = to_string(spec.fixed.bc);
  m["N"] = std::to_string(spec.N);
  m["a_max"] = detail::fmt17(spec.a_max);
  m["R_count"] = std::to_string(spec.R_values.size());
  m["Q_count"] = std::to_string(spec.Q_values.size());
  return m;
}

/// Classifies every (R, Q) cell of the grid on a worker pool. The critical
/// quantities R0 and xi do not depend on (R, Q, tau) and are computed once.
/// Per-cell failures are recorded in the row; the sweep always completes.
/// Output is deterministic and independent of the worker count.
inline SweepReport run_sweep(const SweepSpec& spec) {
  if (spec.R_values.empty() || spec.Q_values.empty())
    throw std::invalid_argument("run_sweep: empty R or Q value list");
  for (double r : spec.R_values)
    if (!(r > 0.0)) throw std::invalid_argument("run_sweep: R values must be positive");
  for (double q : spec.Q_values)
    if (!(q >= 0.0)) throw std::invalid_argument("run_sweep: Q values must be nonnegative");
  Params base = spec.fixed;
  base.R = spec.R_values.front();
  base.Q = 0.0;
  validate_params(base);
  if (spec.workers < 1) throw std::invalid_argument("run_sweep: workers must be >= 1");

  const auto t0 = std::chrono::steady_clock::now();
  auto cache = std::make_shared<FormsCache>();
  const CriticalData cd = compute_critical_data(base, spec.N, spec.a_max, cache);

  std::vector<std::pair<double, double>> cells;
  std::vector<double> rs = spec.R_values, qs = spec.Q_values;
  std::sort(rs.begin(), rs.end());
  std::sort(qs.begin(), qs.end());
  for (double r : rs)
    for (double q : qs) cells.emplace_back(r, q);

  std::vector<SweepRow> rows(cells.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      SweepRow& row = rows[i];
      row.R = cells[i].first;
      row.Q = cells[i].second;
      try {
        Params p = spec.fixed;
        p.R = row.R;
        p.Q = row.Q;
        const Classification c = classify(p, spec.N, spec.a_max, cache, cd);
        row.classification = to_string(c.verdict);
        row.R0 = c.R0;
        row.lambda0 = c.lambda0;
        row.upsilon1 = c.upsilon1;
        row.upsilon2 = c.upsilon2;
        row.lambda_star = c.lambda_star;
        row.margin_exact = c.instab.margin_exact;
        row.margin_sufficient = c.instab.margin_sufficient;
      } catch (const std::exception& e) {
        row.classification = "error";
        row.error = detail::sanitize_cell(e.what());
      }
    }
  };
  if (spec.workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < spec.workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  SweepReport report;
  report.rows = std::move(rows);
  report.params = resolved_sweep_params(spec);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// ---------------------------------------------------------------------------
// serialization

inline std::string to_csv(const SweepReport& r) {
  std::ostringstream os;
  os << "# mbstab sweep v" << r.version << "\n";
  for (const auto& [k, v] : r.params) os << "# " << k << "=" << v << "\n";
  os << "R,Q,classification,R0,lambda0,upsilon1,upsilon2,lambda_star,"
        "margin_exact,margin_sufficient,error\n";
  for (const auto& row : r.rows) {
    os << detail::fmt17(row.R) << ',' << detail::fmt17(row.Q) << ','
       << detail::sanitize_cell(row.classification) << ',' << detail::fmt17(row.R0) << ','
       << detail::fmt17(row.lambda0) << ',' << detail::fmt17(row.upsilon1) << ','
       << detail::fmt17(row.upsilon2) << ','
       << (row.lambda_star ? detail::fmt17(*row.lambda_star) : "") << ','
       << detail::fmt17(row.margin_exact) << ',' << detail::fmt17(row.margin_sufficient)
       << ',' << row.error << "\n";
  }
  return os.str();
}

namespace detail {

inline nlohmann::json num_or_null(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

}  // namespace detail

inline nlohmann::json to_json(const SweepReport& r) {
  nlohmann::json j;
  j["metadata"] = {{"version", r.version},
                   {"params", r.params},
                   {"wall_time_seconds", r.wall_time_seconds}};
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json jr;
    jr["R"] = row.R;
    jr["Q"] = row.Q;
    jr["classification"] = row.classification;
    jr["R0"] = detail::num_or_null(row.R0);
    jr["lambda0"] = detail::num_or_null(row.lambda0);
    jr["upsilon1"] = detail::num_or_null(row.upsilon1);
    jr["upsilon2"] = detail::num_or_null(row.upsilon2);
    jr["lambda_star"] = row.lambda_star ? nlohmann::json(*row.lambda_star) : nullptr;
    jr["margin_exact"] = detail::num_or_null(row.margin_exact);
    jr["margin_sufficient"] = detail::num_or_null(row.margin_sufficient);
    jr["error"] = row.error;
    j["rows"].push_back(std::move(jr));
  }
  return j;
}

inline SweepReport sweep_from_json(const nlohmann::json& j) {
  SweepReport r;
  r.version = j.at("metadata").at("version").get<std::string>();
  r.params = j.at("metadata").at("params").get<std::map<std::string, std::string>>();
  r.wall_time_seconds = j.at("metadata").at("wall_time_seconds").get<double>();
  auto num = [](const nlohmann::json& v) {
    if (v.is_null()) return kNaN;
    if (v.is_string()) return v.get<std::string>() == "inf" ? kInf : -kInf;
    return v.get<double>();
  };
  for (const auto& jr : j.at("rows")) {
    SweepRow row;
    row.R = jr.at("R").get<double>();
    row.Q = jr.at("Q").get<double>();
    row.classification = jr.at("classification").get<std::string>();
    row.R0 = num(jr.at("R0"));
    row.lambda0 = num(jr.at("lambda0"));
    row.upsilon1 = num(jr.at("upsilon1"));
    row.upsilon2 = num(jr.at("upsilon2"));
    if (!jr.at("lambda_star").is_null()) row.lambda_star = jr.at("lambda_star").get<double>();
    row.margin_exact = num(jr.at("margin_exact"));
    row.margin_sufficient = num(jr.at("margin_sufficient"));
    row.error = jr.at("error").get<std::string>();
    r.rows.push_back(std::move(row));
  }
  return r;
}

inline std::string to_csv(const EnergyTrace& tr, const std::map<std::string, std::string>& params = {}) {
  std::ostringstream os;
  os << "# mbstab trace v" << kVersion << "\n";
  for (const auto& [k, v] : params) os << "# " << k << "=" << v << "\n";
  os << "t,E,D,S\n";
  for (const auto& s : tr.samples)
    os << detail::fmt17(s.t) << ',' << detail::fmt17(s.E) << ',' << detail::fmt17(s.D)
       << ',' << detail::fmt17(s.S) << "\n";
  return os.str();
}

inline nlohmann::json to_json(const EnergyTrace& tr) {
  nlohmann::json j;
  j["identity_residual"] = tr.identity_residual;
  j["samples"] = nlohmann::json::array();
  for (const auto& s : tr.samples)
    j["samples"].push_back({{"t", s.t}, {"E", s.E}, {"D", s.D}, {"S", s.S}});
  return j;
}

inline std::string to_csv(const GrowthResult& g) {
  std::ostringstream os;
  os << "# mbstab growth v" << kVersion << "\n";
  os << "# lambda=" << detail::fmt17(g.lambda) << "\n";
  os << "# lambda0=" << detail::fmt17(g.lambda0) << "\n";
  os << "# a_star=" << detail::fmt17(g.a_star) << "\n";
  os << "iteration,s,alpha\n";
  for (const auto& t : g.trace)
    os << detail::fmt17(t[0]) << ',' << detail::fmt17(t[1]) << ',' << detail::fmt17(t[2])
       << "\n";
  return os.str();
}

inline nlohmann::json to_json(const GrowthResult& g) {
  nlohmann::json j;
  j["lambda"] = g.lambda;
  j["lambda0"] = g.lambda0;
  j["a_star"] = g.a_star;
  j["fixed_point_residual"] = g.fixed_point_residual;
  j["precondition_ok"] = g.precondition_ok;
  j["beyond_lemma"] = g.beyond_lemma;
  j["trace"] = nlohmann::json::array();
  for (const auto& t : g.trace) j["trace"].push_back({t[0], t[1], t[2]});
  return j;
}

inline std::string to_csv(const Classification& c) {
  std::ostringstream os;
  os << "# mbstab classify v" << kVersion << "\n";
  os << "verdict,witness,R0,lambda0,xi,upsilon1,upsilon1_bound,upsilon2,upsilon2_alt,"
        "Q_stab_threshold,margin_exact,margin_sufficient,lambda_star,a_max_used\n";
  os << to_string(c.verdict) << ',' << detail::sanitize_cell(c.witness) << ','
     << detail::fmt17(c.R0) << ',' << detail::fmt17(c.lambda0) << ',' << detail::fmt17(c.xi)
     << ',' << detail::fmt17(c.upsilon1) << ',' << detail::fmt17(c.upsilon1_bound) << ','
     << detail::fmt17(c.upsilon2) << ',' << detail::fmt17(c.upsilon2_alt) << ','
     << detail::fmt17(c.Q_stab_threshold) << ',' << detail::fmt17(c.instab.margin_exact)
     << ',' << detail::fmt17(c.instab.margin_sufficient) << ','
     << (c.lambda_star ? detail::fmt17(*c.lambda_star) : "") << ','
     << detail::fmt17(c.a_max_used) << "\n";
  return os.str();
}

inline nlohmann::json to_json(const Classification& c) {
  nlohmann::json j;
  j["verdict"] = to_string(c.verdict);
  j["witness"] = c.witness;
  j["R0"] = detail::num_or_null(c.R0);
  j["lambda0"] = detail::num_or_null(c.lambda0);
  j["xi"] = detail::num_or_null(c.xi);
  j["upsilon1"] = detail::num_or_null(c.upsilon1);
  j["upsilon1_bound"] = detail::num_or_null(c.upsilon1_bound);
  j["upsilon2"] = detail::num_or_null(c.upsilon2);
  j["upsilon2_alt"] = detail::num_or_null(c.upsilon2_alt);
  j["upsilon2_infinite"] = c.upsilon2_infinite;
  j["Q_stab_threshold"] = detail::num_or_null(c.Q_stab_threshold);
  j["instability_exact"] = c.instab.exact;
  j["instability_sufficient"] = c.instab.sufficient;
  j["margin_exact"] = detail::num_or_null(c.instab.margin_exact);
  j["margin_sufficient"] = detail::num_or_null(c.instab.margin_sufficient);
  j["lambda_star"] = c.lambda_star ? nlohmann::json(*c.lambda_star) : nullptr;
  j["a_max_used"] = c.a_max_used;
  return j;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << content;
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace mbstab

#endif
