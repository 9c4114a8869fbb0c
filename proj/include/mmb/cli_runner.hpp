// SPDX-License-Identifier: Apache-2.0
//
// Config-driven experiment commands behind the mismatch-bounds tool. Each
// command reads a JSON document whose keys carry their units (ts_us, snr_db,
// phi_assumed_deg, ...) and renders CSV or JSON text.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmb/consistency_check.hpp"
#include "mmb/divergence.hpp"
#include "mmb/scenario_doa.hpp"
#include "mmb/scenario_toa.hpp"

namespace mmb::cli {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error("config: " + what) {}
};

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  bool fast = false;
  unsigned workers = 1;
  std::filesystem::path base_dir = ".";  // relative sample-file paths resolve against this
};

// Shortest decimal that reads back to the same double; "inf", "-inf", "nan"
// for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + key + "' has the wrong type");
  }
}

template <class T>
T require(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing key '" + key + "'");
  return get_or<T>(j, key, T{});
}

inline std::string csv_row(const std::vector<double>& values) {
  std::string row;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) row += ',';
    row += format_number(values[i]);
  }
  row += '\n';
  return row;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// doa

struct DoaRun {
  doa::DoaConfig base;
  double grid_lo_deg = 50.0;
  double grid_hi_deg = 60.0;
  int grid_points = 101;
  std::size_t trials_per_point = 100000;
  std::uint64_t seed = 1;
};

inline DoaRun parse_doa(const json& j, const RunOptions& ro) {
  detail::check_keys(j, {"m_sensors", "phi_true_deg", "snr_linear", "snr_db", "phi_assumed_grid_deg",
                         "trials_per_point", "inflation", "seed"},
                     "doa config");
  DoaRun r;
  r.base.m_sensors = detail::get_or(j, "m_sensors", r.base.m_sensors);
  r.base.phi_true_deg = detail::get_or(j, "phi_true_deg", r.base.phi_true_deg);
  if (j.contains("snr_linear") && j.contains("snr_db")) throw ConfigError("give snr_linear or snr_db, not both");
  if (j.contains("snr_linear")) r.base.snr = detail::require<double>(j, "snr_linear");
  if (j.contains("snr_db")) r.base.snr = std::pow(10.0, detail::require<double>(j, "snr_db") / 10.0);
  if (j.contains("phi_assumed_grid_deg")) {
    const auto& g = j.at("phi_assumed_grid_deg");
    detail::check_keys(g, {"lo", "hi", "points"}, "phi_assumed_grid_deg");
    r.grid_lo_deg = detail::get_or(g, "lo", r.grid_lo_deg);
    r.grid_hi_deg = detail::get_or(g, "hi", r.grid_hi_deg);
    r.grid_points = detail::get_or(g, "points", r.grid_points);
  }
  r.trials_per_point = detail::get_or<std::size_t>(j, "trials_per_point", ro.fast ? 10000 : r.trials_per_point);
  const auto form = detail::get_or<std::string>(j, "inflation", "exact");
  if (form == "exact")
    r.base.inflation = doa::InflationForm::exact;
  else if (form == "conservative")
    r.base.inflation = doa::InflationForm::conservative;
  else
    throw ConfigError("inflation must be 'exact' or 'conservative'");
  r.seed = ro.seed.value_or(detail::get_or<std::uint64_t>(j, "seed", r.seed));

  if (r.grid_points < 1) throw ConfigError("phi_assumed_grid_deg.points must be >= 1");
  if (r.grid_points > 1 && !(r.grid_hi_deg > r.grid_lo_deg))
    throw ConfigError("phi_assumed_grid_deg needs hi > lo");
  try {
    r.base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return r;
}

inline double grid_angle(const DoaRun& r, int i) {
  if (r.grid_points == 1) return r.grid_lo_deg;
  return r.grid_lo_deg + (r.grid_hi_deg - r.grid_lo_deg) * i / (r.grid_points - 1);
}

inline std::string cmd_doa(const json& config, const RunOptions& ro) {
  const DoaRun run = parse_doa(config, ro);
  std::string out = "phi_assumed_deg,rho,mse_q,mse_p_closed,mse_p_empirical,ci99,chi2,ub\n";
  for (int i = 0; i < run.grid_points; ++i) {
    doa::DoaConfig cfg = run.base;
    cfg.phi_assumed_deg = grid_angle(run, i);
    const auto cf = doa::doa_closed_forms(cfg);
    const auto sim = doa::simulate_doa(cfg, run.trials_per_point, run.seed, ro.workers);
    out += detail::csv_row({cfg.phi_assumed_deg, cf.rho, cf.mse_q, cf.mse_p, sim.summary.mean,
                            sim.summary.ci99_half_width, cf.chi2, cf.upper});
  }
  return out;
}

// ---------------------------------------------------------------------------
// toa

inline toa::ToaConfig parse_toa(const json& j, const RunOptions& ro) {
  detail::check_keys(j, {"profile", "m_samples", "ts_us", "tp_true_us", "tq_assumed_us", "tau_lo_us", "tau_hi_us",
                         "snr_grid_db", "trials_per_snr", "grid_step_us", "seed"},
                     "toa config");
  const auto profile = detail::get_or<std::string>(j, "profile", ro.fast ? "fast" : "full");
  if (profile != "fast" && profile != "full") throw ConfigError("profile must be 'fast' or 'full'");
  toa::ToaConfig c = (ro.fast || profile == "fast") ? toa::ToaConfig::fast_profile() : toa::ToaConfig::full_profile();
  c.m_samples = detail::get_or(j, "m_samples", c.m_samples);
  c.ts_us = detail::get_or(j, "ts_us", c.ts_us);
  c.tp_true_us = detail::get_or(j, "tp_true_us", c.tp_true_us);
  c.tq_assumed_us = detail::get_or(j, "tq_assumed_us", c.tq_assumed_us);
  c.tau_lo_us = detail::get_or(j, "tau_lo_us", c.tau_lo_us);
  c.tau_hi_us = detail::get_or(j, "tau_hi_us", c.tau_hi_us);
  c.snr_grid_db = detail::get_or(j, "snr_grid_db", c.snr_grid_db);
  c.trials_per_snr = detail::get_or(j, "trials_per_snr", c.trials_per_snr);
  c.grid_step_us = detail::get_or(j, "grid_step_us", c.grid_step_us);
  c.seed = ro.seed.value_or(detail::get_or<std::uint64_t>(j, "seed", c.seed));
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

// Bound columns are in us^2, rmse columns in us.
inline std::string toa_csv(const toa::ToaExperiment& ex) {
  std::string out = "snr_db,rmse_p,rmse_q,chi2_hat,lb_raw,lb_clamped,lb_refined,ub,mcrb_rmse\n";
  for (const auto& r : ex.records) {
    out += detail::csv_row({r.snr_db, r.rmse_p(), r.rmse_q(), r.chi2_hat.value, r.bound.lower,
                            r.bound.lower_clamped(), r.bound.refined_lower.value_or(r.bound.lower), r.bound.upper,
                            std::sqrt(r.bound.mcrb.value_or(std::nan("")))});
  }
  return out;
}

inline std::string cmd_toa(const json& config, const RunOptions& ro) {
  return toa_csv(toa::run_toa_experiment(parse_toa(config, ro), ro.workers));
}

// ---------------------------------------------------------------------------
// consistency

struct ConsistencyRun {
  std::vector<double> weights{1.0}, means{0.0}, vars{1.0};
  double q_mean = 0.0;
  double q_var = 1.0;
  std::vector<int> n_grid = default_n_grid();
};

inline ConsistencyRun parse_consistency(const json& j) {
  detail::check_keys(j, {"noise", "q_mean", "q_var", "n_grid"}, "consistency config");
  ConsistencyRun r;
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    detail::check_keys(n, {"weights", "means", "vars"}, "noise");
    r.weights = detail::require<std::vector<double>>(n, "weights");
    r.means = detail::require<std::vector<double>>(n, "means");
    r.vars = detail::require<std::vector<double>>(n, "vars");
  }
  r.q_mean = detail::get_or(j, "q_mean", r.q_mean);
  r.q_var = detail::get_or(j, "q_var", r.q_var);
  r.n_grid = detail::get_or(j, "n_grid", r.n_grid);
  return r;
}

inline std::string cmd_consistency(const json& config, const RunOptions& ro) {
  const auto run = parse_consistency(config);
  std::optional<GaussianMixture1D> noise;
  try {
    noise.emplace(run.weights, run.means, run.vars);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto rep = consistency_report(*noise, run.q_mean, run.q_var, run.n_grid, ro.workers);
  std::string out = "N,chi2_bar,mse_q,ub\n";
  for (std::size_t i = 0; i < rep.n_grid.size(); ++i) {
    out += std::to_string(rep.n_grid[i]) + ',' +
           detail::csv_row({rep.chi2_bar[i], rep.mse_q_sequence[i], rep.ub_sequence[i]});
  }
  out += std::string("condition_met=") + (rep.condition_met ? "true" : "false") +
         " exponent=" + format_number(rep.growth_exponent) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// divergence

inline std::vector<double> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read sample file " + path.string());
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    double v = 0.0;
    const char* b = line.data() + first;
    const char* e = line.data() + last + 1;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{} || res.ptr != e)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": not a number");
    out.push_back(v);
  }
  if (out.empty()) throw std::runtime_error("sample file " + path.string() + " is empty");
  return out;
}

inline json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

inline json estimate_json(const DivergenceEstimate& e) {
  json d = json::object();
  if (e.diagnostics.cell_count) d["cell_count"] = *e.diagnostics.cell_count;
  if (e.diagnostics.quad_abs_err) d["quad_abs_err"] = number_json(*e.diagnostics.quad_abs_err);
  if (e.diagnostics.sample_sizes)
    d["sample_sizes"] = {e.diagnostics.sample_sizes->first, e.diagnostics.sample_sizes->second};
  if (!e.diagnostics.note.empty()) d["note"] = e.diagnostics.note;
  return {{"value", number_json(e.value)}, {"method", to_string(e.method)}, {"diagnostics", d}};
}

inline ScalarGaussian parse_gaussian(const json& j, const std::string& where) {
  detail::check_keys(j, {"mean", "var"}, where);
  try {
    return ScalarGaussian(detail::require<double>(j, "mean"), detail::require<double>(j, "var"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

// {"p": {"mean", "var"}, "q": {...}} gives the closed form and the quadrature
// value; {"p_samples_file", "q_samples_file", "cells"?} gives the partition
// estimate.
inline std::string cmd_divergence(const json& config, const RunOptions& ro) {
  detail::check_keys(config, {"p", "q", "p_samples_file", "q_samples_file", "cells"}, "divergence config");
  json estimates = json::array();
  const bool params = config.contains("p") || config.contains("q");
  const bool files = config.contains("p_samples_file") || config.contains("q_samples_file");
  if (params == files) throw ConfigError("give either p and q parameters or p_samples_file and q_samples_file");
  if (params) {
    const auto p = parse_gaussian(config.contains("p") ? config.at("p") : json(), "p");
    const auto q = parse_gaussian(config.contains("q") ? config.at("q") : json(), "q");
    estimates.push_back(estimate_json(chi2_scalar_gaussian(p, q)));
    if (2.0 * q.var() > p.var()) estimates.push_back(estimate_json(chi2_quadrature(p, q)));
  } else {
    auto resolve = [&](const std::string& key) {
      std::filesystem::path path = detail::require<std::string>(config, key);
      return path.is_absolute() ? path : ro.base_dir / path;
    };
    const auto ps = read_samples(resolve("p_samples_file"));
    const auto qs = read_samples(resolve("q_samples_file"));
    std::optional<std::size_t> cells;
    if (config.contains("cells")) cells = detail::require<std::size_t>(config, "cells");
    estimates.push_back(estimate_json(chi2_partition_estimate(ps, qs, cells)));
  }
  return json{{"estimates", estimates}}.dump(2) + '\n';
}

// ---------------------------------------------------------------------------

inline std::string run_command(const std::string& command, const json& config, const RunOptions& ro) {
  if (command == "doa") return cmd_doa(config, ro);
  if (command == "toa") return cmd_toa(config, ro);
  if (command == "consistency") return cmd_consistency(config, ro);
  if (command == "divergence") return cmd_divergence(config, ro);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace mmb::cli
