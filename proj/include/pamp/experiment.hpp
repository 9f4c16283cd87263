#pragma once

// Experiment specs, the on-disk runner, and verification.
//
// A run directory holds one or more CSV files per trial, summary.json
// (recomputed from those CSVs) and manifest.json (spec, spec hash, per-trial
// seeds, file list, status).

#include "pamp/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pamp {

enum class ExperimentKind { Gaussianity, RiskCurveAtIteration, AutoVsOracle, DeltaNSweep, NSweep, SeAgreement };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Gaussianity: return "gaussianity";
    case ExperimentKind::RiskCurveAtIteration: return "risk_curve_at_iteration";
    case ExperimentKind::AutoVsOracle: return "auto_vs_oracle";
    case ExperimentKind::DeltaNSweep: return "delta_n_sweep";
    case ExperimentKind::NSweep: return "n_sweep";
    case ExperimentKind::SeAgreement: return "se_agreement";
  }
  return "unknown";
}

inline ExperimentKind experiment_kind_from_string(std::string_view s) {
  for (auto k : {ExperimentKind::Gaussianity, ExperimentKind::RiskCurveAtIteration, ExperimentKind::AutoVsOracle,
                 ExperimentKind::DeltaNSweep, ExperimentKind::NSweep, ExperimentKind::SeAgreement})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

/// "fixed:TAU", "auto" or "oracle:FILE".
inline ThresholdPolicy parse_policy(const std::string& text, const TunerConfig& cfg = {}) {
  if (text == "auto") return AutoTuned{cfg};
  if (text.rfind("fixed:", 0) == 0) {
    double tau = 0.0;
    try {
      tau = parse_double(text.substr(6));
    } catch (const Error&) {
      throw PolicyError("bad fixed threshold in '" + text + "'");
    }
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw PolicyError("fixed threshold must be finite and >= 0");
    return FixedThreshold{tau};
  }
  if (text.rfind("oracle:", 0) == 0) return OracleSequence{load_threshold_sequence(text.substr(7))};
  throw PolicyError("policy must be fixed:TAU, auto or oracle:FILE, got '" + text + "'");
}

struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t steps = 2;
  std::vector<double> values() const { return linspace(lo, hi, steps); }
};

inline GridSpec grid_from_json(const json& j, GridSpec fallback) {
  if (j.is_null()) return fallback;
  GridSpec g;
  g.lo = j.at("lo").get<double>();
  g.hi = j.at("hi").get<double>();
  g.steps = j.at("steps").get<std::size_t>();
  if (g.steps < 1) throw ConfigError("grid must have at least one point");
  if (!(g.hi >= g.lo)) throw ConfigError("grid needs hi >= lo");
  return g;
}

inline json to_json(const GridSpec& g) { return {{"lo", g.lo}, {"hi", g.hi}, {"steps", g.steps}}; }

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::SeAgreement;
  ProblemConfig base;
  int trials = 1;
  json params = json::object();

  json param(const char* key) const { return params.contains(key) ? params.at(key) : json(); }

  template <typename T>
  T param_or(const char* key, T fallback) const {
    return params.contains(key) ? params.at(key).get<T>() : fallback;
  }

  TunerConfig tuner() const { return params.contains("tuner") ? tuner_config_from_json(params.at("tuner")) : TunerConfig{}; }

  /// Parameters with every default filled in; this is what gets hashed.
  json resolved_params() const {
    json p = json::object();
    auto tc = pamp::to_json(tuner());
    switch (kind) {
      case ExperimentKind::Gaussianity:
        p["iterations"] = param_or<std::vector<int>>("iterations", {1, 2, 3});
        p["policy"] = param_or<std::string>("policy", "auto");
        p["onsager"] = param_or<bool>("onsager", true);
        p["kurtosis_band"] = param_or<double>("kurtosis_band", Tolerances{}.kurtosis_band);
        p["tuner"] = tc;
        break;
      case ExperimentKind::RiskCurveAtIteration:
        p["iterations"] = param_or<std::vector<int>>("iterations", {1, 3, 5, 10});
        p["curve_grid"] = pamp::to_json(grid_from_json(param("curve_grid"), {0.0, 3.0, 61}));
        p["argmin_spacing"] = param_or<double>("argmin_spacing", 1e-3);
        p["tau_tolerance"] = param_or<double>("tau_tolerance", Tolerances{}.tuner_tau_tolerance);
        p["tuner"] = tc;
        break;
      case ExperimentKind::AutoVsOracle:
        p["grid"] = pamp::to_json(grid_from_json(param("grid"), {0.1, 2.5, 300}));
        p["max_iter"] = param_or<int>("max_iter", 200);
        p["u_shape_noise"] = param_or<double>("u_shape_noise", 0.0);
        p["tuner"] = tc;
        break;
      case ExperimentKind::DeltaNSweep:
        p["multipliers"] = param_or<std::vector<double>>("multipliers", {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0});
        p["delta0"] = param_or<double>("delta0", 0.05);
        p["max_iter"] = param_or<int>("max_iter", 200);
        p["tuner"] = tc;
        break;
      case ExperimentKind::NSweep:
        p["sizes"] = param_or<std::vector<std::size_t>>("sizes", {200, 600, 4000, 30000});
        p["sigma"] = param_or<double>("sigma", 0.5);
        p["grid"] = pamp::to_json(grid_from_json(param("grid"), {0.0, 3.0, 61}));
        p["tuner"] = tc;
        break;
      case ExperimentKind::SeAgreement:
        p["tau"] = param_or<double>("tau", 0.5);
        p["T"] = param_or<int>("T", 10);
        break;
    }
    return p;
  }

  void validate() const {
    base.validate();
    if (trials < 1) throw ConfigError("trials must be at least 1");
    const json p = resolved_params();
    auto nonempty = [](const json& v, const char* what) {
      if (!v.is_array() || v.empty()) throw ConfigError(std::string(what) + " must be a nonempty list");
    };
    switch (kind) {
      case ExperimentKind::Gaussianity:
        nonempty(p["iterations"], "iterations");
        for (int t : p["iterations"].get<std::vector<int>>())
          if (t < 0) throw ConfigError("iterations must be nonnegative");
        parse_policy(p["policy"].get<std::string>(), tuner());
        break;
      case ExperimentKind::RiskCurveAtIteration:
        nonempty(p["iterations"], "iterations");
        for (int t : p["iterations"].get<std::vector<int>>())
          if (t < 0) throw ConfigError("iterations must be nonnegative");
        if (!(p["argmin_spacing"].get<double>() > 0.0)) throw ConfigError("argmin_spacing must be positive");
        break;
      case ExperimentKind::AutoVsOracle:
        if (p["max_iter"].get<int>() < 1) throw ConfigError("max_iter must be at least 1");
        break;
      case ExperimentKind::DeltaNSweep:
        nonempty(p["multipliers"], "multipliers");
        for (double m : p["multipliers"].get<std::vector<double>>())
          if (!(m > 0.0)) throw ConfigError("multipliers must be positive");
        if (!(p["delta0"].get<double>() > 0.0)) throw ConfigError("delta0 must be positive");
        break;
      case ExperimentKind::NSweep:
        nonempty(p["sizes"], "sizes");
        if (!(p["sigma"].get<double>() > 0.0)) throw ConfigError("sigma must be positive");
        break;
      case ExperimentKind::SeAgreement:
        if (p["T"].get<int>() < 1) throw ConfigError("T must be at least 1");
        if (!(p["tau"].get<double>() >= 0.0)) throw ConfigError("tau must be nonnegative");
        break;
    }
    tuner().validate();
  }

  json to_json() const {
    return {{"kind", std::string(to_string(kind))}, {"base", pamp::to_json(base)}, {"trials", trials},
            {"params", resolved_params()}};
  }

  static ExperimentSpec from_json(const json& j) {
    ExperimentSpec s;
    try {
      s.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
      s.base = problem_config_from_json(j.at("base"));
      s.trials = j.value("trials", 1);
      s.params = j.value("params", json::object());
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed experiment spec: ") + e.what());
    }
    s.validate();
    return s;
  }
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string spec_hash(const ExperimentSpec& spec) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(spec.to_json().dump())));
  return buf;
}

inline std::uint64_t trial_seed(const ExperimentSpec& spec, int trial) {
  return derive_seed(spec.base.seed, static_cast<std::uint64_t>(trial));
}

struct RunRecord {
  std::string spec_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> files;  // relative to the run directory
  json summary;
  std::string status;  // "complete" or "failed"
  bool reused = false; // an existing complete run was found
};

struct RunError : Error {
  json manifest;
  RunError(const std::string& what, json m) : Error(what), manifest(std::move(m)) {}
};

namespace detail {

inline std::string trial_stem(int trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%04d", trial);
  return buf;
}

/// File names one trial produces, in a fixed order.
inline std::vector<std::string> trial_files(ExperimentKind kind, int trial) {
  const std::string stem = trial_stem(trial);
  switch (kind) {
    case ExperimentKind::RiskCurveAtIteration: return {stem + ".csv", stem + "_curves.csv"};
    case ExperimentKind::AutoVsOracle: return {stem + "_grid.csv", stem + "_auto.csv"};
    default: return {stem + ".csv"};
  }
}

inline std::vector<std::string> written_files(const ExperimentSpec& spec) {
  std::vector<std::string> files;
  for (int i = 0; i < spec.trials; ++i)
    for (auto& f : trial_files(spec.kind, i)) files.push_back(std::move(f));
  return files;
}

inline ProblemInstance trial_instance(const ExperimentSpec& spec, int trial) {
  ProblemConfig c = spec.base;
  c.seed = trial_seed(spec, trial);
  return generate_instance(c);
}

/// Executes one trial and returns the CSV text of each of its files.
inline std::vector<std::string> run_trial(const ExperimentSpec& spec, const json& p, int trial, int inner_jobs) {
  const TunerConfig cfg = spec.tuner();
  switch (spec.kind) {
    case ExperimentKind::Gaussianity: {
      const auto rows = gaussianity_trial(trial_instance(spec, trial), p["iterations"].get<std::vector<int>>(),
                                          parse_policy(p["policy"].get<std::string>(), cfg), p["onsager"].get<bool>());
      CsvWriter w({"t", "mean", "std", "excess_kurtosis", "ks_statistic"});
      for (const auto& r : rows) w.row(r.t, r.stats.mean, r.stats.std, r.stats.excess_kurtosis, r.stats.ks_statistic);
      return {w.str()};
    }
    case ExperimentKind::RiskCurveAtIteration: {
      const GridSpec g = grid_from_json(p["curve_grid"], {});
      const RiskCurveTrial r = risk_curve_trial(trial_instance(spec, trial), p["iterations"].get<std::vector<int>>(),
                                                cfg, g.values(), p["argmin_spacing"].get<double>());
      CsvWriter w({"t", "sigma_hat", "tau_hat", "tau_grid", "abs_error", "restarts"});
      for (const auto& row : r.tuning) w.row(row.t, row.sigma_hat, row.tau_hat, row.tau_grid, row.abs_error(), row.restarts);
      CsvWriter c({"t", "tau", "sure", "ideal"});
      for (const auto& row : r.curves) c.row(row.t, row.tau, row.sure, row.ideal);
      return {w.str(), c.str()};
    }
    case ExperimentKind::AutoVsOracle: {
      const std::vector<double> grid = grid_from_json(p["grid"], {}).values();
      const OracleTrial r = oracle_trial(trial_instance(spec, trial), grid, p["max_iter"].get<int>(), cfg, inner_jobs);
      CsvWriter g({"tau", "final_mse"});
      for (std::size_t i = 0; i < grid.size(); ++i) g.row(grid[i], r.grid_final_mse[i]);
      CsvWriter a({"t", "tau", "mse"});
      for (std::size_t i = 0; i < r.auto_mse.size(); ++i) a.row(static_cast<int>(i), r.auto_tau[i], r.auto_mse[i]);
      return {g.str(), a.str()};
    }
    case ExperimentKind::DeltaNSweep: {
      const auto rows = delta_n_sweep_trial(trial_instance(spec, trial), p["multipliers"].get<std::vector<double>>(),
                                            p["delta0"].get<double>(), p["max_iter"].get<int>(), cfg);
      CsvWriter w({"multiplier", "delta_n", "final_mse", "terminal_tau"});
      for (const auto& r : rows) w.row(r.multiplier, r.delta_n, r.final_mse, r.terminal_tau);
      return {w.str()};
    }
    case ExperimentKind::NSweep: {
      const auto rows = n_sweep_trial(spec.base, p["sizes"].get<std::vector<std::size_t>>(), p["sigma"].get<double>(),
                                      grid_from_json(p["grid"], {}).values(), cfg, trial_seed(spec, trial));
      CsvWriter w({"N", "sup_deviation", "tau_hat", "tau_opt"});
      for (const auto& r : rows) w.row(r.N, r.sup_deviation, r.tau_hat, r.tau_opt);
      return {w.str()};
    }
    case ExperimentKind::SeAgreement: {
      const auto rows = se_agreement_trial(trial_instance(spec, trial), p["tau"].get<double>(), p["T"].get<int>());
      CsvWriter w({"t", "tau", "sigma_hat", "mse"});
      for (const auto& r : rows) w.row(r.t, r.tau, r.sigma_hat, r.mse);
      return {w.str()};
    }
  }
  throw ConfigError("unhandled experiment kind");
}

/// Values of `value` grouped by the distinct entries of `key`, over all tables.
inline std::map<double, std::vector<double>> group_by(const std::vector<CsvTable>& tables, const std::string& key,
                                                      const std::string& value) {
  std::map<double, std::vector<double>> out;
  for (const auto& t : tables) {
    const auto k = t.numbers(key);
    const auto v = t.numbers(value);
    for (std::size_t i = 0; i < k.size(); ++i) out[k[i]].push_back(v[i]);
  }
  return out;
}

inline std::uint64_t summary_seed(const ExperimentSpec& spec, std::uint64_t slot) {
  return derive_seed(spec.base.seed ^ 0x73756d6d61727900ULL, slot);
}

}  // namespace detail

/// Summary statistics recomputed from the CSVs in `dir`.
inline json summarize_run(const ExperimentSpec& spec, const std::filesystem::path& dir) {
  const json p = spec.resolved_params();
  auto tables = [&](int role) {
    std::vector<CsvTable> out;
    for (int i = 0; i < spec.trials; ++i)
      out.push_back(read_csv(dir / detail::trial_files(spec.kind, i).at(static_cast<std::size_t>(role))));
    return out;
  };
  json s = {{"kind", std::string(to_string(spec.kind))}, {"trials", spec.trials}};
  std::uint64_t slot = 0;
  auto med = [&](const std::vector<double>& v) { return to_json(summarize(v, detail::summary_seed(spec, slot++))); };

  switch (spec.kind) {
    case ExperimentKind::Gaussianity: {
      const auto t = tables(0);
      const auto kurt = detail::group_by(t, "t", "excess_kurtosis");
      const auto ks = detail::group_by(t, "t", "ks_statistic");
      const double band = p["kurtosis_band"].get<double>();
      json rows = json::array();
      for (const auto& [it, v] : kurt) {
        int in_band = 0;
        for (double k : v) in_band += std::abs(k) <= band;
        rows.push_back({{"t", it}, {"excess_kurtosis", med(v)}, {"ks_statistic", med(ks.at(it))},
                        {"in_band", in_band}, {"count", v.size()}});
      }
      s["iterations"] = rows;
      break;
    }
    case ExperimentKind::RiskCurveAtIteration: {
      const auto t = tables(0);
      const double tol = p["tau_tolerance"].get<double>();
      json rows = json::array();
      for (const auto& [it, v] : detail::group_by(t, "t", "abs_error")) {
        int within = 0;
        for (double e : v) within += e <= tol;
        rows.push_back({{"t", it}, {"abs_error", med(v)}, {"within_tolerance", within}, {"count", v.size()},
                        {"fraction_within", static_cast<double>(within) / static_cast<double>(v.size())}});
      }
      s["iterations"] = rows;
      break;
    }
    case ExperimentKind::AutoVsOracle: {
      const auto grids = tables(0);
      const auto autos = tables(1);
      const std::vector<double> grid = grids.at(0).numbers("tau");
      std::vector<OracleTrial> trials;
      for (int i = 0; i < spec.trials; ++i) {
        OracleTrial tr;
        tr.grid_final_mse = grids[static_cast<std::size_t>(i)].numbers("final_mse");
        tr.auto_mse = autos[static_cast<std::size_t>(i)].numbers("mse");
        tr.auto_tau = autos[static_cast<std::size_t>(i)].numbers("tau");
        tr.auto_final_mse = tr.auto_mse.empty() ? HUGE_VAL : tr.auto_mse.back();
        tr.terminal_tau = tr.auto_tau.empty() ? 0.0 : tr.auto_tau.back();
        trials.push_back(std::move(tr));
      }
      const OracleReport rep = aggregate_oracle(grid, std::move(trials));
      s["tau_opt"] = rep.tau_opt;
      s["tau_hat_opt"] = rep.tau_hat_opt;
      s["grid_spacing"] = rep.spacing();
      s["tau_gap_spacings"] = rep.spacing() > 0.0 ? std::abs(rep.tau_hat_opt - rep.tau_opt) / rep.spacing() : 0.0;
      s["grid_best_mse"] = rep.grid_best_mse;
      s["auto_final_mse"] = rep.auto_final_mse;
      s["mse_ratio"] = rep.auto_final_mse / rep.grid_best_mse;
      s["median_grid_mse"] = rep.median_grid_mse;
      s["u_shape_sign_changes"] = sign_changes(rep.median_grid_mse, p["u_shape_noise"].get<double>());
      break;
    }
    case ExperimentKind::DeltaNSweep: {
      json rows = json::array();
      double lo = HUGE_VAL, hi = -HUGE_VAL;
      for (const auto& [m, v] : detail::group_by(tables(0), "multiplier", "final_mse")) {
        const json stat = med(v);
        lo = std::min(lo, stat["median"].get<double>());
        hi = std::max(hi, stat["median"].get<double>());
        rows.push_back({{"multiplier", m}, {"final_mse", stat}});
      }
      s["multipliers"] = rows;
      s["relative_spread"] = (hi - lo) / lo;
      break;
    }
    case ExperimentKind::NSweep: {
      json rows = json::array();
      std::vector<double> meds;
      for (const auto& [n, v] : detail::group_by(tables(0), "N", "sup_deviation")) {
        const json stat = med(v);
        meds.push_back(stat["median"].get<double>());
        rows.push_back({{"N", n}, {"sup_deviation", stat}});
      }
      bool decreasing = true;
      for (std::size_t i = 1; i < meds.size(); ++i) decreasing = decreasing && meds[i] < meds[i - 1];
      s["sizes"] = rows;
      s["monotone_decreasing"] = decreasing;
      s["first_to_last_ratio"] = meds.front() / meds.back();
      break;
    }
    case ExperimentKind::SeAgreement: {
      const auto t = tables(0);
      const auto mse = detail::group_by(t, "t", "mse");
      const auto sig = detail::group_by(t, "t", "sigma_hat");
      const double tau = p["tau"].get<double>();
      const SeTrajectory se =
          se_trajectory(spec.base.prior(), spec.base.sigma_w, spec.base.delta, SeFixedTau{tau}, p["T"].get<int>());
      json rows = json::array();
      double worst_mse = 0.0, worst_sigma = 0.0;
      for (const auto& st : se.states) {
        const double key = st.t;
        if (!mse.count(key)) continue;
        const double m = mean(mse.at(key));
        const double sh = mean(sig.at(key));
        const double sigma = std::sqrt(st.sigma_sq);
        const double em = std::abs(m - st.predicted_mse) / st.predicted_mse;
        const double es = std::abs(sh - sigma) / sigma;
        worst_mse = std::max(worst_mse, em);
        worst_sigma = std::max(worst_sigma, es);
        rows.push_back({{"t", st.t}, {"mean_mse", m}, {"se_mse", st.predicted_mse}, {"mse_relative_error", em},
                        {"mean_sigma_hat", sh}, {"se_sigma", sigma}, {"sigma_relative_error", es}});
      }
      s["iterations"] = rows;
      s["max_mse_relative_error"] = worst_mse;
      s["max_sigma_relative_error"] = worst_sigma;
      break;
    }
  }
  return s;
}

namespace detail {

inline json make_manifest(const ExperimentSpec& spec, const std::vector<std::uint64_t>& seeds,
                          const std::vector<std::string>& files, const std::string& status,
                          const std::string& error = {}) {
  json m = {{"format", "pamp-manifest"}, {"version", 1},      {"spec", spec.to_json()},
            {"spec_hash", spec_hash(spec)}, {"seeds", seeds}, {"files", files},
            {"status", status}};
  if (status == "complete") m["summary"] = "summary.json";
  if (!error.empty()) m["error"] = error;
  return m;
}

}  // namespace detail

/// Runs every trial (skipped when `dir` already holds a complete run of the
/// same spec, unless `force`), writes the CSVs, summary.json and manifest.json.
inline RunRecord run_experiment(const ExperimentSpec& spec, const std::filesystem::path& dir, int jobs = 1,
                                bool force = false) {
  namespace fs = std::filesystem;
  spec.validate();
  RunRecord rec;
  rec.spec_hash = spec_hash(spec);
  for (int i = 0; i < spec.trials; ++i) rec.seeds.push_back(trial_seed(spec, i));
  const std::vector<std::string> files = detail::written_files(spec);
  const fs::path manifest_path = dir / "manifest.json";

  if (!force && fs::exists(manifest_path)) {
    json old;
    try {
      old = json::parse(read_text(manifest_path));
    } catch (const std::exception&) {
      old = json::object();
    }
    if (old.value("spec_hash", "") == rec.spec_hash && old.value("status", "") == "complete") {
      bool all = fs::exists(dir / "summary.json");
      for (const auto& f : files) all = all && fs::exists(dir / f);
      if (all) {
        rec.files = files;
        rec.summary = json::parse(read_text(dir / "summary.json"));
        rec.status = "complete";
        rec.reused = true;
        return rec;
      }
    }
  }

  std::vector<std::string> done;
  auto fail = [&](const std::string& why) -> RunError {
    json m = detail::make_manifest(spec, rec.seeds, done, "failed", why);
    try {
      write_text(manifest_path, m.dump(2) + "\n");
    } catch (const std::exception&) {
      // The directory itself may be unwritable; the manifest still travels with the error.
    }
    return RunError(why, std::move(m));
  };

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw fail("cannot create " + dir.string() + ": " + ec.message());
  fs::remove(manifest_path, ec);

  const json p = spec.resolved_params();
  const int outer = std::min(jobs, spec.trials);
  const int inner = outer > 1 ? 1 : jobs;
  std::vector<std::vector<std::string>> texts(static_cast<std::size_t>(spec.trials));
  std::vector<std::string> errors(static_cast<std::size_t>(spec.trials));
  parallel_for(static_cast<std::size_t>(spec.trials), outer, [&](std::size_t i) {
    const int trial = static_cast<int>(i);
    auto csv = detail::run_trial(spec, p, trial, inner);
    const auto names = detail::trial_files(spec.kind, trial);
    try {
      for (std::size_t f = 0; f < names.size(); ++f) write_text(dir / names[f], csv[f]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
    texts[i] = std::move(csv);
  });
  // Collected single-threaded, in trial order.
  for (int i = 0; i < spec.trials; ++i) {
    if (!errors[static_cast<std::size_t>(i)].empty()) throw fail(errors[static_cast<std::size_t>(i)]);
    for (auto& f : detail::trial_files(spec.kind, i)) done.push_back(std::move(f));
  }

  try {
    rec.summary = summarize_run(spec, dir);
    write_text(dir / "summary.json", rec.summary.dump(2) + "\n");
    rec.files = files;
    rec.status = "complete";
    write_text(manifest_path, detail::make_manifest(spec, rec.seeds, files, "complete").dump(2) + "\n");
  } catch (const IoError& e) {
    throw fail(e.what());
  }
  return rec;
}

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> problems;
  void fail(std::string why) {
    ok = false;
    problems.push_back(std::move(why));
  }
};

/// Checks a run directory: manifest and hash, seeds, every listed file, and
/// that summary.json equals the statistics recomputed from the CSVs.
inline VerifyReport verify_run(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  VerifyReport rep;
  json m;
  try {
    m = json::parse(read_text(dir / "manifest.json"));
  } catch (const std::exception& e) {
    rep.fail(std::string("manifest unreadable: ") + e.what());
    return rep;
  }
  if (m.value("status", "") != "complete") rep.fail("run status is '" + m.value("status", "") + "'");
  ExperimentSpec spec;
  try {
    spec = ExperimentSpec::from_json(m.at("spec"));
  } catch (const std::exception& e) {
    rep.fail(std::string("manifest spec invalid: ") + e.what());
    return rep;
  }
  if (m.value("spec_hash", "") != spec_hash(spec)) rep.fail("spec hash mismatch");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < spec.trials; ++i) seeds.push_back(trial_seed(spec, i));
  if (!m.contains("seeds") || m["seeds"].get<std::vector<std::uint64_t>>() != seeds) rep.fail("seed list mismatch");
  const auto expected = detail::written_files(spec);
  if (!m.contains("files") || m["files"].get<std::vector<std::string>>() != expected) rep.fail("file list mismatch");
  for (const auto& f : expected) {
    if (!fs::exists(dir / f)) {
      rep.fail("missing " + f);
      continue;
    }
    try {
      read_csv(dir / f);
    } catch (const std::exception& e) {
      rep.fail(f + ": " + e.what());
    }
  }
  if (!rep.ok) return rep;
  try {
    const json stored = json::parse(read_text(dir / "summary.json"));
    // Compared as text: non-finite numbers serialize as null.
    if (stored.dump() != summarize_run(spec, dir).dump()) rep.fail("summary.json does not match statistics recomputed from CSVs");
  } catch (const std::exception& e) {
    rep.fail(std::string("summary check failed: ") + e.what());
  }
  return rep;
}

}  // namespace pamp
