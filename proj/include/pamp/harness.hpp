#pragma once

// Experiment harness: per-trial workloads, statistics, and a reproducible
// on-disk runner (per-trial CSVs + summary.json + manifest.json).

#include "pamp/amp.hpp"
#include "pamp/common.hpp"
#include "pamp/denoiser.hpp"
#include "pamp/io.hpp"
#include "pamp/signal_model.hpp"
#include "pamp/state_evolution.hpp"
#include "pamp/tuner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace pamp {

// ---------------------------------------------------------------------------
// Tolerances

struct Tolerances {
  int version = 1;
  double sure_unbiasedness_z = 4.0;
  double sup_deviation_ratio_lo = 2.8;
  double sup_deviation_ratio_hi = 5.7;
  int quasi_convex_max_sign_changes = 1;
  double ideal_gd_grid_steps = 1.0;
  double tuner_tau_tolerance = 0.05;
  double tuner_pass_fraction = 0.9;
  double oracle_grid_spacings = 2.0;
  double oracle_mse_factor = 1.1;
  double se_mse_relative = 0.07;
  double se_sigma_relative = 0.05;
  double greedy_sigma_slack = 1e-4;
  double delta_n_mse_spread = 0.10;
  double kurtosis_band = 0.3;
  int kurtosis_min_pass = 18;

  static Tolerances from_json(const json& j) {
    Tolerances t;
    t.version = j.value("version", t.version);
    t.sure_unbiasedness_z = j.value("sure_unbiasedness_z", t.sure_unbiasedness_z);
    t.sup_deviation_ratio_lo = j.value("sup_deviation_ratio_lo", t.sup_deviation_ratio_lo);
    t.sup_deviation_ratio_hi = j.value("sup_deviation_ratio_hi", t.sup_deviation_ratio_hi);
    t.quasi_convex_max_sign_changes = j.value("quasi_convex_max_sign_changes", t.quasi_convex_max_sign_changes);
    t.ideal_gd_grid_steps = j.value("ideal_gd_grid_steps", t.ideal_gd_grid_steps);
    t.tuner_tau_tolerance = j.value("tuner_tau_tolerance", t.tuner_tau_tolerance);
    t.tuner_pass_fraction = j.value("tuner_pass_fraction", t.tuner_pass_fraction);
    t.oracle_grid_spacings = j.value("oracle_grid_spacings", t.oracle_grid_spacings);
    t.oracle_mse_factor = j.value("oracle_mse_factor", t.oracle_mse_factor);
    t.se_mse_relative = j.value("se_mse_relative", t.se_mse_relative);
    t.se_sigma_relative = j.value("se_sigma_relative", t.se_sigma_relative);
    t.greedy_sigma_slack = j.value("greedy_sigma_slack", t.greedy_sigma_slack);
    t.delta_n_mse_spread = j.value("delta_n_mse_spread", t.delta_n_mse_spread);
    t.kurtosis_band = j.value("kurtosis_band", t.kurtosis_band);
    t.kurtosis_min_pass = j.value("kurtosis_min_pass", t.kurtosis_min_pass);
    return t;
  }

  json to_json() const {
    return {{"version", version},
            {"sure_unbiasedness_z", sure_unbiasedness_z},
            {"sup_deviation_ratio_lo", sup_deviation_ratio_lo},
            {"sup_deviation_ratio_hi", sup_deviation_ratio_hi},
            {"quasi_convex_max_sign_changes", quasi_convex_max_sign_changes},
            {"ideal_gd_grid_steps", ideal_gd_grid_steps},
            {"tuner_tau_tolerance", tuner_tau_tolerance},
            {"tuner_pass_fraction", tuner_pass_fraction},
            {"oracle_grid_spacings", oracle_grid_spacings},
            {"oracle_mse_factor", oracle_mse_factor},
            {"se_mse_relative", se_mse_relative},
            {"se_sigma_relative", se_sigma_relative},
            {"greedy_sigma_slack", greedy_sigma_slack},
            {"delta_n_mse_spread", delta_n_mse_spread},
            {"kurtosis_band", kurtosis_band},
            {"kurtosis_min_pass", kurtosis_min_pass}};
  }
};

inline Tolerances load_tolerances(const std::filesystem::path& path) {
  return Tolerances::from_json(json::parse(read_text(path)));
}

// ---------------------------------------------------------------------------
// Statistics

inline double median(std::vector<double> v) {
  if (v.empty()) throw ArgumentError("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw ArgumentError("mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct MedianSummary {
  double median = 0.0;
  double ci_lo = 0.0;  // bootstrap 90% interval
  double ci_hi = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
};

inline MedianSummary summarize(const std::vector<double>& v, std::uint64_t seed, int resamples = 1000) {
  MedianSummary s;
  s.count = v.size();
  s.median = median(v);
  s.mean = mean(v);
  std::mt19937_64 engine(mix64(seed));
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  std::vector<double> meds(static_cast<std::size_t>(resamples));
  std::vector<double> sample(v.size());
  for (auto& m : meds) {
    for (auto& x : sample) x = v[pick(engine)];
    m = median(sample);
  }
  std::sort(meds.begin(), meds.end());
  auto at = [&](double q) {
    const auto i = static_cast<std::size_t>(std::floor(q * static_cast<double>(meds.size() - 1)));
    return meds[i];
  };
  s.ci_lo = at(0.05);
  s.ci_hi = at(0.95);
  return s;
}

inline json to_json(const MedianSummary& s) {
  return {{"median", s.median}, {"ci90_lo", s.ci_lo}, {"ci90_hi", s.ci_hi}, {"mean", s.mean}, {"count", s.count}};
}

struct GaussianityStats {
  double mean = 0.0;
  double std = 0.0;
  double excess_kurtosis = 0.0;
  double ks_statistic = 0.0;  // against N(mean, std^2)
};

inline GaussianityStats gaussianity_check(const Vector& v) {
  const auto n = static_cast<std::size_t>(v.size());
  if (n < 100) throw ArgumentError("gaussianity_check needs at least 100 samples");
  GaussianityStats s;
  const double dn = static_cast<double>(n);
  s.mean = v.sum() / dn;
  double m2 = 0.0;
  double m4 = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double d = v[i] - s.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= dn;
  m4 /= dn;
  if (!(m2 > 0.0)) throw DegenerateSampleError("sample has zero variance");
  s.std = std::sqrt(m2 * dn / (dn - 1.0));
  s.excess_kurtosis = m4 / (m2 * m2) - 3.0;

  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = detail::normal_cdf((sorted[i] - s.mean) / s.std);
    d = std::max({d, static_cast<double>(i + 1) / dn - F, F - static_cast<double>(i) / dn});
  }
  s.ks_statistic = d;
  return s;
}

// ---------------------------------------------------------------------------
// Work pool

/// Runs body(i) for i in [0, count) on `jobs` threads. Results must be written
/// to per-index slots; the first exception is rethrown after all workers stop.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  for (std::size_t w = 0; w < n; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Denoising-level workloads

struct UnbiasednessPoint {
  double tau = 0.0;
  double mean_sure = 0.0;
  double mean_loss = 0.0;  // Monte-Carlo true risk (1/N)||eta - x_o||^2
  double std_error = 0.0;  // of the paired difference
  double z = 0.0;
};

/// Fixed k-sparse signal, `draws` independent noise vectors; compares SURE
/// with the realized loss at every grid point.
inline std::vector<UnbiasednessPoint> sure_unbiasedness(std::size_t N, const SignalPrior& prior, double sigma,
                                                        int draws, const std::vector<double>& grid,
                                                        std::uint64_t seed) {
  if (draws < 2) throw ArgumentError("need at least two noise draws");
  const auto k = static_cast<std::size_t>(std::llround(prior.sparsity_fraction * static_cast<double>(N)));
  const StoredObservation base = make_observation(N, k, prior.nonzero_value, sigma, seed);
  std::vector<std::vector<double>> diff(grid.size()), sure(grid.size()), loss(grid.size());
  for (int d = 0; d < draws; ++d) {
    auto engine = make_engine(derive_seed(seed, static_cast<std::uint64_t>(d) + 1), Stream::Noise);
    std::normal_distribution<double> gauss;
    NoisyObservation obs{base.x_o, sigma};
    for (Eigen::Index i = 0; i < obs.x_tilde.size(); ++i) obs.x_tilde[i] += sigma * gauss(engine);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double r = sure_risk(obs, grid[g]);
      const double l = (soft_threshold(obs.x_tilde, grid[g]) - base.x_o).squaredNorm() / static_cast<double>(N);
      sure[g].push_back(r);
      loss[g].push_back(l);
      diff[g].push_back(r - l);
    }
  }
  std::vector<UnbiasednessPoint> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    UnbiasednessPoint p;
    p.tau = grid[g];
    p.mean_sure = mean(sure[g]);
    p.mean_loss = mean(loss[g]);
    const double md = mean(diff[g]);
    double ss = 0.0;
    for (double x : diff[g]) ss += (x - md) * (x - md);
    p.std_error = std::sqrt(ss / static_cast<double>(draws - 1) / static_cast<double>(draws));
    p.z = p.std_error > 0.0 ? md / p.std_error : 0.0;
    out.push_back(p);
  }
  return out;
}

/// sup over the grid of |SURE - exact risk| for one observation of a
/// point-mass signal (exact risk = ideal_risk with the empirical sparsity).
inline double sup_deviation(const NoisyObservation& obs, const SignalPrior& empirical_prior,
                            const std::vector<double>& grid) {
  double sup = 0.0;
  for (double t : grid)
    sup = std::max(sup, std::abs(sure_risk(obs, t) - ideal_risk(empirical_prior, obs.sigma, t)));
  return sup;
}

/// Fine-grid minimizer of SURE over [0, max|x~|]; SURE is constant beyond.
inline GridMinimum sure_grid_argmin(const NoisyObservation& obs, double spacing = 1e-3) {
  const double hi = obs.x_tilde.cwiseAbs().maxCoeff() + spacing;
  const auto steps = static_cast<std::size_t>(std::ceil(hi / spacing)) + 1;
  std::vector<double> grid(steps);
  for (std::size_t i = 0; i < steps; ++i) grid[i] = spacing * static_cast<double>(i);
  return grid_search([&obs](double t) { return sure_risk(obs, t); }, grid);
}

// ---------------------------------------------------------------------------
// AMP-level workloads

struct GaussianityRow {
  int t = 0;
  GaussianityStats stats;
};

/// Statistics of the effective noise x~^t - x_o at the requested iterations.
inline std::vector<GaussianityRow> gaussianity_trial(const ProblemInstance& inst, std::vector<int> iterations,
                                                     const ThresholdPolicy& policy, bool onsager) {
  std::sort(iterations.begin(), iterations.end());
  std::vector<GaussianityRow> rows;
  if (iterations.empty()) return rows;
  AmpOptions opts;
  opts.max_iter = iterations.back() + 1;
  opts.onsager = onsager;
  opts.record = false;
  opts.observer = [&](const AmpState& s, double) {
    if (std::binary_search(iterations.begin(), iterations.end(), s.t))
      rows.push_back({s.t, gaussianity_check(effective_noise(inst, s))});
  };
  run_amp(inst, policy, opts);
  return rows;
}

struct TuningRow {
  int t = 0;
  double sigma_hat = 0.0;
  double tau_hat = 0.0;
  double tau_grid = 0.0;  // fine-grid argmin of SURE
  int restarts = 0;
  double abs_error() const { return std::abs(tau_hat - tau_grid); }
};

struct CurveRow {
  int t = 0;
  double tau = 0.0;
  double sure = 0.0;
  double ideal = 0.0;
};

struct RiskCurveTrial {
  std::vector<TuningRow> tuning;
  std::vector<CurveRow> curves;
};

/// Auto-tuned AMP; at each listed iteration the tuner's pick is compared with
/// the fine-grid SURE minimizer, and the SURE / ideal curves are recorded.
inline RiskCurveTrial risk_curve_trial(const ProblemInstance& inst, std::vector<int> iterations,
                                       const TunerConfig& cfg, const std::vector<double>& curve_grid,
                                       double argmin_spacing = 1e-3) {
  std::sort(iterations.begin(), iterations.end());
  RiskCurveTrial out;
  if (iterations.empty()) return out;
  const SignalPrior prior = inst.config.prior();
  AmpOptions opts;
  opts.max_iter = iterations.back() + 1;
  opts.record = false;
  // The observer sees x~^t with the threshold already chosen by the policy.
  opts.observer = [&](const AmpState& s, double tau) {
    if (!std::binary_search(iterations.begin(), iterations.end(), s.t) || !(s.sigma_hat > 0.0)) return;
    NoisyObservation obs{s.x_tilde, s.sigma_hat};
    const TuneResult tuned = approx_gd(obs, cfg);
    TuningRow row{s.t, s.sigma_hat, tau, sure_grid_argmin(obs, argmin_spacing).tau, tuned.restarts};
    out.tuning.push_back(row);
    for (double g : curve_grid) out.curves.push_back({s.t, g, sure_risk(obs, g), ideal_risk(prior, s.sigma_hat, g)});
  };
  run_amp(inst, AutoTuned{cfg}, opts);
  return out;
}

struct SeAgreementRow {
  int t = 0;
  double tau = 0.0;
  double sigma_hat = 0.0;
  double mse = 0.0;
};

inline std::vector<SeAgreementRow> se_agreement_trial(const ProblemInstance& inst, double tau, int T) {
  AmpOptions opts;
  opts.max_iter = T;
  const AmpTrajectory traj = run_amp(inst, FixedThreshold{tau}, opts);
  std::vector<SeAgreementRow> rows;
  for (const auto& r : traj.records) rows.push_back({r.t, r.tau, r.sigma_hat, r.mse});
  return rows;
}

struct DeltaNRow {
  double multiplier = 0.0;
  double delta_n = 0.0;
  double final_mse = 0.0;
  double terminal_tau = 0.0;
};

inline std::vector<DeltaNRow> delta_n_sweep_trial(const ProblemInstance& inst, const std::vector<double>& multipliers,
                                                  double delta0, int max_iter, const TunerConfig& base = {}) {
  std::vector<DeltaNRow> rows;
  for (double m : multipliers) {
    TunerConfig cfg = base;
    cfg.delta_n = m * delta0;
    AmpOptions opts;
    opts.max_iter = max_iter;
    opts.record = false;
    const AmpTrajectory traj = run_amp(inst, AutoTuned{cfg}, opts);
    rows.push_back({m, cfg.delta_n, traj.final_mse(), traj.records.empty() ? 0.0 : traj.records.back().tau});
  }
  return rows;
}

struct NSweepRow {
  std::size_t N = 0;
  double sup_deviation = 0.0;
  double tau_hat = 0.0;
  double tau_opt = 0.0;  // minimizer of the exact risk
};

/// Denoising accuracy as N grows, at fixed (delta, rho, amplitude, sigma).
inline std::vector<NSweepRow> n_sweep_trial(const ProblemConfig& base, const std::vector<std::size_t>& sizes,
                                            double sigma, const std::vector<double>& grid, const TunerConfig& cfg,
                                            std::uint64_t seed) {
  std::vector<NSweepRow> rows;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    ProblemConfig c = base;
    c.N = sizes[i];
    c.validate();
    const StoredObservation o = make_observation(c.N, c.k(), c.nonzero_value, sigma, derive_seed(seed, i));
    const NoisyObservation obs{o.x_tilde, sigma};
    const SignalPrior prior = c.prior();
    NSweepRow row;
    row.N = c.N;
    row.sup_deviation = sup_deviation(obs, prior, grid);
    row.tau_hat = approx_gd(obs, cfg).tau_hat;
    row.tau_opt = optimal_threshold(prior, sigma);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Oracle comparison

struct OracleTrial {
  std::vector<double> grid_final_mse;  // per grid tau
  std::vector<double> auto_mse;        // auto-tuned MSE per iteration
  std::vector<double> auto_tau;        // auto-tuned threshold per iteration
  double auto_final_mse = 0.0;
  double terminal_tau = 0.0;
};

struct OracleReport {
  std::vector<double> grid;
  std::vector<OracleTrial> trials;
  std::vector<double> median_grid_mse;
  double tau_opt = 0.0;         // grid argmin of the median final MSE
  double grid_best_mse = 0.0;
  double tau_hat_opt = 0.0;     // median terminal tau of the auto-tuned runs
  double auto_final_mse = 0.0;  // median
  double spacing() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
};

namespace detail {
inline double finite_or_huge(double v) { return std::isfinite(v) ? v : HUGE_VAL; }
}  // namespace detail

/// Fixed-tau AMP at every grid point plus one auto-tuned run, on one instance.
inline OracleTrial oracle_trial(const ProblemInstance& inst, const std::vector<double>& grid, int max_iter,
                                const TunerConfig& cfg = {}, int jobs = 1) {
  validate_grid(grid);
  OracleTrial out;
  out.grid_final_mse.resize(grid.size());
  parallel_for(grid.size() + 1, jobs, [&](std::size_t slot) {
    AmpOptions opts;
    opts.max_iter = max_iter;
    if (slot < grid.size()) {
      opts.record = false;
      out.grid_final_mse[slot] = run_amp(inst, FixedThreshold{grid[slot]}, opts).final_mse();
      return;
    }
    const AmpTrajectory traj = run_amp(inst, AutoTuned{cfg}, opts);
    for (const auto& r : traj.records) {
      out.auto_mse.push_back(r.mse);
      out.auto_tau.push_back(r.tau);
    }
    out.auto_final_mse = traj.final_mse();
    out.terminal_tau = traj.records.empty() ? 0.0 : traj.records.back().tau;
  });
  return out;
}

/// Medians across trials; diverged runs count as +inf.
inline OracleReport aggregate_oracle(const std::vector<double>& grid, std::vector<OracleTrial> trials) {
  if (trials.empty()) throw ArgumentError("no oracle trials");
  OracleReport rep;
  rep.grid = grid;
  rep.trials = std::move(trials);
  rep.median_grid_mse.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> v;
    for (const auto& t : rep.trials) v.push_back(detail::finite_or_huge(t.grid_final_mse.at(g)));
    rep.median_grid_mse[g] = median(v);
  }
  std::size_t arg = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (rep.median_grid_mse[g] < rep.median_grid_mse[arg]) arg = g;
  rep.tau_opt = grid[arg];
  rep.grid_best_mse = rep.median_grid_mse[arg];
  std::vector<double> taus, finals;
  for (const auto& t : rep.trials) {
    taus.push_back(t.terminal_tau);
    finals.push_back(detail::finite_or_huge(t.auto_final_mse));
  }
  rep.tau_hat_opt = median(taus);
  rep.auto_final_mse = median(finals);
  return rep;
}

inline OracleReport compare_oracle(const ProblemConfig& base, const std::vector<double>& grid, int trials,
                                   int max_iter = 200, int jobs = 1, const TunerConfig& cfg = {}) {
  base.validate();
  validate_grid(grid);
  if (trials < 1) throw ArgumentError("trials must be at least 1");
  std::vector<OracleTrial> out;
  for (int i = 0; i < trials; ++i) {
    ProblemConfig c = base;
    c.seed = derive_seed(base.seed, static_cast<std::uint64_t>(i));
    out.push_back(oracle_trial(generate_instance(c), grid, max_iter, cfg, jobs));
  }
  return aggregate_oracle(grid, std::move(out));
}

/// Count of sign changes of consecutive differences. Differences no larger
/// than `noise` and non-finite ones (diverged runs) are skipped.
inline int sign_changes(const std::vector<double>& values, double noise = 0.0) {
  int changes = 0;
  int last = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double d = values[i] - values[i - 1];
    if (!std::isfinite(d) || std::abs(d) <= noise) continue;
    const int s = d > 0 ? 1 : -1;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

}  // namespace pamp
