#pragma once

// Threshold tuning: gradient descent on a known risk, backtracking gradient
// descent on the SURE estimate with the signal-energy restart rule, and an
// exhaustive grid minimizer used as the reference.

#include "pamp/common.hpp"
#include "pamp/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace pamp {

using RiskFunction = std::function<double(double)>;

struct TunerConfig {
  double delta_n = 0.05;   // forward-difference step
  double alpha = 0.1;      // sufficient-decrease constant
  double beta = 0.3;       // backtracking shrink factor
  double kappa = 0.05;     // restart when |r(tau) - mu^| / mu^ < kappa
  double l0 = 20.0;        // initial backtracking scale
  int max_inner = 30;
  int max_restarts = 12;
  int max_backtracks = 100;
  double tau_max = 0.0;    // <= 0 selects 10 * max|x~_i|

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
    if (!(delta_n > 0.0)) throw ConfigError("delta_n must be positive");
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    if (!(l0 > 0.0)) throw ConfigError("l0 must be positive");
    if (max_inner < 1) throw ConfigError("max_inner must be at least 1");
    if (max_restarts < 0) throw ConfigError("max_restarts must be nonnegative");
    if (max_backtracks < 1) throw ConfigError("max_backtracks must be at least 1");
    if (!std::isfinite(tau_max) || tau_max < 0.0) throw ConfigError("tau_max must be finite");
  }
};

enum class Termination { MaxInner, Restarted, NonFinite };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::MaxInner: return "max_inner";
    case Termination::Restarted: return "restarted";
    case Termination::NonFinite: return "non_finite";
  }
  return "unknown";
}

struct TunePoint {
  int restart = 0;    // outer pass index
  int iteration = 0;  // 0 is the pass's starting point
  double tau = 0.0;
  double risk = 0.0;
  double l0 = 0.0;    // backtracking scale the pass started with
};

struct TuneDiagnostics {
  double mu_hat = 0.0;
  bool restart_test_enabled = true;
  double tau_max = 0.0;
  std::size_t evaluations = 0;
  int exhausted_backtracks = 0;
};

struct TuneResult {
  double tau_hat = 0.0;
  std::vector<TunePoint> trajectory;
  int restarts = 0;
  Termination terminated_by = Termination::MaxInner;
  TuneDiagnostics diagnostics;
};

/// Thrown when the risk evaluates to a non-finite value; carries the partial run.
struct TunerNumericError : NumericError {
  TuneResult partial;
  TunerNumericError(const std::string& what, TuneResult p) : NumericError(what), partial(std::move(p)) {}
};

/// Backtracking gradient descent on an arbitrary risk estimate. `mu_hat` is the
/// plateau value; restarts on closeness to it only when mu_hat > 0. The first
/// pass starts at `tau_start`, every restarted pass at 0.
inline TuneResult approx_gd(const RiskFunction& risk_estimate, double mu_hat, double tau_max,
                            const TunerConfig& cfg, double tau_start = 0.0) {
  cfg.validate();
  if (!(tau_max > 0.0) || !std::isfinite(tau_max)) throw ArgumentError("tau_max must be positive");

  TuneResult out;
  out.diagnostics.mu_hat = mu_hat;
  out.diagnostics.restart_test_enabled = mu_hat > 0.0;
  out.diagnostics.tau_max = tau_max;

  auto risk = [&](double tau) {
    const double v = risk_estimate(std::clamp(tau, 0.0, tau_max));
    ++out.diagnostics.evaluations;
    if (!std::isfinite(v)) {
      out.terminated_by = Termination::NonFinite;
      throw TunerNumericError("risk estimate is not finite at tau = " + std::to_string(tau), out);
    }
    return v;
  };

  double best_tau = 0.0;
  double best_risk = std::numeric_limits<double>::infinity();
  auto consider = [&](double tau, double r) {
    if (tau >= 0.0 && r < best_risk) {
      best_risk = r;
      best_tau = std::min(tau, tau_max);
    }
  };

  double l0 = cfg.l0;
  for (;;) {
    bool restart = false;
    double tau_new = out.restarts == 0 ? std::clamp(tau_start, 0.0, tau_max) : 0.0;
    {
      const double r0 = risk(tau_new);
      out.trajectory.push_back({out.restarts, 0, tau_new, r0, l0});
      consider(tau_new, r0);
    }
    for (int i = 1; i <= cfg.max_inner; ++i) {
      const double tau_old = tau_new;
      const double r_old = risk(tau_old);
      const double deriv = (risk(tau_old + cfg.delta_n) - r_old) / cfg.delta_n;
      const double step = -deriv;
      double l = l0;
      int shrinks = 0;
      while (risk(tau_old + l * step) > r_old + cfg.alpha * l * step * deriv) {
        l *= cfg.beta;
        if (++shrinks >= cfg.max_backtracks) {
          l = 0.0;
          ++out.diagnostics.exhausted_backtracks;
          break;
        }
      }
      tau_new = tau_old + l * step;
      const double r_new = risk(tau_new);
      const bool near_plateau = out.diagnostics.restart_test_enabled &&
                                std::abs(r_new - mu_hat) / mu_hat < cfg.kappa;
      if (near_plateau || tau_new < 0.0) {
        out.trajectory.push_back({out.restarts, i, tau_new, r_new, l0});
        consider(tau_new, r_new);
        restart = true;
        break;
      }
      tau_new = std::min(tau_new, tau_max);
      out.trajectory.push_back({out.restarts, i, tau_new, r_new, l0});
      consider(tau_new, r_new);
    }
    if (!restart) {
      out.tau_hat = tau_new;
      out.terminated_by = Termination::MaxInner;
      return out;
    }
    if (out.restarts >= cfg.max_restarts) {
      out.tau_hat = best_tau;
      out.terminated_by = Termination::Restarted;
      return out;
    }
    ++out.restarts;
    l0 *= 0.5;
  }
}

/// Default search cap: 10 * max|x~_i| (10 * sigma for an all-zero observation).
inline double default_tau_max(const NoisyObservation& obs) {
  const double m = obs.x_tilde.size() ? obs.x_tilde.cwiseAbs().maxCoeff() : 0.0;
  return m > 0.0 ? 10.0 * m : 10.0 * obs.sigma;
}

/// Tune the soft threshold for one noisy observation from the data alone.
inline TuneResult approx_gd(const NoisyObservation& obs, const TunerConfig& cfg = {}, double tau_start = 0.0) {
  obs.validate();
  const double tau_max = cfg.tau_max > 0.0 ? cfg.tau_max : default_tau_max(obs);
  return approx_gd([&obs](double t) { return sure_risk(obs, t); }, signal_energy_estimate(obs), tau_max, cfg,
                   tau_start);
}

struct IdealGdResult {
  double tau = 0.0;
  int iterations = 0;
  bool converged = false;       // |deriv| <= tol at the returned point
  bool hit_tau_max = false;     // pushed against the upper cap
  bool hit_zero = false;        // derivative positive at tau = 0
  std::vector<double> iterates;
};

/// gamma_{t+1} = gamma_t - step * deriv(gamma_t), kept inside [0, tau_max].
inline IdealGdResult ideal_gd(const RiskFunction& risk, const RiskFunction& deriv, double step, double tol,
                              int max_iter, double tau0,
                              double tau_max = std::numeric_limits<double>::infinity()) {
  if (!(step > 0.0)) throw ArgumentError("step must be positive");
  if (!(tau0 >= 0.0)) throw ArgumentError("tau0 must be nonnegative");
  if (max_iter < 0) throw ArgumentError("max_iter must be nonnegative");
  IdealGdResult out;
  double gamma = std::min(tau0, tau_max);
  out.iterates.push_back(gamma);
  for (;;) {
    const double d = deriv(gamma);
    if (!std::isfinite(d) || !std::isfinite(risk(gamma)))
      throw NumericError("ideal_gd: non-finite risk or derivative at tau = " + std::to_string(gamma));
    if (std::abs(d) <= tol) {
      out.converged = true;
      break;
    }
    if (gamma >= tau_max && d < 0.0) {
      out.hit_tau_max = true;
      break;
    }
    if (gamma <= 0.0 && d > 0.0) {
      out.hit_zero = true;
      break;
    }
    if (out.iterations >= max_iter) break;
    gamma = std::clamp(gamma - step * d, 0.0, tau_max);
    ++out.iterations;
    out.iterates.push_back(gamma);
  }
  out.tau = gamma;
  return out;
}

/// Fixed-step descent driven by the forward-difference SURE derivative; the
/// empirical counterpart of ideal_gd with identical step schedule.
inline std::vector<double> approx_fixed_step_gd(const NoisyObservation& obs, double step, double delta_n,
                                                int iterations, double tau0, double tau_max) {
  if (!(step > 0.0)) throw ArgumentError("step must be positive");
  std::vector<double> iterates{std::clamp(tau0, 0.0, tau_max)};
  double tau = iterates.back();
  for (int i = 0; i < iterations; ++i) {
    const double d = sure_risk_derivative(obs, tau, delta_n);
    tau = std::clamp(tau - step * d, 0.0, tau_max);
    iterates.push_back(tau);
  }
  return iterates;
}

struct GridMinimum {
  double tau = 0.0;
  double value = 0.0;
  std::size_t index = 0;
};

/// Exact argmin over the grid; ties go to the smaller tau.
inline GridMinimum grid_search(const RiskFunction& risk, const std::vector<double>& grid) {
  if (grid.empty()) throw ArgumentError("grid must be nonempty");
  GridMinimum best{grid[0], 0.0, 0};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = risk(grid[i]);
    if (!std::isfinite(v)) throw NumericError("grid_search: non-finite risk at tau = " + std::to_string(grid[i]));
    if (i == 0 || v < best.value) best = {grid[i], v, i};
  }
  return best;
}

}  // namespace pamp
