#pragma once

// Scalar state evolution of AMP with soft thresholding:
//   sigma_{t+1}^2 = sigma_w^2 + R_B(sigma_t, tau_t; p_X) / delta.

#include "pamp/common.hpp"
#include "pamp/denoiser.hpp"
#include "pamp/signal_model.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

namespace pamp {

struct SeState {
  int t = 0;
  double sigma_sq = 0.0;       // sigma_t^2 of x~^t
  double tau = 0.0;            // threshold applied at step t
  double predicted_mse = 0.0;  // R_B(sigma_t, tau_t), the MSE of x^{t+1}
};

struct SeTrajectory {
  SignalPrior prior;
  double sigma_w = 0.0;
  double delta = 1.0;
  std::vector<SeState> states;
  bool truncated = false;  // effective noise reached zero
};

inline double se_initial(const SignalPrior& prior, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw ArgumentError("delta must lie in (0, 1]");
  return prior_second_moment(prior) / delta;
}

inline double se_step(const SignalPrior& prior, double sigma_w, double delta, double sigma_sq, double tau) {
  if (!(delta > 0.0 && delta <= 1.0)) throw ArgumentError("delta must lie in (0, 1]");
  if (!(sigma_sq > 0.0)) throw ArgumentError("sigma_sq must be positive");
  return sigma_w * sigma_w + ideal_risk(prior, std::sqrt(sigma_sq), tau) / delta;
}

/// Search interval for the risk minimizer at noise level sigma.
inline double optimal_threshold_cap(const SignalPrior& prior, double sigma) {
  return 10.0 * (sigma + std::abs(prior.nonzero_value));
}

/// argmin_tau R_B(sigma, tau) by golden-section search on [0, 10 (sigma + |a|)].
inline double optimal_threshold(const SignalPrior& prior, double sigma, double tol = 1e-6) {
  if (!(sigma > 0.0)) throw ArgumentError("sigma must be positive");
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0;
  double hi = optimal_threshold_cap(prior, sigma);
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = ideal_risk(prior, sigma, c);
  double fd = ideal_risk(prior, sigma, d);
  while (hi - lo > tol) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = ideal_risk(prior, sigma, c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = ideal_risk(prior, sigma, d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  // The interval ends are candidates as well: monotone risks put the minimum there.
  double best = mid;
  double fbest = ideal_risk(prior, sigma, mid);
  for (double cand : {0.0, optimal_threshold_cap(prior, sigma)}) {
    const double f = ideal_risk(prior, sigma, cand);
    if (f < fbest) {
      best = cand;
      fbest = f;
    }
  }
  return best;
}

struct SeFixedTau {
  double tau = 0.0;
};
struct SeGreedyOptimal {};
struct SeGivenSequence {
  std::vector<double> taus;
};
using SePolicy = std::variant<SeFixedTau, SeGreedyOptimal, SeGivenSequence>;

struct SeOptions {
  // Overrides sigma_0^2 = sigma_w^2 + E[X^2] / delta.
  std::optional<double> initial_sigma_sq;
  // Below this sigma^2 the recursion is treated as collapsed.
  double collapse_floor = 1e-300;
};

/// Iterate the recursion for T steps. sigma_0^2 includes the measurement noise.
inline SeTrajectory se_trajectory(const SignalPrior& prior, double sigma_w, double delta, const SePolicy& policy,
                                  int T, const SeOptions& opts = {}) {
  if (T < 1) throw ArgumentError("T must be at least 1");
  if (!(sigma_w >= 0.0)) throw ArgumentError("sigma_w must be nonnegative");
  if (const auto* g = std::get_if<SeGivenSequence>(&policy); g && g->taus.size() < static_cast<std::size_t>(T))
    throw PolicyError("given threshold sequence shorter than T");

  SeTrajectory traj{prior, sigma_w, delta, {}, false};
  double sigma_sq = opts.initial_sigma_sq.value_or(sigma_w * sigma_w + se_initial(prior, delta));
  for (int t = 0; t < T; ++t) {
    if (!(sigma_sq > opts.collapse_floor)) {
      traj.truncated = true;
      break;
    }
    const double sigma = std::sqrt(sigma_sq);
    double tau = 0.0;
    if (const auto* f = std::get_if<SeFixedTau>(&policy))
      tau = f->tau;
    else if (const auto* g = std::get_if<SeGivenSequence>(&policy))
      tau = g->taus[static_cast<std::size_t>(t)];
    else
      tau = optimal_threshold(prior, sigma);
    const double mse = ideal_risk(prior, sigma, tau);
    traj.states.push_back({t, sigma_sq, tau, mse});
    sigma_sq = sigma_w * sigma_w + mse / delta;
  }
  return traj;
}

struct GreedyThresholds {
  std::vector<double> taus;
  std::vector<double> sigmas;  // sigma_t at which each tau_t was chosen
  bool truncated = false;
};

/// Per-step risk minimizers along the recursion they generate.
inline GreedyThresholds greedy_optimal_thresholds(const SignalPrior& prior, double sigma_w, double delta, int T,
                                                  const SeOptions& opts = {}) {
  const SeTrajectory traj = se_trajectory(prior, sigma_w, delta, SeGreedyOptimal{}, T, opts);
  GreedyThresholds out;
  out.truncated = traj.truncated;
  for (const auto& s : traj.states) {
    out.taus.push_back(s.tau);
    out.sigmas.push_back(std::sqrt(s.sigma_sq));
  }
  return out;
}

/// sigma_T^2 reached after applying `taus` from the standard initial condition.
inline double se_terminal_sigma_sq(const SignalPrior& prior, double sigma_w, double delta,
                                   const std::vector<double>& taus) {
  double sigma_sq = sigma_w * sigma_w + se_initial(prior, delta);
  for (double tau : taus) {
    if (!(sigma_sq > 0.0)) return 0.0;
    sigma_sq = se_step(prior, sigma_w, delta, sigma_sq, tau);
  }
  return sigma_sq;
}

}  // namespace pamp
