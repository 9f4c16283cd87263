#pragma once

// Soft thresholding, its risk under Gaussian noise, and the Stein unbiased
// estimate of that risk.
//
// All risks are per coordinate (already divided by N).

#include "pamp/common.hpp"
#include "pamp/signal_model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace pamp {

struct NoisyObservation {
  Vector x_tilde;
  double sigma = 1.0;

  void validate() const {
    if (x_tilde.size() < 1) throw ArgumentError("observation must have at least one entry");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ArgumentError("sigma must be positive");
  }
  std::size_t size() const { return static_cast<std::size_t>(x_tilde.size()); }
};

enum class RiskEstimator { Sure, IdealClosedForm, MonteCarlo };

inline std::string_view to_string(RiskEstimator e) {
  switch (e) {
    case RiskEstimator::Sure: return "sure";
    case RiskEstimator::IdealClosedForm: return "ideal";
    case RiskEstimator::MonteCarlo: return "montecarlo";
  }
  return "unknown";
}

struct RiskCurve {
  std::vector<double> tau_grid;
  std::vector<double> values;
  RiskEstimator estimator = RiskEstimator::Sure;
};

namespace detail {

inline void check_tau(double tau) {
  if (!(tau >= 0.0)) throw ArgumentError("threshold must be nonnegative");
}

inline double soft(double v, double tau) {
  const double mag = std::abs(v) - tau;
  if (mag <= 0.0) return 0.0;
  return v > 0.0 ? mag : -mag;
}

// Upper normal tail 1 - Phi(u), accurate for large u.
inline double normal_sf(double u) { return 0.5 * std::erfc(u / std::numbers::sqrt2); }
inline double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }
inline double normal_pdf(double u) {
  return std::exp(-0.5 * u * u) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

// E[(sigma W - c)^2 ; W > u] for W ~ N(0, 1).
inline double upper_partial_moment(double sigma, double c, double u) {
  if (std::isinf(u)) return u > 0 ? 0.0 : sigma * sigma + c * c;
  return (sigma * sigma + c * c) * normal_sf(u) + (sigma * sigma * u - 2.0 * sigma * c) * normal_pdf(u);
}

// Risk of soft thresholding for a single point mass at `a`.
inline double point_risk(double a, double sigma, double tau) {
  const double u_hi = (tau - a) / sigma;
  const double u_lo = (-tau - a) / sigma;
  // Region a + sigma W > tau: error sigma W - tau.
  // Region a + sigma W < -tau: error sigma W + tau, i.e. (sigma W' - tau)^2 with W' = -W > -u_lo.
  const double killed = normal_cdf(u_hi) - normal_cdf(u_lo);
  return upper_partial_moment(sigma, tau, u_hi) + upper_partial_moment(sigma, tau, -u_lo) + a * a * killed;
}

// Mills ratio Q(u) / phi(u); continued fraction once erfc starts to lose
// relative accuracy.
inline double mills_ratio(double u) {
  if (u < 3.0) return normal_sf(u) / normal_pdf(u);
  double f = u;
  for (int k = 120; k >= 1; --k) f = u + k / f;
  return 1.0 / f;
}

// phi(u) - u Q(u) = E[(W - u)_+], without cancellation for large u.
inline double tail_excess(double u) {
  if (u < 3.0) return normal_pdf(u) - u * normal_sf(u);
  return normal_pdf(u) * (1.0 - u * mills_ratio(u));
}

// With u = (tau - a)/sigma, v = (tau + a)/sigma:
//   2 tau (Q(u) + Q(v)) - 2 sigma (phi(u) + phi(v))
//   = 2a (Q(u) - Q(v)) - 2 sigma (g(u) + g(v)),  g = tail_excess.
// The second form keeps its sign in the flat far tail.
inline double point_risk_derivative(double a, double sigma, double tau) {
  const double u = (tau - a) / sigma;
  const double v = (tau + a) / sigma;
  return 2.0 * a * (normal_sf(u) - normal_sf(v)) - 2.0 * sigma * (tail_excess(u) + tail_excess(v));
}

}  // namespace detail

inline Vector soft_threshold(const Vector& v, double tau) {
  detail::check_tau(tau);
  return v.unaryExpr([tau](double x) { return detail::soft(x, tau); });
}

/// Weak derivative of soft thresholding: 1 where |v_i| > tau, 0 otherwise
/// (ties count as 0).
inline Vector soft_threshold_deriv(const Vector& v, double tau) {
  detail::check_tau(tau);
  return v.unaryExpr([tau](double x) { return std::abs(x) > tau ? 1.0 : 0.0; });
}

/// Stein unbiased risk estimate of (1/N) E||eta(x~; tau) - x_o||^2:
///   (1/N)||eta - x~||^2 + sigma^2 + (2 sigma^2 / N) sum_i (eta'_i - 1).
inline double sure_risk(const NoisyObservation& obs, double tau) {
  obs.validate();
  detail::check_tau(tau);
  const double s2 = obs.sigma * obs.sigma;
  double residual = 0.0;
  double inactive = 0.0;
  for (Eigen::Index i = 0; i < obs.x_tilde.size(); ++i) {
    const double v = obs.x_tilde[i];
    const double av = std::abs(v);
    if (av > tau) {
      residual += tau * tau;
    } else {
      residual += v * v;
      inactive += 1.0;
    }
  }
  const double N = static_cast<double>(obs.x_tilde.size());
  return residual / N + s2 - 2.0 * s2 * inactive / N;
}

/// Forward difference of sure_risk with step delta_n.
inline double sure_risk_derivative(const NoisyObservation& obs, double tau, double delta_n) {
  if (!(delta_n > 0.0)) throw ArgumentError("delta_n must be positive");
  return (sure_risk(obs, tau + delta_n) - sure_risk(obs, tau)) / delta_n;
}

/// mu^ = ||x~||^2 / N - sigma^2. Can be negative.
inline double signal_energy_estimate(const NoisyObservation& obs) {
  obs.validate();
  return obs.x_tilde.squaredNorm() / static_cast<double>(obs.x_tilde.size()) - obs.sigma * obs.sigma;
}

/// Bayes risk E(eta(X + sigma W; tau) - X)^2 for X ~ prior, closed form.
inline double ideal_risk(const SignalPrior& prior, double sigma, double tau) {
  prior.validate();
  if (!(sigma > 0.0)) throw ArgumentError("sigma must be positive");
  detail::check_tau(tau);
  const double s = prior.sparsity_fraction;
  double r = 0.0;
  if (s < 1.0) r += (1.0 - s) * detail::point_risk(0.0, sigma, tau);
  if (s > 0.0) r += s * detail::point_risk(prior.nonzero_value, sigma, tau);
  return r;
}

/// d/dtau of ideal_risk, analytic.
inline double ideal_risk_derivative(const SignalPrior& prior, double sigma, double tau) {
  prior.validate();
  if (!(sigma > 0.0)) throw ArgumentError("sigma must be positive");
  detail::check_tau(tau);
  const double s = prior.sparsity_fraction;
  double d = 0.0;
  if (s < 1.0) d += (1.0 - s) * detail::point_risk_derivative(0.0, sigma, tau);
  if (s > 0.0) d += s * detail::point_risk_derivative(prior.nonzero_value, sigma, tau);
  return d;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Sampled Bayes risk; the seeded counterpart of ideal_risk.
inline MonteCarloEstimate monte_carlo_risk(const SignalPrior& prior, double sigma, double tau,
                                           std::size_t samples = 10'000'000, std::uint64_t seed = 1) {
  prior.validate();
  if (!(sigma > 0.0)) throw ArgumentError("sigma must be positive");
  detail::check_tau(tau);
  if (samples < 2) throw ArgumentError("need at least two samples");
  auto engine = make_engine(seed, Stream::Observation);
  std::normal_distribution<double> gauss;
  std::bernoulli_distribution active(prior.sparsity_fraction);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = active(engine) ? prior.nonzero_value : 0.0;
    const double e = detail::soft(x + sigma * gauss(engine), tau) - x;
    sum += e * e;
    sum_sq += e * e * e * e;
  }
  const double m = static_cast<double>(samples);
  const double mean = sum / m;
  const double var = (sum_sq / m - mean * mean) * m / (m - 1.0);
  return {mean, std::sqrt(std::max(var, 0.0) / m)};
}

inline void validate_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw ArgumentError("grid must be nonempty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw ArgumentError("grid entries must be nonnegative");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ArgumentError("grid must be strictly ascending");
  }
}

/// `steps` equally spaced points on [lo, hi] (both ends included).
inline std::vector<double> linspace(double lo, double hi, std::size_t steps) {
  if (steps == 0) throw ArgumentError("linspace needs at least one point");
  std::vector<double> g(steps);
  if (steps == 1) {
    g[0] = lo;
    return g;
  }
  const double h = (hi - lo) / static_cast<double>(steps - 1);
  for (std::size_t i = 0; i < steps; ++i) g[i] = lo + h * static_cast<double>(i);
  g.back() = hi;
  return g;
}

inline RiskCurve risk_curve(const NoisyObservation& obs, const std::vector<double>& grid) {
  validate_grid(grid);
  RiskCurve c{grid, {}, RiskEstimator::Sure};
  c.values.reserve(grid.size());
  for (double t : grid) c.values.push_back(sure_risk(obs, t));
  return c;
}

inline RiskCurve risk_curve(const SignalPrior& prior, double sigma, const std::vector<double>& grid) {
  validate_grid(grid);
  RiskCurve c{grid, {}, RiskEstimator::IdealClosedForm};
  c.values.reserve(grid.size());
  for (double t : grid) c.values.push_back(ideal_risk(prior, sigma, t));
  return c;
}

inline RiskCurve monte_carlo_risk_curve(const SignalPrior& prior, double sigma, const std::vector<double>& grid,
                                        std::size_t samples, std::uint64_t seed) {
  validate_grid(grid);
  RiskCurve c{grid, {}, RiskEstimator::MonteCarlo};
  c.values.reserve(grid.size());
  for (double t : grid) c.values.push_back(monte_carlo_risk(prior, sigma, t, samples, seed).mean);
  return c;
}

}  // namespace pamp
