#pragma once

// Approximate message passing with soft thresholding:
//
//   x^{t+1} = eta(x~^t; tau^t)
//   z^{t+1} = y - A x^{t+1} + z^t * ||x^{t+1}||_0 / n
//   x~^{t+1} = x^{t+1} + A^T z^{t+1},   sigma^_{t+1} = ||z^{t+1}|| / sqrt(n)
//
// starting from x^0 = 0, z^0 = y.

#include "pamp/common.hpp"
#include "pamp/denoiser.hpp"
#include "pamp/signal_model.hpp"
#include "pamp/tuner.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pamp {

struct FixedThreshold {
  double tau = 0.0;
};
struct AutoTuned {
  TunerConfig config{};
  bool warm_start = false;  // start each tune from the previous tau instead of 0
};
struct OracleSequence {
  std::vector<double> taus;
};

using ThresholdPolicy = std::variant<FixedThreshold, AutoTuned, OracleSequence>;

inline void validate_policy(const ThresholdPolicy& policy, int max_iter) {
  if (const auto* f = std::get_if<FixedThreshold>(&policy)) {
    if (!(f->tau >= 0.0)) throw PolicyError("fixed threshold must be nonnegative");
  } else if (const auto* a = std::get_if<AutoTuned>(&policy)) {
    a->config.validate();
  } else if (const auto* o = std::get_if<OracleSequence>(&policy)) {
    if (o->taus.size() < static_cast<std::size_t>(max_iter))
      throw PolicyError("oracle sequence has " + std::to_string(o->taus.size()) + " thresholds, need " +
                        std::to_string(max_iter));
    for (double t : o->taus)
      if (!(t >= 0.0)) throw PolicyError("oracle thresholds must be nonnegative");
  }
}

struct AmpState {
  int t = 0;
  Vector x;
  Vector z;
  Vector x_tilde;
  double sigma_hat = 0.0;
  double tau_used = std::numeric_limits<double>::quiet_NaN();  // threshold that produced x
  std::size_t active = 0;                                       // ||x||_0
};

inline double estimate_noise_std(const Vector& z) {
  if (z.size() < 1) throw ArgumentError("residual must be nonempty");
  return std::sqrt(z.squaredNorm() / static_cast<double>(z.size()));
}
inline double estimate_noise_std(const AmpState& s) { return estimate_noise_std(s.z); }

inline AmpState amp_init(const ProblemInstance& inst) {
  if (inst.y.size() != inst.A.rows()) throw DimensionError("measurement length does not match A");
  AmpState s;
  s.x = Vector::Zero(inst.A.cols());
  s.z = inst.y;
  s.x_tilde = apply_At(inst, s.z);
  s.sigma_hat = estimate_noise_std(s.z);
  return s;
}

/// One AMP iteration at threshold tau. `onsager = false` drops the memory
/// term (negative control only).
inline AmpState amp_step(const ProblemInstance& inst, const AmpState& state, double tau, bool onsager = true) {
  if (!(tau >= 0.0)) throw ArgumentError("threshold must be nonnegative");
  if (state.x_tilde.size() != inst.A.cols() || state.z.size() != inst.A.rows())
    throw DimensionError("AMP state does not match the instance");
  AmpState next;
  next.t = state.t + 1;
  next.tau_used = tau;
  next.x = soft_threshold(state.x_tilde, tau);
  next.active = static_cast<std::size_t>((next.x.array() != 0.0).count());
  next.z = inst.y - apply_A(inst, next.x);
  if (onsager) next.z += state.z * (static_cast<double>(next.active) / static_cast<double>(inst.A.rows()));
  next.x_tilde = next.x + apply_At(inst, next.z);
  next.sigma_hat = estimate_noise_std(next.z);
  return next;
}

/// v^t = x~^t - x_o (simulation only).
inline Vector effective_noise(const ProblemInstance& inst, const AmpState& state) {
  if (!inst.has_signal()) throw ModeError("effective noise needs the true signal");
  if (state.x_tilde.size() != inst.x_o.size()) throw DimensionError("AMP state does not match the instance");
  return state.x_tilde - inst.x_o;
}

/// One row per AMP step t: the threshold applied to x~^t, the noise estimate
/// of x~^t, and the error and sparsity of the resulting x^{t+1}.
struct AmpRecord {
  int t = 0;
  double tau = 0.0;
  double sigma_hat = 0.0;
  double mse = std::numeric_limits<double>::quiet_NaN();
  double sparsity = 0.0;
  int tuner_restarts = 0;
};

enum class AmpStatus { Completed, EarlyStopped, Diverged };

inline std::string_view to_string(AmpStatus s) {
  switch (s) {
    case AmpStatus::Completed: return "completed";
    case AmpStatus::EarlyStopped: return "early_stopped";
    case AmpStatus::Diverged: return "diverged";
  }
  return "unknown";
}

struct AmpTrajectory {
  std::vector<AmpRecord> records;
  AmpState final_state;
  AmpStatus status = AmpStatus::Completed;
  double initial_mse = std::numeric_limits<double>::quiet_NaN();  // ||x_o||^2 / N

  double final_mse() const {
    return records.empty() ? initial_mse : records.back().mse;
  }
};

struct AmpOptions {
  int max_iter = 200;
  bool record = true;
  bool onsager = true;
  bool early_stop = false;
  double early_stop_tol = 1e-8;  // relative MSE change
  int early_stop_window = 10;
  double divergence_limit = 1e100;
  // Called with each state x~^t right after the threshold for step t is chosen.
  std::function<void(const AmpState&, double tau)> observer;
};

namespace detail {

inline bool finite_state(const AmpState& s, double limit) {
  return std::isfinite(s.sigma_hat) && s.sigma_hat < limit && s.x_tilde.allFinite() &&
         s.x_tilde.cwiseAbs().maxCoeff() < limit;
}

inline double choose_threshold(const ThresholdPolicy& policy, const AmpState& state, double previous_tau,
                               int& restarts) {
  restarts = 0;
  if (const auto* f = std::get_if<FixedThreshold>(&policy)) return f->tau;
  if (const auto* o = std::get_if<OracleSequence>(&policy)) return o->taus[static_cast<std::size_t>(state.t)];
  const auto& a = std::get<AutoTuned>(policy);
  // Exact fit: nothing left to denoise.
  if (!(state.sigma_hat > 0.0)) return 0.0;
  NoisyObservation obs{state.x_tilde, state.sigma_hat};
  const TuneResult r = approx_gd(obs, a.config, a.warm_start ? previous_tau : 0.0);
  restarts = r.restarts;
  return r.tau_hat;
}

}  // namespace detail

inline AmpTrajectory run_amp(const ProblemInstance& inst, const ThresholdPolicy& policy,
                             const AmpOptions& opts = {}) {
  if (opts.max_iter < 0) throw ArgumentError("max_iter must be nonnegative");
  validate_policy(policy, opts.max_iter);

  AmpTrajectory traj;
  const bool know_signal = inst.has_signal();
  const double N = static_cast<double>(inst.A.cols());
  if (know_signal) traj.initial_mse = inst.x_o.squaredNorm() / N;

  AmpState state = amp_init(inst);
  double previous_tau = 0.0;
  if (opts.record) traj.records.reserve(static_cast<std::size_t>(opts.max_iter));

  std::vector<double> mse_history;
  for (int t = 0; t < opts.max_iter; ++t) {
    int restarts = 0;
    double tau = 0.0;
    try {
      tau = detail::choose_threshold(policy, state, previous_tau, restarts);
    } catch (const NumericError&) {
      traj.status = AmpStatus::Diverged;
      break;
    }
    if (opts.observer) opts.observer(state, tau);
    AmpState next = amp_step(inst, state, tau, opts.onsager);

    AmpRecord rec;
    rec.t = t;
    rec.tau = tau;
    rec.sigma_hat = state.sigma_hat;
    rec.sparsity = static_cast<double>(next.active) / N;
    rec.tuner_restarts = restarts;
    if (know_signal) rec.mse = (next.x - inst.x_o).squaredNorm() / N;
    const bool pushed = opts.record || t + 1 == opts.max_iter;
    if (pushed) traj.records.push_back(rec);

    previous_tau = tau;
    state = std::move(next);
    if (!detail::finite_state(state, opts.divergence_limit)) {
      if (!pushed) traj.records.push_back(rec);
      traj.status = AmpStatus::Diverged;
      break;
    }
    if (opts.early_stop && know_signal) {
      mse_history.push_back(rec.mse);
      const auto w = static_cast<std::size_t>(opts.early_stop_window);
      if (mse_history.size() > w) {
        const double old = mse_history[mse_history.size() - 1 - w];
        const double rel = std::abs(rec.mse - old) / std::max(old, std::numeric_limits<double>::min());
        if (rel < opts.early_stop_tol) {
          if (!pushed) traj.records.push_back(rec);
          traj.status = AmpStatus::EarlyStopped;
          break;
        }
      }
    }
  }
  traj.final_state = std::move(state);
  return traj;
}

}  // namespace pamp
