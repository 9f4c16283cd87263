// Recover a sparse vector with auto-tuned AMP and compare against the
// state-evolution prediction for the same thresholds.

#include "pamp/pamp.hpp"

#include <cstdio>

int main() {
  using namespace pamp;
  ProblemConfig cfg;
  cfg.N = 1000;
  cfg.delta = 0.5;
  cfg.rho = 0.2;
  cfg.sigma_w = 0.05;
  cfg.seed = 7;
  const ProblemInstance inst = generate_instance(cfg);

  AmpOptions opts;
  opts.max_iter = 30;
  const AmpTrajectory traj = run_amp(inst, AutoTuned{}, opts);

  std::vector<double> taus;
  for (const auto& r : traj.records) taus.push_back(r.tau);
  const SeTrajectory se = se_trajectory(cfg.prior(), cfg.sigma_w, cfg.delta, SeGivenSequence{taus}, opts.max_iter);

  std::printf("%4s %10s %12s %12s %12s\n", "t", "tau", "sigma_hat", "se_sigma", "mse");
  for (std::size_t t = 0; t < traj.records.size(); t += 5) {
    const auto& r = traj.records[t];
    const double se_sigma = t < se.states.size() ? std::sqrt(se.states[t].sigma_sq) : 0.0;
    std::printf("%4d %10.4f %12.5f %12.5f %12.3e\n", r.t, r.tau, r.sigma_hat, se_sigma, r.mse);
  }
  std::printf("status %s, final mse %.3e\n", std::string(to_string(traj.status)).c_str(), traj.final_mse());
  return traj.status == AmpStatus::Diverged ? 1 : 0;
}
