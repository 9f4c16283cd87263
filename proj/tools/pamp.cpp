// pamp: command-line front end for instance generation, denoising, tuning,
// AMP runs, state evolution and the experiment runner.

#include "pamp/pamp.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace pamp;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

// "s,a" -> point-mass prior with a fraction s of entries equal to a.
SignalPrior parse_prior(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 2) throw ArgumentError("prior must be written s,a");
  SignalPrior p{parse_double(parts[0]), parse_double(parts[1]), PriorKind::PointMass};
  p.validate();
  return p;
}

// "lo:hi:steps"
std::vector<double> parse_grid(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw ArgumentError("grid must be written lo:hi:steps");
  const double lo = parse_double(parts[0]);
  const double hi = parse_double(parts[1]);
  const double steps = parse_double(parts[2]);
  if (!(steps >= 1.0) || steps != std::floor(steps)) throw ArgumentError("grid steps must be a positive integer");
  if (!(hi >= lo)) throw ArgumentError("grid needs hi >= lo");
  auto g = linspace(lo, hi, static_cast<std::size_t>(steps));
  validate_grid(g);
  return g;
}

void write_or_print(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_text(out, text);
}

double observation_sigma(const StoredObservation& obs, std::optional<double> flag) {
  if (flag) return *flag;
  if (obs.sigma) return *obs.sigma;
  throw ArgumentError("--sigma is required: the observation file carries no noise level");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameterless approximate message passing"};
  app.require_subcommand(1);

  // generate
  ProblemConfig gen;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Draw a problem instance");
  generate->add_option("--n", gen.N, "Signal length N")->required();
  generate->add_option("--delta", gen.delta, "Undersampling ratio n/N")->required();
  generate->add_option("--rho", gen.rho, "Sparsity ratio k/n")->required();
  generate->add_option("--sigma-w", gen.sigma_w, "Measurement noise std")->default_val(0.0);
  generate->add_option("--amplitude", gen.nonzero_value, "Value of the nonzero entries")->default_val(1.0);
  generate->add_option("--seed", gen.seed, "Master seed")->default_val(0);
  generate->add_option("--out", gen_out, "Output instance file")->required();

  // make-obs
  std::size_t obs_n = 0, obs_k = 0;
  double obs_amp = 1.0, obs_sigma = 1.0;
  std::uint64_t obs_seed = 0;
  std::string obs_out;
  auto* make_obs = app.add_subcommand("make-obs", "Draw x~ = x_o + sigma u for a k-sparse signal");
  make_obs->add_option("--n", obs_n, "Length N")->required();
  make_obs->add_option("--k", obs_k, "Number of nonzeros")->required();
  make_obs->add_option("--amplitude", obs_amp, "Nonzero value")->default_val(1.0);
  make_obs->add_option("--sigma", obs_sigma, "Noise std")->required();
  make_obs->add_option("--seed", obs_seed, "Seed")->default_val(0);
  make_obs->add_option("--out", obs_out, "Output observation file")->required();

  // risk-curve
  std::string rc_input, rc_grid, rc_estimator = "sure", rc_prior, rc_out;
  std::optional<double> rc_sigma;
  auto* risk = app.add_subcommand("risk-curve", "Risk of soft thresholding over a threshold grid");
  risk->add_option("--input", rc_input, "Observation file")->required();
  risk->add_option("--sigma", rc_sigma, "Noise std (defaults to the file's)");
  risk->add_option("--grid", rc_grid, "lo:hi:steps")->required();
  risk->add_option("--estimator", rc_estimator, "sure | ideal")->check(CLI::IsMember({"sure", "ideal"}));
  risk->add_option("--prior", rc_prior, "s,a for the ideal risk (defaults to the file's)");
  risk->add_option("--out", rc_out, "Output CSV (stdout if omitted)");

  // tune-denoise
  std::string td_input, td_out;
  std::optional<double> td_sigma;
  TunerConfig td_cfg;
  auto* tune = app.add_subcommand("tune-denoise", "Pick a threshold from the data only");
  tune->add_option("--input", td_input, "Observation file")->required();
  tune->add_option("--sigma", td_sigma, "Noise std (defaults to the file's)");
  tune->add_option("--delta-n", td_cfg.delta_n, "Forward-difference step")->capture_default_str();
  tune->add_option("--alpha", td_cfg.alpha, "Sufficient decrease constant")->capture_default_str();
  tune->add_option("--beta", td_cfg.beta, "Backtracking factor")->capture_default_str();
  tune->add_option("--kappa", td_cfg.kappa, "Restart closeness to the signal energy")->capture_default_str();
  tune->add_option("--l0", td_cfg.l0, "Initial step scale")->capture_default_str();
  tune->add_option("--max-inner", td_cfg.max_inner, "Iterations per pass")->capture_default_str();
  tune->add_option("--out", td_out, "Output JSON (stdout if omitted)");

  // run-amp
  std::string ra_instance, ra_policy, ra_out;
  int ra_iter = 200;
  bool ra_no_onsager = false;
  auto* amp = app.add_subcommand("run-amp", "Run AMP on a stored instance");
  amp->add_option("--instance", ra_instance, "Instance file")->required();
  amp->add_option("--policy", ra_policy, "fixed:TAU | auto | oracle:FILE")->required();
  amp->add_option("--max-iter", ra_iter, "Iterations")->default_val(200);
  amp->add_flag("--no-onsager", ra_no_onsager, "Drop the memory term (diagnostic)");
  amp->add_option("--out", ra_out, "Output CSV (stdout if omitted)");

  // state-evolution
  std::string se_prior, se_policy, se_out;
  double se_sigma_w = 0.0, se_delta = 1.0;
  int se_T = 200;
  auto* se = app.add_subcommand("state-evolution", "Iterate the scalar state evolution");
  se->add_option("--prior", se_prior, "s,a")->required();
  se->add_option("--sigma-w", se_sigma_w, "Measurement noise std")->default_val(0.0);
  se->add_option("--delta", se_delta, "Undersampling ratio")->required();
  se->add_option("--policy", se_policy, "fixed:TAU | greedy")->required();
  se->add_option("--T", se_T, "Steps")->default_val(200);
  se->add_option("--out", se_out, "Output CSV (stdout if omitted)");

  // experiment
  std::string ex_spec, ex_dir;
  int ex_jobs = 1;
  bool ex_force = false;
  auto* experiment = app.add_subcommand("experiment", "Run an experiment spec");
  experiment->add_option("--spec", ex_spec, "Spec JSON")->required();
  experiment->add_option("--out-dir", ex_dir, "Run directory")->required();
  experiment->add_option("--jobs", ex_jobs, "Worker threads")->default_val(1)->check(CLI::PositiveNumber);
  experiment->add_flag("--force", ex_force, "Rerun even if a complete run exists");

  // verify
  std::string vf_dir;
  auto* verify = app.add_subcommand("verify", "Check a run directory against its CSVs");
  verify->add_option("--out-dir,dir", vf_dir, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      gen.validate();
      const ProblemInstance inst = generate_instance(gen);
      save_instance(gen_out, inst);
      std::cerr << "wrote " << gen_out << " (n=" << inst.A.rows() << ", N=" << inst.A.cols() << ", k=" << gen.k()
                << ")\n";
    } else if (*make_obs) {
      save_observation(obs_out, make_observation(obs_n, obs_k, obs_amp, obs_sigma, obs_seed));
    } else if (*risk) {
      const StoredObservation stored = load_observation(rc_input);
      const double sigma = observation_sigma(stored, rc_sigma);
      const auto grid = parse_grid(rc_grid);
      RiskCurve curve;
      if (rc_estimator == "sure") {
        const NoisyObservation obs{stored.x_tilde, sigma};
        obs.validate();
        curve = risk_curve(obs, grid);
      } else {
        SignalPrior prior;
        if (!rc_prior.empty())
          prior = parse_prior(rc_prior);
        else if (stored.prior)
          prior = *stored.prior;
        else
          throw ArgumentError("--prior is required for the ideal risk");
        curve = risk_curve(prior, sigma, grid);
      }
      write_or_print(rc_out, risk_curve_csv(curve));
    } else if (*tune) {
      const StoredObservation stored = load_observation(td_input);
      const NoisyObservation obs{stored.x_tilde, observation_sigma(stored, td_sigma)};
      try {
        write_or_print(td_out, to_json(approx_gd(obs, td_cfg)).dump(2) + "\n");
      } catch (const TunerNumericError& e) {
        json j = to_json(e.partial);
        j["error"] = e.what();
        write_or_print(td_out, j.dump(2) + "\n");
        throw;
      }
    } else if (*amp) {
      const ProblemInstance inst = load_instance(ra_instance);
      AmpOptions opts;
      opts.max_iter = ra_iter;
      opts.onsager = !ra_no_onsager;
      const AmpTrajectory traj = run_amp(inst, parse_policy(ra_policy), opts);
      write_or_print(ra_out, amp_trajectory_csv(traj));
      std::cerr << "status " << to_string(traj.status) << ", final mse " << format_double(traj.final_mse()) << "\n";
    } else if (*se) {
      const SignalPrior prior = parse_prior(se_prior);
      SePolicy policy;
      if (se_policy == "greedy") {
        policy = SeGreedyOptimal{};
      } else {
        const ThresholdPolicy p = parse_policy(se_policy);
        const auto* f = std::get_if<FixedThreshold>(&p);
        if (!f) throw PolicyError("state-evolution policy must be fixed:TAU or greedy");
        policy = SeFixedTau{f->tau};
      }
      write_or_print(se_out, se_trajectory_csv(se_trajectory(prior, se_sigma_w, se_delta, policy, se_T)));
    } else if (*experiment) {
      const ExperimentSpec spec = ExperimentSpec::from_json(json::parse(read_text(ex_spec)));
      const RunRecord rec = run_experiment(spec, ex_dir, ex_jobs, ex_force);
      std::cerr << (rec.reused ? "reused " : "completed ") << "run " << rec.spec_hash << " in " << ex_dir << "\n";
      std::cout << rec.summary.dump(2) << "\n";
    } else if (*verify) {
      const VerifyReport rep = verify_run(vf_dir);
      for (const auto& p : rep.problems) std::cerr << "verify: " << p << "\n";
      std::cout << (rep.ok ? "ok" : "FAILED") << "\n";
      return rep.ok ? 0 : 1;
    }
  } catch (const RunError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
