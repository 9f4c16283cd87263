#include "pamp/denoiser.hpp"
#include "pamp/io.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pamp;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<double> to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

SignalPrior point_mass(double s, double a) { return {s, a, PriorKind::PointMass}; }

NoisyObservation example_obs() { return {vec({3.0, -1.0, 0.5}), 1.0}; }

NoisyObservation random_obs(std::size_t N, double s, double a, double sigma, std::uint64_t seed) {
  const auto k = static_cast<std::size_t>(std::llround(s * static_cast<double>(N)));
  const StoredObservation o = make_observation(N, k, a, sigma, seed);
  return {o.x_tilde, sigma};
}

}  // namespace

TEST(SoftThreshold, Examples) {
  EXPECT_TRUE(soft_threshold(vec({3, -1, 0.5}), 2) == vec({1, 0, 0}));
  const Vector v = vec({0.3, -4, 2, 0});
  EXPECT_TRUE(soft_threshold(v, 0) == v);
  EXPECT_EQ(soft_threshold(vec({-2.5}), 1)[0], -1.5);
  EXPECT_THROW(soft_threshold(v, -0.1), ArgumentError);
}

TEST(SoftThreshold, ShrinksAndIsNonExpansive) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 2.0);
  for (double tau : {0.0, 0.1, 0.5, 1.0, 3.0}) {
    for (int rep = 0; rep < 20; ++rep) {
      Vector u(50), v(50);
      for (Eigen::Index i = 0; i < 50; ++i) {
        u[i] = g(rng);
        v[i] = g(rng);
      }
      const Vector eu = soft_threshold(u, tau);
      for (Eigen::Index i = 0; i < 50; ++i) {
        EXPECT_LE(std::abs(eu[i]), std::abs(u[i]));
        EXPECT_EQ(eu[i], oracle::soft(u[i], tau));
      }
      EXPECT_LE((eu - soft_threshold(v, tau)).norm(), (u - v).norm() + 1e-15);
    }
  }
}

TEST(SoftThresholdDeriv, Examples) {
  EXPECT_TRUE(soft_threshold_deriv(vec({3, -1, 0.5}), 2) == vec({1, 0, 0}));
  EXPECT_TRUE(soft_threshold_deriv(vec({0.1, -2, 5}), 0) == vec({1, 1, 1}));
  EXPECT_TRUE(soft_threshold_deriv(vec({2, -2, 1.5}), 2) == vec({0, 0, 0}));  // tie rule
  EXPECT_THROW(soft_threshold_deriv(vec({1}), -1), ArgumentError);
}

TEST(Sure, Endpoints) {
  const NoisyObservation obs = random_obs(500, 0.2, 1.0, 0.4, 1);
  EXPECT_EQ(sure_risk(obs, 0.0), 0.4 * 0.4);
  const double tmax = obs.x_tilde.cwiseAbs().maxCoeff();
  const double mu = obs.x_tilde.squaredNorm() / 500.0 - 0.16;
  EXPECT_NEAR(sure_risk(obs, tmax), mu, 1e-13);
  EXPECT_NEAR(sure_risk(obs, 10 * tmax), mu, 1e-13);
  EXPECT_NEAR(signal_energy_estimate(obs), sure_risk(obs, tmax + 1), 1e-13);
}

TEST(Sure, WorkedExample) {
  EXPECT_NEAR(sure_risk(example_obs(), 2.0), 5.25 / 3.0 + 1.0 - 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(sure_risk(example_obs(), 2.0), 1.4166666666666667, 1e-15);
  EXPECT_NEAR(sure_risk(example_obs(), 2.0), oracle::sure({3, -1, 0.5}, 1.0, 2.0), 1e-15);
}

TEST(Sure, MatchesTermByTermOracle) {
  const NoisyObservation obs = random_obs(777, 0.1, 2.0, 0.7, 9);
  const auto x = to_vec(obs.x_tilde);
  for (double tau : linspace(0, 4, 41)) EXPECT_NEAR(sure_risk(obs, tau), oracle::sure(x, 0.7, tau), 1e-13);
}

TEST(Sure, Errors) {
  EXPECT_THROW(sure_risk({vec({1}), 0.0}, 1.0), ArgumentError);
  EXPECT_THROW(sure_risk({vec({1}), -1.0}, 1.0), ArgumentError);
  EXPECT_THROW(sure_risk({Vector(), 1.0}, 1.0), ArgumentError);
  EXPECT_THROW(sure_risk(example_obs(), -1.0), ArgumentError);
}

TEST(Sure, UnbiasedAtOnePoint) {
  // Mean of SURE over noise draws versus the realized loss, fixed signal.
  const std::size_t N = 1000;
  const StoredObservation base = make_observation(N, 200, 1.0, 0.3, 4);
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  double diff_sum = 0.0, diff_sq = 0.0;
  const int M = 400;
  for (int m = 0; m < M; ++m) {
    NoisyObservation obs{base.x_o, 0.3};
    for (Eigen::Index i = 0; i < obs.x_tilde.size(); ++i) obs.x_tilde[i] += 0.3 * g(rng);
    const double d = sure_risk(obs, 0.4) - (soft_threshold(obs.x_tilde, 0.4) - base.x_o).squaredNorm() / N;
    diff_sum += d;
    diff_sq += d * d;
  }
  const double mean = diff_sum / M;
  const double se = std::sqrt((diff_sq / M - mean * mean) / M);
  EXPECT_LT(std::abs(mean), 4 * se);
}

TEST(SureDerivative, Examples) {
  const NoisyObservation obs = example_obs();
  EXPECT_EQ(sure_risk_derivative(obs, 3.5, 0.05), 0.0);
  const double expected = (oracle::sure({3, -1, 0.5}, 1, 2.05) - oracle::sure({3, -1, 0.5}, 1, 2.0)) / 0.05;
  EXPECT_NEAR(sure_risk_derivative(obs, 2.0, 0.05), expected, 1e-12);
  EXPECT_THROW(sure_risk_derivative(obs, 1.0, 0.0), ArgumentError);
  EXPECT_THROW(sure_risk_derivative(obs, -1.0, 0.1), ArgumentError);
}

TEST(SureDerivative, ForwardDifferenceOnClosedFormIsFirstOrder) {
  const SignalPrior p = point_mass(0.2125, 1.0);
  const double sigma = 0.4;
  for (double tau : {0.2, 0.6, 1.1}) {
    const double exact = ideal_risk_derivative(p, sigma, tau);
    std::vector<double> errs;
    for (double h : {1e-2, 1e-3, 1e-4}) {
      const double fd = (ideal_risk(p, sigma, tau + h) - ideal_risk(p, sigma, tau)) / h;
      errs.push_back(std::abs(fd - exact));
      EXPECT_LE(errs.back(), 5.0 * h);
    }
    EXPECT_LT(errs[1], errs[0] / 5);
    EXPECT_LT(errs[2], errs[1] / 5);
  }
}

TEST(IdealRisk, Examples) {
  for (double s : {0.0, 0.1, 0.5})
    for (double sigma : {0.3, 1.0}) EXPECT_NEAR(ideal_risk(point_mass(s, 1.7), sigma, 0.0), sigma * sigma, 1e-14);
  const SignalPrior p = point_mass(0.2125, 1.0);
  EXPECT_NEAR(ideal_risk(p, 0.5, 10 * (0.5 + 1.0)), 0.2125, 1e-8);
  const double ref = 2.0 * ((1.0 + 1.0) * 0.5 * std::erfc(1.0 / std::sqrt(2.0)) - std::exp(-0.5) / std::sqrt(2 * M_PI));
  EXPECT_NEAR(ideal_risk(point_mass(0.0, 1.0), 1.0, 1.0), ref, 1e-14);
  EXPECT_NEAR(ideal_risk(point_mass(0.0, 1.0), 1.0, 1.0), 0.1506796, 1e-7);
  EXPECT_THROW(ideal_risk(p, 0.0, 1.0), ArgumentError);
  EXPECT_THROW(ideal_risk(p, 1.0, -1.0), ArgumentError);
}

TEST(IdealRisk, AgreesWithIndependentMonteCarlo) {
  struct Case {
    double s, a, sigma, tau;
  };
  for (const Case c : {Case{0.0, 1.0, 1.0, 1.0}, Case{0.2125, 1.0, 0.5, 0.5}, Case{0.3, -2.0, 0.7, 1.3},
                       Case{0.05, 3.0, 0.2, 0.1}}) {
    const auto mc = oracle::mc_risk(c.s, c.a, c.sigma, c.tau, 2'000'000, 17);
    EXPECT_NEAR(ideal_risk(point_mass(c.s, c.a), c.sigma, c.tau), mc.mean, 4 * mc.std_error)
        << "s=" << c.s << " a=" << c.a << " sigma=" << c.sigma << " tau=" << c.tau;
  }
}

TEST(IdealRisk, LibraryMonteCarloAgreesWithClosedForm) {
  const SignalPrior p = point_mass(0.2125, 1.0);
  const MonteCarloEstimate mc = monte_carlo_risk(p, 0.5, 0.5, 1'000'000, 3);
  EXPECT_NEAR(mc.mean, ideal_risk(p, 0.5, 0.5), 4 * mc.std_error);
  EXPECT_EQ(monte_carlo_risk(p, 0.5, 0.5, 1000, 3).mean, monte_carlo_risk(p, 0.5, 0.5, 1000, 3).mean);
}

TEST(IdealRiskDerivative, Examples) {
  const SignalPrior zero = point_mass(0.0, 1.0);
  EXPECT_LT(ideal_risk_derivative(zero, 1.0, 1e-9), 0.0);
  const SignalPrior p = point_mass(0.2125, 1.0);
  for (double sigma : {0.2, 0.5, 1.2})
    for (double tau : {0.0, 0.3, 0.9, 2.0}) {
      const double fd = oracle::derivative([&](double t) { return ideal_risk(p, sigma, t); }, tau + 1e-4);
      EXPECT_NEAR(ideal_risk_derivative(p, sigma, tau + 1e-4), fd, 1e-6);
    }
  EXPECT_NEAR(ideal_risk_derivative(p, 0.5, 50.0), 0.0, 1e-12);
  const double h = 3.0 / 999.0;
  const double t_opt = oracle::grid_argmin([&](double t) { return ideal_risk(p, 0.5, t); }, 0.0, 3.0, 1000);
  // Grid resolution: |R'(t_opt)| <= max|R''| h.
  EXPECT_LT(std::abs(ideal_risk_derivative(p, 0.5, t_opt)), 2.0 * h);
}

TEST(IdealRiskDerivative, AtMostOneSignChange) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> us(0.0, 0.6), ua(0.2, 3.0), usig(0.05, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const SignalPrior p = point_mass(us(rng), ua(rng));
    const double sigma = usig(rng);
    const auto grid = linspace(0.0, 10 * (sigma + p.nonzero_value), 1000);
    int changes = 0, last = 0;
    for (double t : grid) {
      const double d = ideal_risk_derivative(p, sigma, t);
      const int s = d > 0 ? 1 : (d < 0 ? -1 : 0);
      if (s != 0 && last != 0 && s != last) ++changes;
      if (s != 0) last = s;
    }
    EXPECT_LE(changes, 1) << "s=" << p.sparsity_fraction << " a=" << p.nonzero_value << " sigma=" << sigma;
  }
}

TEST(SignalEnergy, Examples) {
  EXPECT_NEAR(signal_energy_estimate(example_obs()), 10.25 / 3.0 - 1.0, 1e-15);
  EXPECT_EQ(signal_energy_estimate({Vector::Zero(5), 1.0}), -1.0);
}

TEST(RiskCurve, SureAndIdeal) {
  const NoisyObservation obs = random_obs(2000, 0.2125, 1.0, 0.5, 5);
  const auto grid = linspace(0, 3, 61);
  const RiskCurve s = risk_curve(obs, grid);
  EXPECT_EQ(s.estimator, RiskEstimator::Sure);
  EXPECT_EQ(s.values.size(), grid.size());
  EXPECT_EQ(s.values[0], 0.25);
  const RiskCurve i = risk_curve(point_mass(0.2125, 1.0), 0.5, grid);
  EXPECT_EQ(i.estimator, RiskEstimator::IdealClosedForm);
  // SURE tracks the exact risk at this size.
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_NEAR(s.values[k], i.values[k], 0.03);
  EXPECT_THROW(risk_curve(obs, {}), ArgumentError);
  EXPECT_THROW(risk_curve(obs, {0.5, 0.2}), ArgumentError);
  EXPECT_THROW(risk_curve(obs, {-0.5, 0.2}), ArgumentError);
}

TEST(RiskCurve, SupGapShrinksWithN) {
  const SignalPrior p = point_mass(0.2, 1.0);
  const auto grid = linspace(0, 3, 31);
  auto median_gap = [&](std::size_t N) {
    std::vector<double> gaps;
    for (std::uint64_t s = 0; s < 11; ++s) {
      const NoisyObservation obs = random_obs(N, 0.2, 1.0, 0.5, 100 + s);
      double gap = 0.0;
      for (double t : grid) gap = std::max(gap, std::abs(sure_risk(obs, t) - ideal_risk(p, 0.5, t)));
      gaps.push_back(gap);
    }
    std::nth_element(gaps.begin(), gaps.begin() + 5, gaps.end());
    return gaps[5];
  };
  const double small = median_gap(500), large = median_gap(8000);
  EXPECT_GT(small / large, 2.0);  // sqrt(16) = 4 in expectation
}

TEST(Linspace, Endpoints) {
  const auto g = linspace(0.1, 2.5, 300);
  EXPECT_EQ(g.size(), 300u);
  EXPECT_EQ(g.front(), 0.1);
  EXPECT_EQ(g.back(), 2.5);
  EXPECT_NEAR(g[1] - g[0], 2.4 / 299, 1e-15);
  EXPECT_EQ(linspace(3, 5, 1), std::vector<double>{3});
  EXPECT_THROW(linspace(0, 1, 0), ArgumentError);
}
