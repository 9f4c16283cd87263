#pragma once

// Problem instances y = A x_o + w with a Gaussian measurement ensemble and a
// sparse point-mass signal.

#include "pamp/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace pamp {

enum class PriorKind { PointMass };

/// Limiting signal distribution: (1 - s) delta_0 + s delta_a.
struct SignalPrior {
  double sparsity_fraction = 0.0;
  double nonzero_value = 1.0;
  PriorKind kind = PriorKind::PointMass;

  void validate() const {
    if (!(sparsity_fraction >= 0.0 && sparsity_fraction <= 1.0))
      throw ConfigError("sparsity_fraction must lie in [0, 1]");
    if (!std::isfinite(nonzero_value)) throw ConfigError("nonzero_value must be finite");
  }

  double second_moment() const { return sparsity_fraction * nonzero_value * nonzero_value; }
};

inline double prior_second_moment(const SignalPrior& prior) {
  prior.validate();
  return prior.second_moment();
}

struct ProblemConfig {
  std::size_t N = 0;
  double delta = 1.0;      // n / N
  double rho = 0.0;        // k / n
  double sigma_w = 0.0;    // measurement noise std
  double nonzero_value = 1.0;
  std::uint64_t seed = 0;

  std::size_t n() const { return static_cast<std::size_t>(std::floor(delta * static_cast<double>(N))); }
  std::size_t k() const { return static_cast<std::size_t>(std::floor(rho * static_cast<double>(n()))); }

  void validate() const {
    if (N == 0) throw ConfigError("N must be positive");
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
    if (!(sigma_w >= 0.0) || !std::isfinite(sigma_w)) throw ConfigError("sigma_w must be >= 0");
    if (!std::isfinite(nonzero_value)) throw ConfigError("nonzero_value must be finite");
    if (n() < 1) throw ConfigError("floor(delta * N) must be at least 1");
    if (k() > N) throw ConfigError("k exceeds N");
  }

  /// Empirical prior of generated instances: sparsity_fraction = k / N.
  SignalPrior prior() const {
    return SignalPrior{static_cast<double>(k()) / static_cast<double>(N), nonzero_value,
                       PriorKind::PointMass};
  }
};

/// Disjoint random streams of one instance seed.
enum class Stream : std::uint32_t { Matrix = 1, Support = 2, Noise = 3, Observation = 4 };

/// mt19937_64 seeded through std::seed_seq from (seed, stream). Streams with
/// different tags never share state.
inline std::mt19937_64 make_engine(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffULL),
                    static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(stream),
                    0x70616d70U};
  return std::mt19937_64(seq);
}

struct ProblemInstance {
  Matrix A;      // n x N, row-major
  Vector x_o;    // empty when the signal is unknown (loaded measurements only)
  Vector w;
  Vector y;
  ProblemConfig config;
  double min_column_norm = 0.0;
  double max_column_norm = 0.0;

  std::size_t rows() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(A.cols()); }
  bool has_signal() const { return x_o.size() == A.cols() && A.cols() > 0; }
};

inline void column_norm_extrema(const Matrix& A, double& lo, double& hi) {
  if (A.cols() == 0) {
    lo = hi = 0.0;
    return;
  }
  const Eigen::RowVectorXd norms = A.colwise().norm();
  lo = norms.minCoeff();
  hi = norms.maxCoeff();
}

inline ProblemInstance generate_instance(const ProblemConfig& config) {
  config.validate();
  const std::size_t N = config.N;
  const std::size_t n = config.n();
  const std::size_t k = config.k();

  ProblemInstance inst;
  inst.config = config;

  {
    auto engine = make_engine(config.seed, Stream::Matrix);
    std::normal_distribution<double> entry(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
    inst.A.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(N));
    double* data = inst.A.data();
    for (std::size_t i = 0; i < n * N; ++i) data[i] = entry(engine);
  }

  {
    auto engine = make_engine(config.seed, Stream::Support);
    std::vector<std::size_t> all(N);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> support;
    support.reserve(k);
    std::sample(all.begin(), all.end(), std::back_inserter(support), k, engine);
    inst.x_o = Vector::Zero(static_cast<Eigen::Index>(N));
    for (std::size_t i : support) inst.x_o[static_cast<Eigen::Index>(i)] = config.nonzero_value;
  }

  inst.w = Vector::Zero(static_cast<Eigen::Index>(n));
  if (config.sigma_w > 0.0) {
    auto engine = make_engine(config.seed, Stream::Noise);
    std::normal_distribution<double> noise(0.0, config.sigma_w);
    for (Eigen::Index i = 0; i < inst.w.size(); ++i) inst.w[i] = noise(engine);
  }

  inst.y = inst.A * inst.x_o + inst.w;
  column_norm_extrema(inst.A, inst.min_column_norm, inst.max_column_norm);
  return inst;
}

inline Vector apply_A(const Matrix& A, const Vector& v) {
  if (v.size() != A.cols())
    throw DimensionError("apply_A: vector length " + std::to_string(v.size()) + " != N = " +
                         std::to_string(A.cols()));
  return A * v;
}

inline Vector apply_At(const Matrix& A, const Vector& u) {
  if (u.size() != A.rows())
    throw DimensionError("apply_At: vector length " + std::to_string(u.size()) + " != n = " +
                         std::to_string(A.rows()));
  return A.transpose() * u;
}

inline Vector apply_A(const ProblemInstance& inst, const Vector& v) { return apply_A(inst.A, v); }
inline Vector apply_At(const ProblemInstance& inst, const Vector& u) { return apply_At(inst.A, u); }

}  // namespace pamp
