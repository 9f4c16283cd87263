#pragma once

// Reference computations that share no code with the library: plain loops,
// their own random streams, numerical calculus.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline double soft(double v, double tau) {
  if (v > tau) return v - tau;
  if (v < -tau) return v + tau;
  return 0.0;
}

/// SURE written out term by term with the +sigma^2 convention.
inline double sure(const std::vector<double>& x, double sigma, double tau) {
  const double N = static_cast<double>(x.size());
  double fit = 0.0;
  double div = 0.0;
  for (double v : x) {
    const double e = soft(v, tau) - v;
    fit += e * e;
    div += (std::abs(v) > tau ? 1.0 : 0.0) - 1.0;
  }
  return fit / N + sigma * sigma + 2.0 * sigma * sigma * div / N;
}

struct McResult {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo Bayes risk E(eta(X + sigma W; tau) - X)^2 for the point-mass
/// prior P(X = a) = s, P(X = 0) = 1 - s.
inline McResult mc_risk(double s, double a, double sigma, double tau, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 12345);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution b(s);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = b(rng) ? a : 0.0;
    const double e = soft(x + sigma * g(rng), tau) - x;
    sum += e * e;
    sum_sq += e * e * e * e;
  }
  const double m = static_cast<double>(samples);
  const double mean = sum / m;
  return {mean, std::sqrt(std::max(sum_sq / m - mean * mean, 0.0) / m)};
}

/// Central difference.
inline double derivative(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double grid_argmin(const std::function<double(double)>& f, double lo, double hi, int points) {
  double best = lo, fbest = f(lo);
  for (int i = 1; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    const double v = f(x);
    if (v < fbest) {
      fbest = v;
      best = x;
    }
  }
  return best;
}

/// Naive row-by-row product for checking matrix kernels.
inline std::vector<double> matvec(const std::vector<std::vector<double>>& A, const std::vector<double>& v) {
  std::vector<double> out(A.size(), 0.0);
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += A[i][j] * v[j];
  return out;
}

inline double excess_kurtosis(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    m2 += (x - m) * (x - m);
    m4 += std::pow(x - m, 4);
  }
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2) - 3.0;
}

}  // namespace oracle
