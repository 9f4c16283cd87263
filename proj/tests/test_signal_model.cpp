#include "pamp/signal_model.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pamp;

namespace {

ProblemConfig config(std::size_t N, double delta, double rho, double sigma_w = 0.0, std::uint64_t seed = 1) {
  ProblemConfig c;
  c.N = N;
  c.delta = delta;
  c.rho = rho;
  c.sigma_w = sigma_w;
  c.seed = seed;
  return c;
}

ProblemInstance square(Matrix A) {
  ProblemInstance inst;
  inst.A = std::move(A);
  return inst;
}

}  // namespace

TEST(SignalModel, TinyNoiselessInstance) {
  const ProblemInstance inst = generate_instance(config(4, 1.0, 0.5));
  EXPECT_EQ(inst.A.rows(), 4);
  EXPECT_EQ(inst.A.cols(), 4);
  EXPECT_EQ(inst.config.k(), 2u);
  EXPECT_EQ(inst.w.size(), 4);
  EXPECT_EQ(inst.w.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((inst.y - inst.A * inst.x_o).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SignalModel, PaperDimensions) {
  const ProblemConfig c = config(2000, 0.85, 0.25);
  EXPECT_EQ(c.n(), 1700u);
  EXPECT_EQ(c.k(), 425u);
  EXPECT_DOUBLE_EQ(c.prior().sparsity_fraction, 425.0 / 2000.0);
}

TEST(SignalModel, ColumnNormsConcentrate) {
  // n = 1700 rows, 100 instances.
  for (std::uint64_t s = 0; s < 100; ++s) {
    const ProblemInstance inst = generate_instance(config(2000, 0.85, 0.25, 0.0, s));
    ASSERT_EQ(inst.A.rows(), 1700);
    const double mean_norm = inst.A.colwise().norm().mean();
    EXPECT_NEAR(mean_norm, 1.0, 0.05);
    EXPECT_GT(inst.min_column_norm, 0.85);
    EXPECT_LT(inst.max_column_norm, 1.15);
  }
}

TEST(SignalModel, InstanceInvariants) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const ProblemConfig c = config(500, 0.6, 0.3, 0.1, seed);
    const ProblemInstance inst = generate_instance(c);
    EXPECT_LE((inst.y - inst.A * inst.x_o - inst.w).norm(), 1e-12 * inst.y.norm());
    EXPECT_EQ(static_cast<std::size_t>((inst.x_o.array() != 0.0).count()), c.k());
    for (Eigen::Index i = 0; i < inst.x_o.size(); ++i)
      if (inst.x_o[i] != 0.0) {
        EXPECT_EQ(inst.x_o[i], c.nonzero_value);
      }
    // Entries of A ~ N(0, 1/n); of w ~ N(0, sigma_w^2).
    const double n = static_cast<double>(c.n());
    const double var_a = inst.A.squaredNorm() / static_cast<double>(inst.A.size());
    EXPECT_NEAR(var_a * n, 1.0, 0.02);
    EXPECT_NEAR(std::sqrt(inst.w.squaredNorm() / n), 0.1, 0.01);
  }
}

TEST(SignalModel, Deterministic) {
  const ProblemConfig c = config(300, 0.7, 0.2, 0.05, 42);
  const ProblemInstance a = generate_instance(c);
  const ProblemInstance b = generate_instance(c);
  EXPECT_TRUE(a.A == b.A);
  EXPECT_TRUE(a.x_o == b.x_o);
  EXPECT_TRUE(a.w == b.w);
  EXPECT_TRUE(a.y == b.y);
  ProblemConfig d = c;
  d.seed = 43;
  EXPECT_FALSE(generate_instance(d).A == a.A);
}

TEST(SignalModel, StreamsAreDisjoint) {
  auto m = make_engine(9, Stream::Matrix);
  auto s = make_engine(9, Stream::Support);
  auto w = make_engine(9, Stream::Noise);
  const auto a = m(), b = s(), c = w();
  EXPECT_NE(a, b);
  EXPECT_NE(b, c);
  EXPECT_NE(a, c);
}

TEST(SignalModel, InvalidConfig) {
  EXPECT_THROW(generate_instance(config(0, 0.5, 0.1)), ConfigError);
  EXPECT_THROW(generate_instance(config(10, 0.0, 0.1)), ConfigError);
  EXPECT_THROW(generate_instance(config(10, 1.5, 0.1)), ConfigError);
  EXPECT_THROW(generate_instance(config(10, 0.5, -0.1)), ConfigError);
  EXPECT_THROW(generate_instance(config(10, 0.5, 1.1)), ConfigError);
  EXPECT_THROW(generate_instance(config(10, 0.05, 0.1)), ConfigError);  // n = 0
  EXPECT_THROW(generate_instance(config(10, 0.5, 0.1, -1.0)), ConfigError);
}

TEST(SignalModel, ApplyAExamples) {
  const ProblemInstance id = square(Matrix::Identity(2, 2));
  EXPECT_TRUE(apply_A(id, Vector::LinSpaced(2, 1, 2)).isApprox(Vector::LinSpaced(2, 1, 2)));
  EXPECT_EQ(apply_A(id, Vector::Zero(2)).norm(), 0.0);
  Matrix A(2, 2);
  A << 1, 2, 3, 4;
  const ProblemInstance inst = square(A);
  const Vector out = apply_A(inst, Vector::Ones(2));
  EXPECT_EQ(out[0], 3.0);
  EXPECT_EQ(out[1], 7.0);
}

TEST(SignalModel, ApplyAtExamples) {
  const ProblemInstance id = square(Matrix::Identity(2, 2));
  EXPECT_TRUE(apply_At(id, Vector::LinSpaced(2, 1, 2)).isApprox(Vector::LinSpaced(2, 1, 2)));
  EXPECT_EQ(apply_At(id, Vector::Zero(2)).norm(), 0.0);
  Matrix A(2, 2);
  A << 1, 2, 3, 4;
  const Vector out = apply_At(square(A), Vector::Ones(2));
  EXPECT_EQ(out[0], 4.0);
  EXPECT_EQ(out[1], 6.0);
}

TEST(SignalModel, ApplyAMatchesNaiveProduct) {
  const ProblemInstance inst = generate_instance(config(60, 0.5, 0.2, 0.0, 5));
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(inst.A.rows()));
  for (Eigen::Index i = 0; i < inst.A.rows(); ++i)
    for (Eigen::Index j = 0; j < inst.A.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(inst.A(i, j));
  std::vector<double> v(60);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::sin(static_cast<double>(j));
  const auto ref = oracle::matvec(rows, v);
  const Vector got = apply_A(inst, Eigen::Map<const Vector>(v.data(), 60));
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(got[static_cast<Eigen::Index>(i)], ref[i], 1e-12);
}

TEST(SignalModel, DimensionErrors) {
  const ProblemInstance inst = generate_instance(config(10, 0.5, 0.2));
  EXPECT_THROW(apply_A(inst, Vector::Zero(9)), DimensionError);
  EXPECT_THROW(apply_At(inst, Vector::Zero(10)), DimensionError);
}

TEST(SignalModel, GramConsistency) {
  const ProblemInstance inst = generate_instance(config(80, 0.5, 0.2, 0.0, 8));
  for (Eigen::Index i : {0, 7, 33}) {
    for (Eigen::Index j : {1, 7, 79}) {
      const Vector ei = Vector::Unit(80, i);
      const Vector ej = Vector::Unit(80, j);
      const double direct = apply_A(inst, ei).dot(apply_A(inst, ej));
      const double via_t = apply_At(inst, apply_A(inst, ei))[j];
      EXPECT_NEAR(direct, via_t, 1e-12 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST(SignalModel, PriorSecondMoment) {
  EXPECT_DOUBLE_EQ(prior_second_moment({0.2125, 1.0, PriorKind::PointMass}), 0.2125);
  EXPECT_EQ(prior_second_moment({0.0, 7.0, PriorKind::PointMass}), 0.0);
  EXPECT_EQ(prior_second_moment({1.0, 2.0, PriorKind::PointMass}), 4.0);
  EXPECT_THROW(prior_second_moment({1.5, 1.0, PriorKind::PointMass}), ConfigError);
}

TEST(SignalModel, EmpiricalSecondMomentMatchesPrior) {
  // Exactly k nonzeros of value a, so ||x_o||^2 / N = k a^2 / N = s a^2.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ProblemConfig c = config(1000, 0.5, 0.3, 0.0, seed);
    c.nonzero_value = 1.7;
    const ProblemInstance inst = generate_instance(c);
    EXPECT_NEAR(inst.x_o.squaredNorm() / 1000.0, prior_second_moment(c.prior()), 1e-12);
  }
}
