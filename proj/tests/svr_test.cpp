#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cgak/error.hpp"
#include "cgak/svr.hpp"
#include "oracles.hpp"

using namespace cgak;

namespace {

GramMatrix rbf_gram(const std::vector<double>& x, double gamma) {
  GramMatrix g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) g(i, j) = std::exp(-gamma * (x[i] - x[j]) * (x[i] - x[j]));
  return g;
}

std::vector<double> fitted(const GramMatrix& g, const SvrModel& m) {
  std::vector<double> out;
  for (std::size_t i = 0; i < g.size(); ++i) out.push_back(svr_predict(m, g.row(i)));
  return out;
}

}  // namespace

TEST(Svr, ConstantLabels) {
  const auto g = rbf_gram({0, 0.3, 1.0, 2.0, 2.2}, 0.5);
  const std::vector<double> y(5, 3.2);
  const auto m = svr_fit(g, y, SvrConfig{});
  for (double t : m.theta) EXPECT_EQ(t, 0.0);
  EXPECT_NEAR(m.bias, 3.2, 1e-12);
  for (double p : fitted(g, m)) EXPECT_NEAR(p, 3.2, 1e-12);
  EXPECT_TRUE(m.support.empty());
}

TEST(Svr, TwoPointInteriorMatchesHandSolution) {
  const GramMatrix k(2, std::vector<double>{2, 0.5, 0.5, 1});
  const std::vector<double> y{1, -0.5};
  const SvrConfig cfg{1.0, 0.1};
  const auto m = svr_fit(k, y, cfg);
  // theta_1 = (y1 - y2 - 2 eps) / (K11 - 2 K12 + K22), b from the first tube edge
  EXPECT_NEAR(m.theta[0], 0.65, 1e-9);
  EXPECT_NEAR(m.theta[1], -0.65, 1e-9);
  EXPECT_NEAR(m.bias, -0.075, 1e-9);
}

TEST(Svr, TwoPointMatchesGridSearch) {
  const std::vector<std::pair<GramMatrix, std::vector<double>>> problems{
      {GramMatrix(2, {2, 0.5, 0.5, 1}), {1, -0.5}},
      {GramMatrix(2, {2, 0.5, 0.5, 1}), {3, -3}},
      {GramMatrix(2, {1, 0.9, 0.9, 1}), {0.2, 0.7}},
      {GramMatrix(2, {1.5, -0.3, -0.3, 0.8}), {0.05, 0.0}},
  };
  for (const auto& [k, y] : problems) {
    const SvrConfig cfg{1.0, 0.1};
    const auto m = svr_fit(k, y, cfg);
    const double kk[2][2] = {{k(0, 0), k(0, 1)}, {k(1, 0), k(1, 1)}};
    const double yy[2] = {y[0], y[1]};
    const auto ref = fixtures::svr_grid_search(kk, yy, cfg.C, cfg.epsilon);
    EXPECT_NEAR(m.theta[0], ref.theta1, 1e-4);
    EXPECT_NEAR(m.objective, ref.value, 1e-4);
    EXPECT_GE(m.objective, ref.value - 1e-12);
  }
}

// Reference multipliers from an interior-point QP solve of the same dual.
TEST(Svr, MatchesQpReferenceOnRbfProblem) {
  const std::vector<double> x{0, 0.5, 1.1, 1.7, 2.3, 3.0};
  std::vector<double> y;
  for (double v : x) y.push_back(std::sin(v) + v);
  const auto g = rbf_gram(x, 0.5);
  const auto m = svr_fit(g, y, SvrConfig{2.0, 0.1});
  const std::vector<double> ref{-1.9999999999999636, 0, 0.9521368386482199, 0, 0, 1.0478631613505998};
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(m.theta[i], ref[i], 1e-5) << i;
  EXPECT_NEAR(m.objective, 2.6841338485071722, 1e-7);
}

TEST(Svr, MatchesQpReferenceOnLinearProblem) {
  std::vector<double> x, y;
  for (int i = 0; i < 8; ++i) x.push_back(i / 7.0), y.push_back(2 * i / 7.0);
  GramMatrix g(8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) g(i, j) = x[i] * x[j];
  const SvrConfig cfg{100.0, 0.01};
  const auto m = svr_fit(g, y, cfg);
  EXPECT_NEAR(m.theta.front(), -1.9799999999990625, 1e-5);
  EXPECT_NEAR(m.theta.back(), 1.979999999999063, 1e-5);
  EXPECT_NEAR(m.objective, 1.960199999999958, 1e-7);
  const auto p = fitted(g, m);
  for (int i = 0; i < 8; ++i) EXPECT_LE(std::abs(p[i] - y[i]), cfg.epsilon + 1e-6) << i;
}

TEST(Svr, KktEqualityAndTubeOnRandomPsdGrams) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t N = 10 + 5 * (trial % 6);
    std::vector<double> x(N), y(N);
    for (std::size_t i = 0; i < N; ++i) x[i] = 3 * n(rng), y[i] = std::cos(x[i]) + 0.1 * n(rng);
    const auto g = rbf_gram(x, 0.3 + 0.1 * (trial % 4));
    const SvrConfig cfg{0.5 + trial % 3, 0.05};
    const auto m = svr_fit(g, y, cfg);
    ASSERT_TRUE(m.converged);
    EXPECT_FALSE(m.nonconvex);
    EXPECT_LE(svr_kkt_violation(g, y, m.alpha_plus, m.alpha_minus, cfg), 1e-6);
    EXPECT_NEAR(std::accumulate(m.theta.begin(), m.theta.end(), 0.0), 0.0, 1e-10);
    const auto p = fitted(g, m);
    for (std::size_t i = 0; i < N; ++i) {
      EXPECT_GE(m.alpha_plus[i], 0.0);
      EXPECT_LE(m.alpha_plus[i], cfg.C);
      EXPECT_GE(m.alpha_minus[i], 0.0);
      EXPECT_LE(m.alpha_minus[i], cfg.C);
      EXPECT_EQ(m.alpha_plus[i] * m.alpha_minus[i], 0.0);
      // A free multiplier pins the fit to the tube edge on its side.
      if (m.alpha_plus[i] > 0 && m.alpha_plus[i] < cfg.C)
        EXPECT_NEAR(p[i], y[i] - cfg.epsilon, 1e-5);
      if (m.alpha_minus[i] > 0 && m.alpha_minus[i] < cfg.C)
        EXPECT_NEAR(p[i], y[i] + cfg.epsilon, 1e-5);
    }
  }
}

TEST(Svr, DeterministicAndWarmStartReachesSameOptimum) {
  const std::vector<double> x{0, 0.4, 0.9, 1.3, 2.0, 2.6, 3.1, 3.9};
  std::vector<double> y;
  for (double v : x) y.push_back(v * v / 4);
  const auto g = rbf_gram(x, 1.0);
  const SvrConfig cfg{5.0, 0.05};
  const auto a = svr_fit(g, y, cfg);
  const auto b = svr_fit(g, y, cfg);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.bias, b.bias);
  const auto w = svr_fit(g, y, cfg, &a);
  EXPECT_NEAR(w.objective, a.objective, 1e-9);
  EXPECT_LE(w.iterations, a.iterations);
}

TEST(Svr, IndefiniteGramIsFlagged) {
  // K_00 + K_11 - 2 K_01 < 0, and (0, 1) is the only pair.
  GramMatrix g(2, std::vector<double>{1, 3, 3, 1});
  const std::vector<double> y{0, 1};
  const auto m = svr_fit(g, y, SvrConfig{1.0, 0.1});
  EXPECT_TRUE(m.nonconvex);
  for (double t : m.theta) EXPECT_TRUE(std::isfinite(t));
}

TEST(Svr, Preconditions) {
  GramMatrix g(2, std::vector<double>{1, 0, 0, 1});
  const std::vector<double> y3{1, 2, 3}, ynan{1, std::nan("")};
  EXPECT_THROW(svr_fit(g, y3, SvrConfig{}), ValidationError);
  EXPECT_THROW(svr_fit(g, ynan, SvrConfig{}), ValidationError);
  EXPECT_THROW(svr_fit(g, std::vector<double>{1, 2}, SvrConfig{-1.0, 0.1}), ValidationError);
  GramMatrix asym(2, std::vector<double>{1, 0.5, 0, 1});
  EXPECT_THROW(svr_fit(asym, std::vector<double>{1, 2}, SvrConfig{}), ValidationError);
}

TEST(Svr, IterationCapReturnsFlaggedIterate) {
  const auto g = rbf_gram({0, 0.5, 1.1, 1.7, 2.3, 3.0, 3.3, 4.0}, 0.5);
  std::vector<double> y{0, 1, 0, 1, 0, 1, 0, 1};
  SvrConfig cfg{10.0, 0.01};
  cfg.max_iterations = 2;
  const auto m = svr_fit(g, y, cfg);
  EXPECT_FALSE(m.converged);
  EXPECT_GT(m.kkt_gap, cfg.tolerance);
  EXPECT_NEAR(std::accumulate(m.theta.begin(), m.theta.end(), 0.0), 0.0, 1e-10);
}

TEST(SvrPredict, Examples) {
  SvrModel m;
  m.theta = {0, 0, 0};
  m.bias = 3.2;
  const std::vector<double> row{5, 6, 7}, zeros{0, 0, 0};
  EXPECT_EQ(svr_predict(m, row), 3.2);
  m.theta = {1, -2, 1};
  EXPECT_EQ(svr_predict(m, zeros), 3.2);
  EXPECT_EQ(svr_predict(m, row), 3.2);
  EXPECT_THROW(svr_predict(m, std::vector<double>{1}), ValidationError);
}
