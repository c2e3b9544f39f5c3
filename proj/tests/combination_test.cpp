#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cgak/combination.hpp"
#include "cgak/error.hpp"
#include "test_support.hpp"

using namespace cgak;

namespace {

GramMatrix random_gak_gram(std::mt19937_64& rng, std::size_t n, double sigma) {
  std::uniform_int_distribution<std::size_t> len(1, 6);
  std::vector<SortedSequence> seqs;
  for (std::size_t i = 0; i < n; ++i)
    seqs.push_back(fixtures::as_sorted(fixtures::random_sequence(rng, len(rng), 3, false)));
  return gram(seqs, KernelSpec{KernelKind::gak, DivergenceKind::sq_euclidean, sigma});
}

GramMatrix rbf(const std::vector<double>& x, double gamma) {
  GramMatrix g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) g(i, j) = std::exp(-gamma * (x[i] - x[j]) * (x[i] - x[j]));
  return g;
}

// Labels are a smooth function of x; z is unrelated to them.
struct TwoKernelProblem {
  std::vector<GramMatrix> grams;
  std::vector<double> labels;
};

TwoKernelProblem informative_vs_noise(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 4);
  std::vector<double> x(40), z(40), y(40);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = u(rng);
    z[i] = u(rng);
    y[i] = std::sin(x[i]) + 0.5 * x[i];
  }
  return {{rbf(x, 1.0), rbf(z, 1.0)}, y};
}

}  // namespace

TEST(Combine, IdentityElements) {
  std::mt19937_64 rng(1);
  const auto a = random_gak_gram(rng, 6, 1.0);
  const GramMatrix zero(6, 0.0), ones(6, 1.0);
  EXPECT_EQ(combine(a, zero, CombinationStrategy::summation).values(), a.values());
  EXPECT_EQ(combine(a, ones, CombinationStrategy::multiplication).values(), a.values());
  const std::vector<double> beta{1.0, 0.0};
  EXPECT_EQ(combine(a, ones, CombinationStrategy::weighted_summation, beta).values(), a.values());
}

TEST(Combine, MetadataRecordsStrategyAndBeta) {
  std::mt19937_64 rng(2);
  auto a = random_gak_gram(rng, 4, 1.0);
  auto b = a;
  a.metadata.channel = "hist";
  b.metadata.channel = "embed";
  const std::vector<double> beta{0.3, 0.7};
  const auto c = combine(a, b, CombinationStrategy::weighted_summation, beta);
  EXPECT_EQ(c.metadata.channel, "hist+embed");
  EXPECT_EQ(c.metadata.strategy, "weighted");
  EXPECT_EQ(c.metadata.beta, beta);
  b.metadata.dataset_hash = 99;
  EXPECT_THROW(combine(a, b, CombinationStrategy::summation), ValidationError);
  EXPECT_THROW(combine(a, GramMatrix(3), CombinationStrategy::summation), ValidationError);
  const std::vector<double> negative{-0.1, 1.1};
  EXPECT_THROW(combine(a, a, CombinationStrategy::weighted_summation, negative), ValidationError);
}

TEST(Combine, PsdClosure) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 10; ++t) {
    const auto a = random_gak_gram(rng, 15, 0.5 + t);
    const auto b = random_gak_gram(rng, 15, 1.0 + 3 * t);
    const double b0 = u(rng);
    const std::vector<double> beta{b0, 1 - b0};
    for (auto s : {CombinationStrategy::summation, CombinationStrategy::multiplication,
                   CombinationStrategy::weighted_summation}) {
      const auto r = psd_check(combine(a, b, s, beta));
      EXPECT_TRUE(r.is_psd) << to_string(s) << " min eig " << r.min_eigenvalue;
    }
  }
}

TEST(Combine, CellValues) {
  const std::vector<double> v{2.0, 3.0}, beta{0.25, 0.75};
  EXPECT_EQ(combine_values(v, CombinationStrategy::summation), 5.0);
  EXPECT_EQ(combine_values(v, CombinationStrategy::multiplication), 6.0);
  EXPECT_EQ(combine_values(v, CombinationStrategy::weighted_summation, beta), 2.75);
  EXPECT_EQ(combine_values(std::vector<double>{4.0}, CombinationStrategy::single), 4.0);
  EXPECT_THROW(combine_values(v, CombinationStrategy::single), ValidationError);
}

TEST(Softmax, Examples) {
  auto s = GatingState::uniform(2);
  EXPECT_EQ(softmax_weights(s), (std::vector<double>{0.5, 0.5}));
  s.offsets = {10, -10};
  const auto b = softmax_weights(s);
  EXPECT_NEAR(b[1], 2.0611536181902037e-09, 1e-22);
  EXPECT_NEAR(b[0], 1 - 2.0611536181902037e-09, 1e-15);
  EXPECT_NEAR(b[0] + b[1], 1.0, 1e-15);
  EXPECT_THROW(softmax_weights(GatingState::uniform(1)), ValidationError);
}

TEST(Softmax, InvariantsOnRandomStates) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 20);
  for (int t = 0; t < 200; ++t) {
    auto s = GatingState::uniform(2 + t % 4);
    for (auto& v : s.offsets) v = n(rng);
    const auto b = softmax_weights(s);
    EXPECT_NEAR(std::accumulate(b.begin(), b.end(), 0.0), 1.0, 1e-15);
    for (double x : b) EXPECT_GE(x, 0.0);
    auto shifted = s;
    const double c = n(rng);
    for (auto& v : shifted.offsets) v += c;
    const auto bs = softmax_weights(shifted);
    for (std::size_t q = 0; q < b.size(); ++q) EXPECT_NEAR(bs[q], b[q], 1e-12);
  }
}

TEST(Strategy, NamesRoundTrip) {
  for (auto s : {CombinationStrategy::single, CombinationStrategy::summation,
                 CombinationStrategy::multiplication, CombinationStrategy::weighted_summation})
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_EQ(to_string(CombinationStrategy::weighted_summation), "weighted");
  EXPECT_EQ(to_string(CombinationStrategy::multiplication), "prod");
}

TEST(Gating, IdenticalKernelsStopAtFirstIteration) {
  const auto p = informative_vs_noise(5);
  const std::vector<GramMatrix> same{p.grams[0], p.grams[0]};
  const auto s = fit_gating(same, p.labels, SvrConfig{1.0, 0.1});
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.iterations, 1u);
  EXPECT_EQ(softmax_weights(s), (std::vector<double>{0.5, 0.5}));
}

TEST(Gating, ZeroIterationsReturnsUniform) {
  const auto p = informative_vs_noise(6);
  GatingOptions opt;
  opt.max_iterations = 0;
  const auto s = fit_gating(p.grams, p.labels, SvrConfig{}, opt);
  EXPECT_EQ(softmax_weights(s), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(s.iterations, 0u);
}

TEST(Gating, PrefersInformativeKernelAndMatchesGridSearch) {
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    const auto p = informative_vs_noise(seed);
    const SvrConfig svr{1.0, 0.05};
    const auto s = fit_gating(p.grams, p.labels, svr);
    const auto beta = softmax_weights(s);
    EXPECT_GT(beta[0], 0.5) << "seed " << seed;
    EXPECT_GT(beta[0], beta[1]);

    double best = std::numeric_limits<double>::infinity();
    double best_b = 0;
    for (int k = 0; k <= 10; ++k) {
      const std::vector<double> b{k / 10.0, 1 - k / 10.0};
      const double j = gated_objective(p.grams, p.labels, b, svr);
      if (j < best) best = j, best_b = b[0];
    }
    EXPECT_GE(best_b, 0.5);
    const double fitted = gated_objective(p.grams, p.labels, beta, svr);
    EXPECT_LE(fitted, best * 1.01 + 1e-12) << "seed " << seed;

    ASSERT_FALSE(s.objective_trace.empty());
    for (std::size_t i = 1; i < s.objective_trace.size(); ++i)
      EXPECT_LE(s.objective_trace[i], s.objective_trace[i - 1]);
  }
}

TEST(Gating, ThreeKernels) {
  auto p = informative_vs_noise(10);
  p.grams.push_back(p.grams[1]);
  const auto s = fit_gating(p.grams, p.labels, SvrConfig{1.0, 0.05});
  const auto beta = softmax_weights(s);
  ASSERT_EQ(beta.size(), 3u);
  EXPECT_GT(beta[0], beta[1]);
  EXPECT_NEAR(beta[1], beta[2], 1e-12);
}
