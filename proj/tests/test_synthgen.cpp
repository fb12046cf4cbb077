#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ope/ope.hpp"

using namespace ope;

namespace {

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.x_num = 200;
  cfg.a_num = 6;
  cfg.c_num = 5;
  return cfg;
}

}  // namespace

TEST(Centers, UniformInDisk) {
  RandomStream rng(1, 1);
  Matrix c = generate_cluster_centers(1000, 10.0, 2, rng);
  std::size_t inner = 0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    double r = norm2(c.row(i));
    ASSERT_LT(r, 10.0);
    inner += r < 10.0 / std::sqrt(2.0);
  }
  EXPECT_NEAR(inner / 1000.0, 0.5, 0.05);
}

TEST(Centers, MeanNormInThreeDimensions) {
  RandomStream rng(2, 1);
  Matrix c = generate_cluster_centers(5000, 1.0, 3, rng);
  double s = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i) s += norm2(c.row(i));
  EXPECT_NEAR(s / 5000.0, 0.75, 0.02);
}

TEST(Centers, TinyRadiusNearOrigin) {
  RandomStream rng(3, 1);
  Matrix c = generate_cluster_centers(1, 1e-12, 4, rng);
  EXPECT_LT(norm2(c.row(0)), 1e-11);
}

TEST(ContextSpace, SizesAndRadius) {
  SynthConfig cfg;
  RandomStream rng(4, 1);
  ContextSpace cs = generate_context_space(cfg, rng);
  EXPECT_EQ(std::accumulate(cs.cluster_sizes.begin(), cs.cluster_sizes.end(), 0), 1000);
  ASSERT_EQ(cs.contexts.rows(), 1000u);
  for (std::size_t k = 0; k < cs.contexts.rows(); ++k) {
    auto x = cs.contexts.row(k);
    auto c = cs.centers.row(static_cast<std::size_t>(cs.cluster_of[k]));
    double d = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) d += (x[t] - c[t]) * (x[t] - c[t]);
    ASSERT_LT(std::sqrt(d), 1.0);
    ASSERT_LT(norm2(x), cfg.c_exp + cfg.c_rad);
  }
  double total = 0.0;
  for (double p : cs.p_x) {
    ASSERT_GT(p, 0.0);
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(ContextSpace, SingleCluster) {
  SynthConfig cfg = small_config();
  cfg.c_num = 1;
  RandomStream rng(5, 1);
  ContextSpace cs = generate_context_space(cfg, rng);
  EXPECT_TRUE(std::all_of(cs.cluster_of.begin(), cs.cluster_of.end(), [](int c) { return c == 0; }));
}

TEST(Policies, BetaOneCopiesEvaluation) {
  SynthConfig cfg = small_config();
  cfg.beta = 1.0;
  SyntheticWorld w = generate_world(cfg, 6);
  for (std::size_t k = 0; k < w.p_x.size(); ++k)
    for (std::size_t a = 0; a < 6; ++a) ASSERT_NEAR(w.pi_log(k, a), w.pi_eval(k, a), 1e-12);
}

TEST(Policies, BetaZeroIsUniform) {
  SynthConfig cfg = small_config();
  cfg.beta = 0.0;
  SyntheticWorld w = generate_world(cfg, 7);
  for (std::size_t k = 0; k < w.p_x.size(); ++k)
    for (std::size_t a = 0; a < 6; ++a) ASSERT_DOUBLE_EQ(w.pi_log(k, a), 1.0 / 6);
}

TEST(Policies, SigmaZeroSharesRowsWithinCluster) {
  SynthConfig cfg = small_config();
  cfg.sigma = 0.0;
  SyntheticWorld w = generate_world(cfg, 8);
  std::vector<std::size_t> first(5, SIZE_MAX);
  for (std::size_t k = 0; k < w.p_x.size(); ++k) {
    auto c = static_cast<std::size_t>(w.cluster_of[k]);
    if (first[c] == SIZE_MAX) {
      first[c] = k;
      continue;
    }
    for (std::size_t a = 0; a < 6; ++a) ASSERT_EQ(w.pi_eval(k, a), w.pi_eval(first[c], a));
  }
}

TEST(Policies, SigmaChangesRowsWithinCluster) {
  SynthConfig cfg = small_config();
  cfg.sigma = 0.5;
  SyntheticWorld w = generate_world(cfg, 8);
  bool differs = false;
  for (std::size_t k = 1; k < w.p_x.size() && !differs; ++k)
    if (w.cluster_of[k] == w.cluster_of[0]) differs = w.pi_eval(k, 0) != w.pi_eval(0, 0);
  EXPECT_TRUE(differs);
}

TEST(Policies, NegativeBetaReversesRanks) {
  SynthConfig cfg = small_config();
  SyntheticWorld w = generate_world(cfg, 9);
  for (std::size_t k = 0; k < w.p_x.size(); ++k)
    for (std::size_t a = 0; a < 6; ++a)
      for (std::size_t b = 0; b < 6; ++b)
        if (w.pi_eval(k, a) > w.pi_eval(k, b)) {
          ASSERT_LT(w.pi_log(k, a), w.pi_log(k, b));
        }
}

TEST(Deficiency, ZeroIsIdentity) {
  RandomStream rng(10, 1);
  PolicyTable p(Matrix{{0.1, 0.2, 0.7}});
  EXPECT_EQ(apply_deficiency(p, 0, rng).probs(), p.probs());
}

TEST(Deficiency, UniformRenormalizes) {
  RandomStream rng(11, 1);
  PolicyTable p(Matrix{{0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}});
  std::vector<int> chosen;
  PolicyTable d = apply_deficiency(p, 1, rng, &chosen);
  ASSERT_EQ(chosen.size(), 1u);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t a = 0; a < 4; ++a)
      EXPECT_DOUBLE_EQ(d(k, a), static_cast<int>(a) == chosen[0] ? 0.0 : 1.0 / 3);
}

TEST(Deficiency, AllButOneIsDeterministic) {
  RandomStream rng(12, 1);
  PolicyTable p(Matrix{{0.1, 0.2, 0.3, 0.4}});
  PolicyTable d = apply_deficiency(p, 3, rng);
  EXPECT_EQ(std::count(d.row(0).begin(), d.row(0).end(), 1.0), 1);
  EXPECT_THROW(apply_deficiency(p, 4, rng), ConfigError);
}

TEST(Deficiency, RowWithOnlyDroppedMassFails) {
  RandomStream rng(13, 1);
  PolicyTable p(Matrix{{1.0, 0.0}, {0.0, 1.0}});
  EXPECT_THROW(apply_deficiency(p, 1, rng), ValidationError);
}

TEST(Rewards, Examples) {
  SynthConfig cfg;
  Matrix x{{0.0, 0.0}, {10.0, 10.0}, {30.0, 30.0}};
  PolicyTable pi(Matrix{{0.5, 0.5}, {1.0, 0.0}, {1.0, 0.0}});
  Matrix q = build_reward_means(cfg, x, pi);
  EXPECT_EQ(q(0, 0), 0.0);
  EXPECT_EQ(q(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(q(1, 0), 1.0);
  EXPECT_EQ(q(2, 0), 1.0);  // clamped
}

TEST(Rewards, GeneratedWorldInUnitInterval) {
  SyntheticWorld w = generate_world(SynthConfig{}, 14);
  const double scale = w.config.c_exp * w.config.d_x;
  for (std::size_t k = 0; k < w.p_x.size(); ++k) {
    double l1 = std::abs(w.contexts(k, 0)) + std::abs(w.contexts(k, 1));
    for (std::size_t a = 0; a < 10; ++a) {
      ASSERT_GE(w.reward_mean(k, a), 0.0);
      ASSERT_LE(w.reward_mean(k, a), 1.0);
      ASSERT_EQ(w.reward_mean(k, a), std::min(1.0, w.pi_eval(k, a) * l1 / scale));
    }
  }
}

TEST(Sampling, EmptyAndDeterministicWorld) {
  SyntheticWorld w = generate_world(small_config(), 15);
  RandomStream rng(15, streams::kLogged);
  EXPECT_EQ(sample_logged_data(w, 0, SamplePolicy::Logging, rng).size(), 0u);

  SyntheticWorld one;
  one.config.x_num = 1;
  one.config.a_num = 1;
  one.contexts = Matrix{{1.0, 1.0}};
  one.cluster_of = {0};
  one.p_x = {1.0};
  one.pi_eval = PolicyTable(Matrix{{1.0}});
  one.pi_log = PolicyTable(Matrix{{1.0}});
  one.reward_mean = Matrix{{1.0}};
  BanditDataset d = sample_logged_data(one, 500, SamplePolicy::Logging, rng);
  EXPECT_TRUE(std::all_of(d.rewards.begin(), d.rewards.end(), [](double r) { return r == 1.0; }));
}

TEST(Sampling, ActionFrequenciesMatchMarginal) {
  SyntheticWorld w = generate_world(SynthConfig{}, 16);
  RandomStream rng(16, streams::kLogged);
  const std::size_t n = 1000000;
  BanditDataset d = sample_logged_data(w, n, SamplePolicy::Logging, rng);
  std::vector<double> counts(10, 0.0);
  for (int a : d.actions) counts[static_cast<std::size_t>(a)] += 1.0;
  for (std::size_t a = 0; a < 10; ++a) {
    double p = 0.0;
    for (std::size_t k = 0; k < w.p_x.size(); ++k) p += w.p_x[k] * w.pi_log(k, a);
    double sd = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(counts[a] / n, p, 3 * sd) << "action " << a;
  }
}

TEST(TrueValue, HandExamples) {
  SyntheticWorld w;
  w.p_x = {0.5, 0.5};
  w.pi_eval = PolicyTable(Matrix{{1.0, 0.0}, {0.0, 1.0}});
  w.reward_mean = Matrix{{0.2, 0.9}, {0.1, 0.4}};
  EXPECT_DOUBLE_EQ(true_policy_value(w), 0.3);
  w.reward_mean = Matrix(2, 2, 0.0);
  EXPECT_EQ(true_policy_value(w), 0.0);
}

TEST(TrueValue, MatchesOnPolicyMonteCarlo) {
  SyntheticWorld w = generate_world(SynthConfig{}, 17);
  const double v = true_policy_value(w);
  double sum = 0.0;
  const std::size_t chunk = 1000000, chunks = 10;
  for (std::size_t c = 0; c < chunks; ++c) {
    RandomStream rng(17, 100 + c);
    BanditDataset d = sample_logged_data(w, chunk, SamplePolicy::Evaluation, rng);
    sum += std::accumulate(d.rewards.begin(), d.rewards.end(), 0.0);
  }
  const double n = static_cast<double>(chunk * chunks);
  const double mean = sum / n;
  const double se = std::sqrt(mean * (1 - mean) / n);
  EXPECT_NEAR(mean, v, 3 * se);
}

TEST(World, SeedDeterminism) {
  SyntheticWorld a = generate_world(SynthConfig{}, 99);
  SyntheticWorld b = generate_world(SynthConfig{}, 99);
  SyntheticWorld c = generate_world(SynthConfig{}, 100);
  EXPECT_EQ(a.contexts, b.contexts);
  EXPECT_EQ(a.pi_eval.probs(), b.pi_eval.probs());
  EXPECT_EQ(a.pi_log.probs(), b.pi_log.probs());
  EXPECT_EQ(a.reward_mean, b.reward_mean);
  EXPECT_EQ(a.p_x, b.p_x);
  EXPECT_NE(a.contexts, c.contexts);
}

TEST(Config, ValidationAndSetters) {
  SynthConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.set("n_deficient", 10);
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.sigma = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  EXPECT_THROW(cfg.set("bogus", 1.0), ConfigError);
  EXPECT_THROW(cfg.set("a_num", 2.5), ConfigError);
  cfg.set("beta", 0.25);
  EXPECT_EQ(cfg.get("beta"), 0.25);
}
