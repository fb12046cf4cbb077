#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ope/dataset.hpp"
#include "ope/matrix.hpp"
#include "ope/policy.hpp"
#include "ope/random.hpp"

namespace ope {

// Parameters of the cluster-structured synthetic world.
struct SynthConfig {
  double c_exp = 10.0;  // radius of the ball holding cluster centers
  double c_rad = 1.0;   // radius of each cluster
  int d_x = 2;
  int x_num = 1000;
  int a_num = 10;
  int c_num = 10;
  long long n_samples = 50000;
  int emp_c_num = 100;  // clusters used by the estimator
  long long e_len = 1000000;
  long long b_len = 1000000;
  double sigma = 0.2;  // per-context logit noise
  double beta = -1.0;  // logging logits = beta * evaluation logits
  int n_deficient = 0;

  // Throws ConfigError on the first broken constraint.
  void validate() const;
  // Sets a field by name; throws ConfigError for unknown names or non-integral counts.
  void set(const std::string& name, double value);
  double get(const std::string& name) const;
  static const std::vector<std::string>& field_names();
};

struct ContextSpace {
  Matrix centers;              // c_num x d_x
  std::vector<int> cluster_sizes;  // h_i
  Matrix contexts;             // x_num x d_x
  std::vector<int> cluster_of;
  std::vector<double> p_x;
};

struct SyntheticWorld {
  SynthConfig config;
  Matrix centers;
  Matrix contexts;
  std::vector<int> cluster_of;
  std::vector<double> p_x;
  PolicyTable pi_eval;
  PolicyTable pi_log;
  Matrix reward_mean;  // x_num x a_num
  std::vector<int> deficient_actions;
};

enum class SamplePolicy { Logging, Evaluation };

// Stream ids used inside generate_world, one per stage.
namespace streams {
inline constexpr std::uint64_t kContexts = 1;
inline constexpr std::uint64_t kPolicies = 2;
inline constexpr std::uint64_t kDeficiency = 3;
inline constexpr std::uint64_t kLogged = 4;
inline constexpr std::uint64_t kEvaluation = 5;
inline constexpr std::uint64_t kEstimators = 6;
}  // namespace streams

// Points uniform in B(0, radius) in d dimensions: radius * u^(1/d) * z / |z|.
Matrix sample_in_ball(std::size_t m, double radius, int d, RandomStream& rng);

Matrix generate_cluster_centers(std::size_t m, double c_exp, int d_x, RandomStream& rng);
ContextSpace generate_context_space(const SynthConfig& cfg, RandomStream& rng);

struct PolicyPair {
  PolicyTable pi_eval;
  PolicyTable pi_log;
};
// Logits y[c][a] + sigma * z[x][a]; pi = softmax(logits), pi0 = softmax(beta * logits).
PolicyPair generate_policies(const SynthConfig& cfg, const std::vector<int>& cluster_of,
                             RandomStream& rng);

// Zeroes a random set of n_def actions in every row and renormalizes.
PolicyTable apply_deficiency(const PolicyTable& pi_log, int n_def, RandomStream& rng,
                             std::vector<int>* chosen = nullptr);

// q(a, x) = clamp(pi(a|x) * |x|_1 / (c_exp * d_x), 0, 1).
Matrix build_reward_means(const SynthConfig& cfg, const Matrix& contexts, const PolicyTable& pi_eval);

// The whole world as a pure function of (cfg, seed).
SyntheticWorld generate_world(const SynthConfig& cfg, std::uint64_t seed);

// n i.i.d. rows: x ~ p_x, a ~ chosen policy, r ~ Bernoulli(q). Propensity rows
// always come from the logging table.
BanditDataset sample_logged_data(const SyntheticWorld& world, std::size_t n, SamplePolicy policy,
                                 RandomStream& rng, std::vector<std::size_t>* context_index = nullptr);

// Exact sum_x p(x) sum_a pi(a|x) q(a,x).
double true_policy_value(const SyntheticWorld& world);

}  // namespace ope
