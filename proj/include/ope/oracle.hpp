#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ope/matrix.hpp"
#include "ope/random.hpp"

namespace ope {

// Largest M * A accepted for exact enumeration.
inline constexpr std::size_t kEnumerationCap = 10000;

// A small, fully specified bandit world: context distribution, cluster map,
// both policies and Bernoulli reward means. Cluster-level quantities are
// derived in the constructor and cannot go stale.
class DiscreteInstance {
 public:
  // Throws ValidationError on inconsistent shapes or invalid distributions and
  // ResourceError when M * A exceeds kEnumerationCap.
  DiscreteInstance(std::vector<double> p_x, std::vector<int> cluster_of, Matrix pi, Matrix pi0, Matrix q,
                   std::optional<std::vector<int>> embedding = std::nullopt);

  std::size_t num_contexts() const { return p_x_.size(); }
  std::size_t num_actions() const { return pi_.cols(); }
  std::size_t num_clusters() const { return p_c_.size(); }

  const std::vector<double>& p_x() const { return p_x_; }
  const std::vector<int>& cluster_of() const { return cluster_of_; }
  const Matrix& pi() const { return pi_; }
  const Matrix& pi0() const { return pi0_; }
  const Matrix& q() const { return q_; }

  const std::vector<double>& p_c() const { return p_c_; }
  double p_x_given_c(std::size_t x) const;
  const Matrix& cluster_pi() const { return cluster_pi_; }    // p(a | c, pi)
  const Matrix& cluster_pi0() const { return cluster_pi0_; }  // p(a | c, pi0)

  bool has_embedding() const { return embedding_.has_value(); }
  const std::vector<int>& embedding() const;
  std::size_t num_embeddings() const { return num_embeddings_; }
  const Matrix& embed_pi() const { return embed_pi_; }    // p(e | x, pi), M x E
  const Matrix& embed_pi0() const { return embed_pi0_; }  // p(e | x, pi0)

 private:
  std::vector<double> p_x_;
  std::vector<int> cluster_of_;
  Matrix pi_, pi0_, q_;
  std::optional<std::vector<int>> embedding_;
  std::size_t num_embeddings_ = 0;

  std::vector<double> p_c_;
  Matrix cluster_pi_, cluster_pi0_;
  Matrix embed_pi_, embed_pi0_;
};

// ---- Premise checks ----
bool has_common_support(const DiscreteInstance& inst);          // pi > 0 => pi0 > 0
bool has_cluster_support(const DiscreteInstance& inst);         // p(a|c,pi) > 0 => p(a|c,pi0) > 0
bool has_embedding_support(const DiscreteInstance& inst);       // p(e|x,pi) > 0 => p(e|x,pi0) > 0
bool is_reward_homogeneous(const DiscreteInstance& inst, double tol = 0.0);  // q(a,x) = q(a,c(x))
bool has_no_direct_effect(const DiscreteInstance& inst, double tol = 0.0);   // q(a,x) = q(e(a),x)

// ---- Values ----
double true_value(const DiscreteInstance& inst);
// sum_c p(c) sum_a p(a|c,pi) q(a,c). Throws AssumptionError unless rewards are cluster-homogeneous.
double cluster_form_value(const DiscreteInstance& inst);

enum class OracleEstimator { Ips, Chips, Mips };

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

// Exact mean and variance of the estimator over n i.i.d. logged samples. CHIPS
// uses population weights p(a|c,pi) / p(a|c,pi0).
Moments exact_moments(const DiscreteInstance& inst, OracleEstimator est, std::size_t n = 1);

// Closed-form |bias| from the deficient actions. Ips sums over U(x, pi0), Chips
// over U(c, pi0). Throws AssumptionError when rewards are not cluster-homogeneous.
double exact_bias_deficient(const DiscreteInstance& inst, OracleEstimator est);
// |Bias IPS| - |Bias CHIPS| summed directly over U(x, pi0) \ U(c, pi0).
double deficient_bias_difference(const DiscreteInstance& inst);

struct DeltaBounds {
  // delta-, delta+ per (cluster, action) for each policy; NaN where p(a|c,.) = 0.
  Matrix delta_minus_pi, delta_plus_pi, delta_minus_pi0, delta_plus_pi0;
  Matrix gap;  // Delta_{c,a}; +inf where the pi0 ratio is undefined but pi has mass
  double bias_bound = 0.0;
  bool unbounded = false;
};
DeltaBounds delta_bounds(const DiscreteInstance& inst);

// E_{p(c) p(a|c,pi0)}[Var_{pi0(x|a,c)}[w(a,x)] * E[r^2]], which equals
// n (Var IPS - Var CHIPS). Throws AssumptionError without common support and homogeneity.
double variance_gap(const DiscreteInstance& inst);

// (MSE IPS - MSE CHIPS) - (Var IPS - Var CHIPS - Bias CHIPS^2) from exact moments.
double mse_identity_residual(const DiscreteInstance& inst, std::size_t n = 1);

// |Bias MIPS| - |Bias CHIPS| from the deficient sets U(e, x) and U(c). Both biases
// are <= 0 here. Needs homogeneity and no direct effect.
double mips_bias_difference(const DiscreteInstance& inst);

// Exact mean of the weight-regression estimator when its fitted map equals w + eps.
double mr_shifted_mean(const DiscreteInstance& inst, double eps);
// Formula for Bias MR - Bias CHIPS (signed) under the same premise.
double mr_bias_difference(const DiscreteInstance& inst, double eps);

// ---- Random instances ----
enum class InstanceKind {
  FullSupport,    // generic: full support, context-varying q and policies
  Homogeneous,    // q depends only on (a, cluster); full support
  Deficient,      // homogeneous with logging zeros, some covered at cluster level
  ClusterConstant,  // policies and q constant within clusters
  Joint,          // clusters plus an action embedding satisfying every support premise
};

struct InstanceShape {
  std::size_t contexts = 12;
  std::size_t actions = 6;
  std::size_t clusters = 3;
  std::size_t embeddings = 3;
};

DiscreteInstance random_instance(InstanceKind kind, const InstanceShape& shape, RandomStream& rng);
InstanceShape random_shape(RandomStream& rng, std::size_t max_contexts = 20, std::size_t max_actions = 10);
const char* instance_kind_name(InstanceKind kind);

// ---- Identity checks used by the verify command ----
enum class CheckStatus { Pass, Fail, Skipped };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Skipped;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string note;
};

std::vector<CheckResult> run_identity_checks(const DiscreteInstance& inst, std::size_t n = 10);

}  // namespace ope
