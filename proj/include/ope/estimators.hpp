#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ope/clustering.hpp"
#include "ope/dataset.hpp"
#include "ope/matrix.hpp"
#include "ope/policy.hpp"
#include "ope/reward_model.hpp"

namespace ope {

// All estimators take the evaluation policy either as precomputed rows
// pi(. | x_i) (N x A) or as a PolicyEvaluator. Model-based ones take q_hat the
// same way: rows (N x A) or a RewardModel.

// w_i = pi(a_i|x_i) / pi0(a_i|x_i). Throws ValidationError on a zero propensity.
std::vector<double> importance_weights(const BanditDataset& d, const Matrix& pi_rows);

Estimate estimate_ips(const BanditDataset& d, const Matrix& pi_rows);
Estimate estimate_ips(const BanditDataset& d, const PolicyEvaluator& pi);

Estimate estimate_snips(const BanditDataset& d, const Matrix& pi_rows);
Estimate estimate_snips(const BanditDataset& d, const PolicyEvaluator& pi);

Estimate estimate_dm(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows);
Estimate estimate_dm(const BanditDataset& d, const PolicyEvaluator& pi, const RewardModel& q);

Estimate estimate_dr(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows);
Estimate estimate_dr(const BanditDataset& d, const PolicyEvaluator& pi, const RewardModel& q);

Estimate estimate_sndr(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows);
Estimate estimate_sndr(const BanditDataset& d, const PolicyEvaluator& pi, const RewardModel& q);

// Shrunk weight lambda * w / (w^2 + lambda).
double dros_weight(double w, double lambda);
Estimate estimate_dros(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows,
                       double lambda = 1.0);
Estimate estimate_dros(const BanditDataset& d, const PolicyEvaluator& pi, const RewardModel& q,
                       double lambda = 1.0);

// Default threshold: the 95th percentile of the observed weights.
double default_switch_tau(std::span<const double> weights);
Estimate estimate_switch_dr(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows,
                            std::optional<double> tau = std::nullopt);
Estimate estimate_switch_dr(const BanditDataset& d, const PolicyEvaluator& pi, const RewardModel& q,
                            std::optional<double> tau = std::nullopt);

// Weight regression on the reward: group means for binary rewards, equal-width
// bins over [0, R_max] otherwise.
Estimate estimate_mr(const BanditDataset& d, const Matrix& pi_rows, std::size_t bins = 20);
Estimate estimate_mr(const BanditDataset& d, const PolicyEvaluator& pi, std::size_t bins = 20);

// Marginalized weights p(e|x,pi) / p(e|x,pi0) with a deterministic action -> category map.
// Uses d.action_embeddings when `embedding` is empty.
Estimate estimate_mips(const BanditDataset& d, const Matrix& pi_rows,
                       std::span<const int> embedding = {});
Estimate estimate_mips(const BanditDataset& d, const PolicyEvaluator& pi,
                       std::span<const int> embedding = {});

// ---- CHIPS ----

// p_hat(a | c) = mean of rows over the samples of cluster c (K x A). Clusters
// with no samples keep all-zero rows.
Matrix chips_action_probs(std::span<const int> cluster_ids, std::size_t num_clusters, const Matrix& rows);

// Per-(cluster, action) reward statistics.
struct CellRewards {
  std::size_t num_clusters = 0;
  std::size_t num_actions = 0;
  std::vector<double> sums;
  std::vector<std::size_t> counts;

  std::size_t count(std::size_t c, std::size_t a) const { return counts[c * num_actions + a]; }
  double sum(std::size_t c, std::size_t a) const { return sums[c * num_actions + a]; }
};
CellRewards chips_reward_cells(const BanditDataset& d, std::span<const int> cluster_ids,
                               std::size_t num_clusters);

// Marker for cells without samples in the ML table.
bool is_empty_cell(double v);

// Cell means; empty cells hold the empty marker.
Matrix chips_reward_ml(const BanditDataset& d, std::span<const int> cluster_ids, std::size_t num_clusters);
// Beta-prior posterior modes ((alpha-1) + sum r) / (alpha + beta_hat + M - 2); empty
// cells get the prior mode. Requires binary rewards and alpha, beta_hat > 1.
Matrix chips_reward_map(const BanditDataset& d, std::span<const int> cluster_ids, std::size_t num_clusters,
                        double alpha, double beta_hat);

enum class ChipsMode { ML, MAP };

struct ChipsOptions {
  ChipsMode mode = ChipsMode::MAP;
  double alpha = 20.0;
  std::optional<double> beta_hat;  // defaults to alpha
  // Partition used to cluster the contexts; when null the dataset's cluster ids are used.
  std::shared_ptr<const ContextPartition> partition;
};

// Cluster-level weights w(a,c) = p_hat(a|c,pi) / p_hat(a|c,pi0) (K x A, 0 where undefined).
Matrix chips_weights(const Matrix& pi_cluster, const Matrix& pi0_cluster);

Estimate estimate_chips(const BanditDataset& d, const Matrix& pi_rows, const ChipsOptions& opts = {});
Estimate estimate_chips(const BanditDataset& d, const PolicyEvaluator& pi, const ChipsOptions& opts = {});

}  // namespace ope
