#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ope/matrix.hpp"

namespace ope {

// Logged bandit feedback: one (context, action, reward) tuple per row, with the
// logging propensities that produced it.
struct BanditDataset {
  Matrix contexts;  // N x d
  std::vector<int> actions;
  std::vector<double> rewards;
  std::size_t num_actions = 0;
  double reward_max = 1.0;

  // pi0(a_i | x_i) for the logged action; always present.
  std::vector<double> logged_propensity;
  // Full pi0(. | x_i) rows (N x A). Missing when only logged propensities were supplied.
  std::optional<Matrix> propensities;

  std::optional<std::vector<int>> cluster_ids;  // c_i in [0, num_clusters)
  std::size_t num_clusters = 0;

  // Category of each action, -1 where unknown.
  std::optional<std::vector<int>> action_embeddings;
  std::size_t num_embeddings = 0;

  std::size_t size() const { return actions.size(); }
  std::size_t context_dim() const { return contexts.cols(); }
  bool has_full_propensities() const { return propensities.has_value(); }
  bool binary_rewards() const;
};

// Builds a dataset with full propensity rows; logged propensities are read off the rows.
BanditDataset make_dataset(Matrix contexts, std::vector<int> actions, std::vector<double> rewards,
                           Matrix propensities, double reward_max = 1.0);

struct Violation {
  std::string invariant;  // "row-sum", "row-nonnegative", "logged-propensity", "reward-range", ...
  std::size_t index = 0;  // sample (or action) index
  std::string detail;
};

// Every broken invariant; empty when the dataset is valid.
std::vector<Violation> validate_dataset(const BanditDataset& d);

// Throws ValidationError describing the first violation, if any.
void require_valid(const BanditDataset& d);

// Rows picked by index (with repetition allowed), all fields carried along.
BanditDataset subset(const BanditDataset& d, std::span<const std::size_t> index);

// The tau transform: same dataset with cluster ids attached.
BanditDataset with_clusters(BanditDataset d, std::vector<int> cluster_ids, std::size_t num_clusters);

// Result of one estimator run.
struct Estimate {
  double value = 0.0;
  std::string estimator;
  std::optional<std::vector<double>> per_sample_terms;
};

}  // namespace ope
