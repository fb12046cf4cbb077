#include <cmath>
#include <limits>

#include "common.hpp"
#include "ope/estimators.hpp"
#include "ope/kernels.hpp"

namespace ope {

namespace {

void check_ids(std::span<const int> ids, std::size_t n, std::size_t k) {
  if (ids.size() != n) throw ValidationError("one cluster id per sample required");
  for (int c : ids)
    if (c < 0 || static_cast<std::size_t>(c) >= k)
      throw ValidationError("cluster id " + std::to_string(c) + " outside [0, " + std::to_string(k) + ")");
}

}  // namespace

Matrix chips_action_probs(std::span<const int> cluster_ids, std::size_t num_clusters, const Matrix& rows) {
  check_ids(cluster_ids, rows.rows(), num_clusters);
  Matrix out(num_clusters, rows.cols());
  std::vector<double> counts(num_clusters, 0.0);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto c = static_cast<std::size_t>(cluster_ids[i]);
    kernels::accumulate(out.row(c), rows.row(i));
    counts[c] += 1.0;
  }
  for (std::size_t c = 0; c < num_clusters; ++c) {
    if (counts[c] == 0.0) continue;
    for (auto& v : out.row(c)) v /= counts[c];
  }
  return out;
}

CellRewards chips_reward_cells(const BanditDataset& d, std::span<const int> cluster_ids, std::size_t num_clusters) {
  check_ids(cluster_ids, d.size(), num_clusters);
  CellRewards cells;
  cells.num_clusters = num_clusters;
  cells.num_actions = d.num_actions;
  cells.sums.assign(num_clusters * d.num_actions, 0.0);
  cells.counts.assign(num_clusters * d.num_actions, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t cell = static_cast<std::size_t>(cluster_ids[i]) * d.num_actions + static_cast<std::size_t>(d.actions[i]);
    cells.sums[cell] += d.rewards[i];
    ++cells.counts[cell];
  }
  return cells;
}

bool is_empty_cell(double v) { return std::isnan(v); }

Matrix chips_reward_ml(const BanditDataset& d, std::span<const int> cluster_ids, std::size_t num_clusters) {
  const auto cells = chips_reward_cells(d, cluster_ids, num_clusters);
  Matrix out(num_clusters, d.num_actions, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < num_clusters; ++c)
    for (std::size_t a = 0; a < d.num_actions; ++a)
      if (const auto m = cells.count(c, a)) out(c, a) = cells.sum(c, a) / static_cast<double>(m);
  return out;
}

Matrix chips_reward_map(const BanditDataset& d, std::span<const int> cluster_ids, std::size_t num_clusters,
                        double alpha, double beta_hat) {
  if (!(alpha > 1.0) || !(beta_hat > 1.0)) throw ConfigError("MAP prior needs alpha > 1 and beta_hat > 1");
  if (!d.binary_rewards()) throw CapabilityError("MAP reward estimation needs binary rewards");
  const auto cells = chips_reward_cells(d, cluster_ids, num_clusters);
  Matrix out(num_clusters, d.num_actions);
  for (std::size_t c = 0; c < num_clusters; ++c)
    for (std::size_t a = 0; a < d.num_actions; ++a)
      out(c, a) = ((alpha - 1.0) + cells.sum(c, a)) / (alpha + beta_hat + static_cast<double>(cells.count(c, a)) - 2.0);
  return out;
}

Matrix chips_weights(const Matrix& pi_cluster, const Matrix& pi0_cluster) {
  Matrix w(pi_cluster.rows(), pi_cluster.cols());
  for (std::size_t c = 0; c < w.rows(); ++c)
    for (std::size_t a = 0; a < w.cols(); ++a)
      w(c, a) = pi0_cluster(c, a) > 0.0 ? pi_cluster(c, a) / pi0_cluster(c, a) : 0.0;
  return w;
}

Estimate estimate_chips(const BanditDataset& d, const Matrix& pi_rows, const ChipsOptions& opts) {
  detail::check_nonempty(d);
  detail::check_rows(d, pi_rows, "policy");
  if (!d.propensities)
    throw CapabilityError("CHIPS needs full logging propensity rows; the dataset only has logged propensities");

  std::vector<int> assigned;
  std::span<const int> ids;
  std::size_t k = 0;
  if (opts.partition) {
    assigned = opts.partition->assign_all(d.contexts);
    ids = assigned;
    k = opts.partition->num_clusters();
  } else if (d.cluster_ids) {
    ids = *d.cluster_ids;
    k = d.num_clusters;
  } else {
    throw ConfigError("CHIPS needs a cluster model or cluster ids on the dataset");
  }

  const Matrix w = chips_weights(chips_action_probs(ids, k, pi_rows), chips_action_probs(ids, k, *d.propensities));
  const Matrix cell_reward = opts.mode == ChipsMode::ML
                                 ? chips_reward_ml(d, ids, k)
                                 : chips_reward_map(d, ids, k, opts.alpha, opts.beta_hat.value_or(opts.alpha));

  std::vector<double> terms(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto c = static_cast<std::size_t>(ids[i]);
    const auto a = static_cast<std::size_t>(d.actions[i]);
    terms[i] = w(c, a) * cell_reward(c, a);
  }
  return {detail::mean(terms), opts.mode == ChipsMode::ML ? "chips-ml" : "chips-map", std::move(terms)};
}

Estimate estimate_chips(const BanditDataset& d, const PolicyEvaluator& pi, const ChipsOptions& opts) {
  return estimate_chips(d, policy_rows(pi, d.contexts), opts);
}

}  // namespace ope
