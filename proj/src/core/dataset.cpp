#include "ope/dataset.hpp"

#include <cmath>
#include <sstream>

#include "ope/errors.hpp"

namespace ope {

bool BanditDataset::binary_rewards() const {
  for (double r : rewards)
    if (r != 0.0 && r != 1.0) return false;
  return true;
}

BanditDataset make_dataset(Matrix contexts, std::vector<int> actions, std::vector<double> rewards,
                           Matrix propensities, double reward_max) {
  BanditDataset d;
  d.num_actions = propensities.cols();
  d.reward_max = reward_max;
  d.logged_propensity.resize(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const int a = actions[i];
    d.logged_propensity[i] =
        (a >= 0 && static_cast<std::size_t>(a) < d.num_actions && i < propensities.rows())
            ? propensities(i, static_cast<std::size_t>(a))
            : 0.0;
  }
  d.contexts = std::move(contexts);
  d.actions = std::move(actions);
  d.rewards = std::move(rewards);
  d.propensities = std::move(propensities);
  return d;
}

std::vector<Violation> validate_dataset(const BanditDataset& d) {
  std::vector<Violation> out;
  const std::size_t n = d.actions.size();
  auto add = [&](const char* inv, std::size_t i, std::string detail) {
    out.push_back({inv, i, std::move(detail)});
  };

  if (d.contexts.rows() != n) add("shape", 0, "contexts has " + std::to_string(d.contexts.rows()) + " rows");
  if (d.rewards.size() != n) add("shape", 0, "rewards has " + std::to_string(d.rewards.size()) + " entries");
  if (d.logged_propensity.size() != n)
    add("shape", 0, "logged_propensity has " + std::to_string(d.logged_propensity.size()) + " entries");
  if (d.propensities && (d.propensities->rows() != n || d.propensities->cols() != d.num_actions))
    add("shape", 0, "propensity matrix is not N x A");
  if (!out.empty()) return out;

  for (std::size_t i = 0; i < n; ++i) {
    const int a = d.actions[i];
    if (a < 0 || static_cast<std::size_t>(a) >= d.num_actions) {
      add("action-range", i, "action " + std::to_string(a));
      continue;
    }
    const double r = d.rewards[i];
    if (!(r >= 0.0 && r <= d.reward_max)) {
      std::ostringstream s;
      s << "reward " << r << " outside [0, " << d.reward_max << "]";
      add("reward-range", i, s.str());
    }
    if (d.propensities) {
      auto row = d.propensities->row(i);
      double total = 0.0;
      bool negative = false;
      for (double p : row) {
        total += p;
        negative |= !(p >= 0.0);
      }
      if (negative) add("row-nonnegative", i, "negative or NaN propensity");
      if (!(std::abs(total - 1.0) <= 1e-9)) {
        std::ostringstream s;
        s.precision(17);
        s << "propensity row sums to " << total;
        add("row-sum", i, s.str());
      }
      if (row[static_cast<std::size_t>(a)] != d.logged_propensity[i])
        add("logged-propensity-mismatch", i, "logged propensity differs from its row");
    }
    if (!(d.logged_propensity[i] > 0.0)) add("logged-propensity", i, "logged action has zero propensity");
  }

  if (d.cluster_ids) {
    if (d.cluster_ids->size() != n) {
      add("shape", 0, "cluster_ids length differs from N");
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const int c = (*d.cluster_ids)[i];
        if (c < 0 || static_cast<std::size_t>(c) >= d.num_clusters)
          add("cluster-range", i, "cluster id " + std::to_string(c) + " with K=" + std::to_string(d.num_clusters));
      }
    }
  }
  if (d.action_embeddings) {
    if (d.action_embeddings->size() != d.num_actions) {
      add("shape", 0, "action_embeddings length differs from A");
    } else {
      for (std::size_t a = 0; a < d.num_actions; ++a) {
        const int e = (*d.action_embeddings)[a];
        if (e < -1 || (e >= 0 && static_cast<std::size_t>(e) >= d.num_embeddings))
          add("embedding-range", a, "embedding " + std::to_string(e) + " with E=" + std::to_string(d.num_embeddings));
      }
    }
  }
  return out;
}

void require_valid(const BanditDataset& d) {
  auto v = validate_dataset(d);
  if (!v.empty()) {
    throw ValidationError(v.front().invariant + " at index " + std::to_string(v.front().index) + ": " +
                          v.front().detail);
  }
}

BanditDataset subset(const BanditDataset& d, std::span<const std::size_t> index) {
  BanditDataset out;
  out.contexts = d.contexts.gather_rows(index);
  out.num_actions = d.num_actions;
  out.reward_max = d.reward_max;
  out.num_clusters = d.num_clusters;
  out.action_embeddings = d.action_embeddings;
  out.num_embeddings = d.num_embeddings;
  out.actions.reserve(index.size());
  out.rewards.reserve(index.size());
  out.logged_propensity.reserve(index.size());
  for (std::size_t i : index) {
    out.actions.push_back(d.actions[i]);
    out.rewards.push_back(d.rewards[i]);
    out.logged_propensity.push_back(d.logged_propensity[i]);
  }
  if (d.propensities) out.propensities = d.propensities->gather_rows(index);
  if (d.cluster_ids) {
    std::vector<int> ids;
    ids.reserve(index.size());
    for (std::size_t i : index) ids.push_back((*d.cluster_ids)[i]);
    out.cluster_ids = std::move(ids);
  }
  return out;
}

BanditDataset with_clusters(BanditDataset d, std::vector<int> cluster_ids, std::size_t num_clusters) {
  if (cluster_ids.size() != d.size()) throw ValidationError("cluster id count differs from dataset size");
  d.cluster_ids = std::move(cluster_ids);
  d.num_clusters = num_clusters;
  return d;
}

}  // namespace ope
