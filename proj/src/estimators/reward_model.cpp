#include "ope/reward_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ope/errors.hpp"

namespace ope {

Matrix reward_rows(const RewardModel& model, const Matrix& contexts) {
  Matrix out(contexts.rows(), model.num_actions());
  for (std::size_t i = 0; i < contexts.rows(); ++i) model.predict(contexts.row(i), out.row(i));
  return out;
}

void ConstantRewardModel::predict(std::span<const double>, std::span<double> out) const {
  std::fill(out.begin(), out.end(), value_);
}

void FunctionRewardModel::predict(std::span<const double> context, std::span<double> out) const {
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = std::clamp(fn_(context, a), 0.0, reward_max_);
}

namespace {

struct Node {
  int feature = -1;  // -1 leaf; < dim continuous; >= dim tests action == feature - dim
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

class ForestRewardModel final : public RewardModel {
 public:
  ForestRewardModel(std::size_t dim, std::size_t actions, double reward_max, std::vector<std::vector<Node>> trees)
      : dim_(dim), actions_(actions), reward_max_(reward_max), trees_(std::move(trees)) {}

  std::size_t num_actions() const override { return actions_; }
  std::string family() const override { return "forest"; }

  void predict(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t a = 0; a < actions_; ++a) {
      double total = 0.0;
      for (const auto& tree : trees_) {
        int k = 0;
        while (tree[static_cast<std::size_t>(k)].feature >= 0) {
          const Node& node = tree[static_cast<std::size_t>(k)];
          bool go_right;
          if (static_cast<std::size_t>(node.feature) < dim_) {
            go_right = x[static_cast<std::size_t>(node.feature)] > node.threshold;
          } else {
            go_right = a == static_cast<std::size_t>(node.feature) - dim_;
          }
          k = go_right ? node.right : node.left;
        }
        total += tree[static_cast<std::size_t>(k)].value;
      }
      out[a] = std::clamp(total / static_cast<double>(trees_.size()), 0.0, reward_max_);
    }
  }

 private:
  std::size_t dim_;
  std::size_t actions_;
  double reward_max_;
  std::vector<std::vector<Node>> trees_;
};

class TreeBuilder {
 public:
  TreeBuilder(const BanditDataset& d, const ForestOptions& opts, const std::vector<std::vector<double>>& edges,
              const std::vector<std::uint8_t>& bins)
      : d_(d), opts_(opts), edges_(edges), bins_(bins), dim_(d.context_dim()), actions_(d.num_actions) {
    features_.resize(dim_ + actions_);
    for (std::size_t f = 0; f < features_.size(); ++f) features_[f] = f;
    max_features_ = opts.max_features ? std::min(opts.max_features, features_.size())
                                      : std::max<std::size_t>(1, (features_.size() + 2) / 3);
    std::size_t max_bins = 1;
    for (const auto& e : edges_) max_bins = std::max(max_bins, e.size() + 1);
    hist_n_.resize(std::max(max_bins, actions_));
    hist_s_.resize(hist_n_.size());
  }

  std::vector<Node> build(std::vector<std::size_t> idx, RandomStream& rng) {
    nodes_.clear();
    idx_ = std::move(idx);
    grow(0, idx_.size(), 0, rng);
    return std::move(nodes_);
  }

 private:
  int grow(std::size_t lo, std::size_t hi, std::size_t depth, RandomStream& rng) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const std::size_t n = hi - lo;
    double s = 0.0;
    double ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double r = d_.rewards[idx_[i]];
      s += r;
      ss += r * r;
    }
    nodes_[static_cast<std::size_t>(id)].value = n ? s / static_cast<double>(n) : 0.0;
    const double nd = static_cast<double>(n);
    if (depth >= opts_.max_depth || n < 2 * opts_.min_samples_leaf || ss - s * s / nd <= 1e-12 * nd) return id;

    // Candidate features: a random subset of size max_features.
    for (std::size_t i = 0; i < max_features_; ++i)
      std::swap(features_[i], features_[i + rng.index(features_.size() - i)]);

    const double parent = s * s / nd;
    double best_gain = 1e-12 * nd;
    int best_feature = -1;
    std::size_t best_bin = 0;
    bool action_hist_ready = false;
    const std::size_t min_leaf = std::max<std::size_t>(1, opts_.min_samples_leaf);

    for (std::size_t fi = 0; fi < max_features_; ++fi) {
      const std::size_t f = features_[fi];
      if (f < dim_) {
        const std::size_t nb = edges_[f].size() + 1;
        if (nb < 2) continue;
        std::fill(hist_n_.begin(), hist_n_.begin() + static_cast<long>(nb), 0.0);
        std::fill(hist_s_.begin(), hist_s_.begin() + static_cast<long>(nb), 0.0);
        for (std::size_t i = lo; i < hi; ++i) {
          const std::size_t row = idx_[i];
          const std::size_t b = bins_[row * dim_ + f];
          hist_n_[b] += 1.0;
          hist_s_[b] += d_.rewards[row];
        }
        double nl = 0.0;
        double sl = 0.0;
        for (std::size_t b = 0; b + 1 < nb; ++b) {
          nl += hist_n_[b];
          sl += hist_s_[b];
          const double nr = nd - nl;
          if (nl < static_cast<double>(min_leaf)) continue;
          if (nr < static_cast<double>(min_leaf)) break;
          const double sr = s - sl;
          const double gain = sl * sl / nl + sr * sr / nr - parent;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_bin = b;
          }
        }
      } else {
        if (!action_hist_ready) {
          act_n_.assign(actions_, 0.0);
          act_s_.assign(actions_, 0.0);
          for (std::size_t i = lo; i < hi; ++i) {
            const std::size_t row = idx_[i];
            const auto a = static_cast<std::size_t>(d_.actions[row]);
            act_n_[a] += 1.0;
            act_s_[a] += d_.rewards[row];
          }
          action_hist_ready = true;
        }
        const std::size_t a = f - dim_;
        const double nr = act_n_[a];
        const double nl = nd - nr;
        if (nr < static_cast<double>(min_leaf) || nl < static_cast<double>(min_leaf)) continue;
        const double sr = act_s_[a];
        const double sl = s - sr;
        const double gain = sl * sl / nl + sr * sr / nr - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
        }
      }
    }
    if (best_feature < 0) return id;

    const auto bf = static_cast<std::size_t>(best_feature);
    auto goes_left = [&](std::size_t row) {
      if (bf < dim_) return bins_[row * dim_ + bf] <= best_bin;
      return static_cast<std::size_t>(d_.actions[row]) != bf - dim_;
    };
    auto mid = std::stable_partition(idx_.begin() + static_cast<long>(lo), idx_.begin() + static_cast<long>(hi),
                                     goes_left);
    const auto split = static_cast<std::size_t>(mid - idx_.begin());

    nodes_[static_cast<std::size_t>(id)].feature = best_feature;
    nodes_[static_cast<std::size_t>(id)].threshold = bf < dim_ ? edges_[bf][best_bin] : 0.5;
    const int left = grow(lo, split, depth + 1, rng);
    const int right = grow(split, hi, depth + 1, rng);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  const BanditDataset& d_;
  const ForestOptions& opts_;
  const std::vector<std::vector<double>>& edges_;
  const std::vector<std::uint8_t>& bins_;
  std::size_t dim_;
  std::size_t actions_;
  std::size_t max_features_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> idx_;
  std::vector<Node> nodes_;
  std::vector<double> hist_n_, hist_s_, act_n_, act_s_;
};

std::unique_ptr<RewardModel> fit_forest(const BanditDataset& d, const ForestOptions& opts, RandomStream& rng) {
  if (opts.n_trees == 0) throw ConfigError("forest needs at least one tree");
  if (opts.bins < 2 || opts.bins > 256) throw ConfigError("forest bins must lie in [2, 256]");
  const std::size_t n = d.size();
  const std::size_t dim = d.context_dim();

  // Quantile bin edges per continuous feature, from at most 20000 evenly spaced rows.
  std::vector<std::vector<double>> edges(dim);
  const std::size_t step = std::max<std::size_t>(1, n / 20000);
  std::vector<double> vals;
  for (std::size_t t = 0; t < dim; ++t) {
    vals.clear();
    for (std::size_t i = 0; i < n; i += step) vals.push_back(d.contexts(i, t));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    auto& e = edges[t];
    if (vals.size() <= opts.bins) {
      // Few distinct values: split between each consecutive pair.
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) e.push_back(vals[k]);
    } else {
      for (std::size_t b = 1; b < opts.bins; ++b) {
        const double edge = vals[b * vals.size() / opts.bins];
        if (e.empty() || edge > e.back()) e.push_back(edge);
      }
    }
  }
  std::vector<std::uint8_t> bins(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < dim; ++t) {
      const auto& e = edges[t];
      bins[i * dim + t] = static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), d.contexts(i, t)) - e.begin());
    }

  TreeBuilder builder(d, opts, edges, bins);
  std::vector<std::vector<Node>> trees;
  trees.reserve(opts.n_trees);
  for (std::size_t k = 0; k < opts.n_trees; ++k) {
    RandomStream tree_rng = rng.substream(k);
    std::vector<std::size_t> idx(n);
    if (opts.bootstrap) {
      for (auto& v : idx) v = tree_rng.index(n);
    } else {
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    }
    trees.push_back(builder.build(std::move(idx), tree_rng));
  }
  return std::make_unique<ForestRewardModel>(dim, d.num_actions, d.reward_max, std::move(trees));
}

}  // namespace

std::unique_ptr<RewardModel> fit_reward_model(const BanditDataset& d, const RewardModelOptions& opts,
                                              RandomStream& rng) {
  if (d.size() == 0) throw ValidationError("cannot fit a reward model on an empty dataset");
  if (opts.family == RewardFamily::Constant) {
    double s = 0.0;
    for (double r : d.rewards) s += r;
    return std::make_unique<ConstantRewardModel>(d.num_actions, s / static_cast<double>(d.size()));
  }
  return fit_forest(d, opts.forest, rng);
}

}  // namespace ope
