#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>

#include "ope/dataset.hpp"
#include "ope/matrix.hpp"
#include "ope/random.hpp"

namespace ope {

// A fitted regressor q_hat(a, x). Predictions are clamped to [0, R_max].
class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual std::size_t num_actions() const = 0;
  // q_hat(., x) for every action.
  virtual void predict(std::span<const double> context, std::span<double> out) const = 0;
  virtual std::string family() const = 0;
};

// q_hat(. | x_i) for every row of `contexts` (N x A).
Matrix reward_rows(const RewardModel& model, const Matrix& contexts);

class ConstantRewardModel final : public RewardModel {
 public:
  ConstantRewardModel(std::size_t num_actions, double value) : actions_(num_actions), value_(value) {}
  std::size_t num_actions() const override { return actions_; }
  void predict(std::span<const double>, std::span<double> out) const override;
  std::string family() const override { return "constant"; }

 private:
  std::size_t actions_;
  double value_;
};

class FunctionRewardModel final : public RewardModel {
 public:
  using Fn = std::function<double(std::span<const double> context, std::size_t action)>;
  FunctionRewardModel(std::size_t num_actions, Fn fn, double reward_max = 1.0)
      : actions_(num_actions), fn_(std::move(fn)), reward_max_(reward_max) {}
  std::size_t num_actions() const override { return actions_; }
  void predict(std::span<const double> context, std::span<double> out) const override;
  std::string family() const override { return "function"; }

 private:
  std::size_t actions_;
  Fn fn_;
  double reward_max_;
};

// Ensemble of regression trees on features (x, one-hot a). Continuous features
// are split on quantile bin edges; an action feature splits {a == j} from the rest.
struct ForestOptions {
  std::size_t n_trees = 20;
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 5;
  // Candidate features per split; 0 means ceil(F / 3) with F = d_x + A.
  std::size_t max_features = 0;
  std::size_t bins = 32;
  bool bootstrap = false;
};

enum class RewardFamily { Forest, Constant };

struct RewardModelOptions {
  RewardFamily family = RewardFamily::Forest;
  ForestOptions forest;
};

// Throws ValidationError for an empty dataset.
std::unique_ptr<RewardModel> fit_reward_model(const BanditDataset& d, const RewardModelOptions& opts,
                                              RandomStream& rng);

}  // namespace ope
