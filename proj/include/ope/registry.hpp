#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "ope/clustering.hpp"
#include "ope/dataset.hpp"
#include "ope/matrix.hpp"
#include "ope/random.hpp"
#include "ope/reward_model.hpp"

namespace ope {

// Inputs shared by every estimator run on one dataset. Fitted reward models are
// cached per option set so DM, DR and friends reuse the same fit.
class EvaluationSession {
 public:
  EvaluationSession(const BanditDataset& data, Matrix pi_rows, std::uint64_t seed);

  const BanditDataset& data() const { return *data_; }
  const Matrix& pi_rows() const { return pi_rows_; }
  std::uint64_t seed() const { return seed_; }

  // Deterministic stream for a named purpose within this session.
  RandomStream stream(std::uint64_t purpose) const { return RandomStream(seed_, purpose); }

  // q_hat rows (N x A), fitted on first request.
  const Matrix& reward_rows(const RewardModelOptions& opts);
  // Supplies q_hat rows directly; used for every reward-model request afterwards.
  void set_reward_rows(Matrix rows);

  // k-means partition of the contexts, fitted once per (k, options).
  std::shared_ptr<const ContextPartition> partition(std::size_t k, const KMeansOptions& opts);

 private:
  const BanditDataset* data_;
  Matrix pi_rows_;
  std::uint64_t seed_;
  std::optional<Matrix> fixed_rewards_;
  std::map<std::string, Matrix> reward_cache_;
  std::map<std::string, std::shared_ptr<const ContextPartition>> partition_cache_;
};

struct EstimatorSpec {
  std::string name;
  nlohmann::json options = nlohmann::json::object();
};

// Name -> estimator function with a strict option schema.
class EstimatorRegistry {
 public:
  using Fn = std::function<Estimate(EvaluationSession&, const nlohmann::json& options)>;

  void add(const std::string& name, std::set<std::string> option_keys, Fn fn);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  bool accepts_option(const std::string& name, const std::string& key) const;
  std::vector<std::string> names() const;

  // Throws ConfigError for an unknown name or option key.
  void check(const EstimatorSpec& spec) const;
  Estimate run(EvaluationSession& session, const EstimatorSpec& spec) const;

  // ips, snips, dm, dr, sndr, dros, switch-dr, mr, mips, chips-ml, chips-map.
  static const EstimatorRegistry& defaults();

 private:
  struct Entry {
    std::set<std::string> keys;
    Fn fn;
  };
  std::map<std::string, Entry> entries_;
};

// Parses a reward_model option block: {"family": "forest"|"constant", "n_trees", ...}.
RewardModelOptions parse_reward_options(const nlohmann::json& j);

}  // namespace ope
