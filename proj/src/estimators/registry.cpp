#include "ope/registry.hpp"

#include <cmath>
#include <limits>

#include "ope/clustering.hpp"
#include "ope/errors.hpp"
#include "ope/estimators.hpp"

namespace ope {

namespace {

const nlohmann::json kNoOptions = nlohmann::json::object();

constexpr std::uint64_t kClusterPurpose = 11;
constexpr std::uint64_t kRewardPurpose = 12;

double number(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity"))
    return std::numeric_limits<double>::infinity();
  if (!v.is_number()) throw ConfigError(std::string("option '") + key + "' must be a number");
  return v.get<double>();
}

std::size_t count(const nlohmann::json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() && !(v.is_number() && v.get<double>() == std::floor(v.get<double>())))
    throw ConfigError(std::string("option '") + key + "' must be an integer");
  const double x = v.get<double>();
  if (x < 0) throw ConfigError(std::string("option '") + key + "' must be >= 0");
  return static_cast<std::size_t>(x);
}

Estimate run_chips(EvaluationSession& s, const nlohmann::json& o, ChipsMode mode) {
  ChipsOptions opts;
  opts.mode = mode;
  opts.alpha = number(o, "alpha", 20.0);
  if (o.contains("beta_hat")) opts.beta_hat = number(o, "beta_hat", opts.alpha);
  if (o.contains("n_clusters")) {
    KMeansOptions km;
    km.batch = count(o, "batch", km.batch);
    km.iterations = count(o, "iterations", km.iterations);
    opts.partition = s.partition(count(o, "n_clusters", 0), km);
  }
  return estimate_chips(s.data(), s.pi_rows(), opts);
}

const nlohmann::json& reward_block(const nlohmann::json& o) {
  static const nlohmann::json empty = nlohmann::json::object();
  return o.contains("reward_model") ? o.at("reward_model") : empty;
}

}  // namespace

RewardModelOptions parse_reward_options(const nlohmann::json& j) {
  static const std::set<std::string> keys{"family", "n_trees", "max_depth", "min_samples_leaf",
                                          "max_features", "bins", "bootstrap"};
  if (!j.is_object()) throw ConfigError("reward_model options must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.count(it.key())) throw ConfigError("unknown reward_model option '" + it.key() + "'");
  RewardModelOptions opts;
  if (j.contains("family")) {
    const auto f = j.at("family").get<std::string>();
    if (f == "forest") {
      opts.family = RewardFamily::Forest;
    } else if (f == "constant") {
      opts.family = RewardFamily::Constant;
    } else {
      throw ConfigError("unknown reward_model family '" + f + "'");
    }
  }
  auto& fo = opts.forest;
  fo.n_trees = count(j, "n_trees", fo.n_trees);
  fo.max_depth = count(j, "max_depth", fo.max_depth);
  fo.min_samples_leaf = count(j, "min_samples_leaf", fo.min_samples_leaf);
  fo.max_features = count(j, "max_features", fo.max_features);
  fo.bins = count(j, "bins", fo.bins);
  if (j.contains("bootstrap")) {
    if (!j.at("bootstrap").is_boolean()) throw ConfigError("option 'bootstrap' must be a boolean");
    fo.bootstrap = j.at("bootstrap").get<bool>();
  }
  return opts;
}

EvaluationSession::EvaluationSession(const BanditDataset& data, Matrix pi_rows, std::uint64_t seed)
    : data_(&data), pi_rows_(std::move(pi_rows)), seed_(seed) {
  if (pi_rows_.rows() != data.size() || pi_rows_.cols() != data.num_actions)
    throw ValidationError("policy rows must be N x A");
}

const Matrix& EvaluationSession::reward_rows(const RewardModelOptions& opts) {
  if (fixed_rewards_) return *fixed_rewards_;
  const auto& f = opts.forest;
  const std::string key = std::to_string(static_cast<int>(opts.family)) + ":" + std::to_string(f.n_trees) + ":" +
                          std::to_string(f.max_depth) + ":" + std::to_string(f.min_samples_leaf) + ":" +
                          std::to_string(f.max_features) + ":" + std::to_string(f.bins) + ":" +
                          std::to_string(f.bootstrap);
  auto it = reward_cache_.find(key);
  if (it != reward_cache_.end()) return it->second;
  RandomStream rng = stream(kRewardPurpose);
  auto model = fit_reward_model(*data_, opts, rng);
  return reward_cache_.emplace(key, ope::reward_rows(*model, data_->contexts)).first->second;
}

void EvaluationSession::set_reward_rows(Matrix rows) {
  if (rows.rows() != data_->size() || rows.cols() != data_->num_actions)
    throw ValidationError("reward rows must be N x A");
  fixed_rewards_ = std::move(rows);
}

std::shared_ptr<const ContextPartition> EvaluationSession::partition(std::size_t k, const KMeansOptions& opts) {
  const std::string key = std::to_string(k) + ":" + std::to_string(opts.batch) + ":" + std::to_string(opts.iterations);
  auto it = partition_cache_.find(key);
  if (it != partition_cache_.end()) return it->second;
  RandomStream rng = stream(kClusterPurpose);
  auto p = MiniBatchKMeans(k, opts).fit(data_->contexts, rng);
  partition_cache_.emplace(key, p);
  return p;
}

void EstimatorRegistry::add(const std::string& name, std::set<std::string> option_keys, Fn fn) {
  entries_[name] = Entry{std::move(option_keys), std::move(fn)};
}

bool EstimatorRegistry::accepts_option(const std::string& name, const std::string& key) const {
  auto it = entries_.find(name);
  return it != entries_.end() && it->second.keys.count(key) != 0;
}

std::vector<std::string> EstimatorRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

void EstimatorRegistry::check(const EstimatorSpec& spec) const {
  auto it = entries_.find(spec.name);
  if (it == entries_.end()) throw ConfigError("unknown estimator '" + spec.name + "'");
  if (!spec.options.is_object() && !spec.options.is_null())
    throw ConfigError("options for '" + spec.name + "' must be an object");
  for (auto o = spec.options.begin(); o != spec.options.end(); ++o)
    if (!it->second.keys.count(o.key()))
      throw ConfigError("estimator '" + spec.name + "' has no option '" + o.key() + "'");
  if (spec.options.contains("reward_model")) parse_reward_options(spec.options.at("reward_model"));
}

Estimate EstimatorRegistry::run(EvaluationSession& session, const EstimatorSpec& spec) const {
  check(spec);
  const nlohmann::json& options = spec.options.is_null() ? kNoOptions : spec.options;
  Estimate e = entries_.at(spec.name).fn(session, options);
  e.estimator = spec.name;
  return e;
}

const EstimatorRegistry& EstimatorRegistry::defaults() {
  static const EstimatorRegistry reg = [] {
    EstimatorRegistry r;
    r.add("ips", {}, [](EvaluationSession& s, const nlohmann::json&) { return estimate_ips(s.data(), s.pi_rows()); });
    r.add("snips", {},
          [](EvaluationSession& s, const nlohmann::json&) { return estimate_snips(s.data(), s.pi_rows()); });
    r.add("dm", {"reward_model"}, [](EvaluationSession& s, const nlohmann::json& o) {
      return estimate_dm(s.data(), s.pi_rows(), s.reward_rows(parse_reward_options(reward_block(o))));
    });
    r.add("dr", {"reward_model"}, [](EvaluationSession& s, const nlohmann::json& o) {
      return estimate_dr(s.data(), s.pi_rows(), s.reward_rows(parse_reward_options(reward_block(o))));
    });
    r.add("sndr", {"reward_model"}, [](EvaluationSession& s, const nlohmann::json& o) {
      return estimate_sndr(s.data(), s.pi_rows(), s.reward_rows(parse_reward_options(reward_block(o))));
    });
    r.add("dros", {"lambda", "reward_model"}, [](EvaluationSession& s, const nlohmann::json& o) {
      return estimate_dros(s.data(), s.pi_rows(), s.reward_rows(parse_reward_options(reward_block(o))),
                           number(o, "lambda", 1.0));
    });
    r.add("switch-dr", {"tau", "reward_model"}, [](EvaluationSession& s, const nlohmann::json& o) {
      std::optional<double> tau;
      if (o.contains("tau")) tau = number(o, "tau", 0.0);
      return estimate_switch_dr(s.data(), s.pi_rows(), s.reward_rows(parse_reward_options(reward_block(o))), tau);
    });
    r.add("mr", {"bins"}, [](EvaluationSession& s, const nlohmann::json& o) {
      return estimate_mr(s.data(), s.pi_rows(), count(o, "bins", 20));
    });
    r.add("mips", {"embedding"}, [](EvaluationSession& s, const nlohmann::json& o) {
      std::vector<int> emb;
      if (o.contains("embedding")) {
        if (!o.at("embedding").is_array()) throw ConfigError("option 'embedding' must be an array of integers");
        emb = o.at("embedding").get<std::vector<int>>();
      }
      return estimate_mips(s.data(), s.pi_rows(), emb);
    });
    r.add("chips-ml", {"n_clusters", "batch", "iterations"},
          [](EvaluationSession& s, const nlohmann::json& o) { return run_chips(s, o, ChipsMode::ML); });
    r.add("chips-map", {"n_clusters", "batch", "iterations", "alpha", "beta_hat"},
          [](EvaluationSession& s, const nlohmann::json& o) { return run_chips(s, o, ChipsMode::MAP); });
    return r;
  }();
  return reg;
}

}  // namespace ope
