#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "ope/clustering.hpp"
#include "ope/dataset.hpp"
#include "ope/policy.hpp"
#include "ope/random.hpp"
#include "ope/registry.hpp"
#include "ope/synthgen.hpp"

namespace ope {

// ---- Replication sweeps ----

struct SweepSpec {
  SynthConfig base;
  std::string parameter;  // SynthConfig field or estimator option key
  std::vector<double> values;
  std::vector<EstimatorSpec> estimators;
  std::size_t replications = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate(const EstimatorRegistry& registry = EstimatorRegistry::defaults()) const;
};

struct ReportCell {
  double value = 0.0;  // parameter value
  std::string estimator;
  double mse = 0.0;
  double squared_bias = 0.0;
  double variance = 0.0;
  double mean_estimate = 0.0;
  double mean_true_value = 0.0;
  double std_across_seeds = 0.0;
  double relative_mse_vs_ips = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_seeds = 0;  // seeds with a finite estimate
  std::vector<double> estimates;    // per seed, NaN on failure
  std::vector<double> true_values;  // per seed
  std::vector<std::string> errors;  // per seed, empty on success
};

struct EstimateReport {
  std::string parameter;
  std::vector<double> values;
  std::vector<std::string> estimators;
  std::vector<ReportCell> cells;  // ordered by (value index, estimator index)

  const ReportCell& cell(std::size_t value_index, std::size_t estimator_index) const;
  const ReportCell* find(double value, const std::string& estimator) const;
};

// Fills mse / bias / variance from per-seed estimates and true values. Error
// terms e_s = estimate_s - truth_s; bias is their mean, variance their
// population variance, so mse = bias^2 + variance exactly.
void summarize_cell(ReportCell& cell);

EstimateReport run_sweep(const SweepSpec& spec,
                         const EstimatorRegistry& registry = EstimatorRegistry::defaults());

// One replication: the world, logged data and estimator values for a single seed.
struct ReplicationResult {
  double true_value = 0.0;
  std::vector<double> estimates;
  std::vector<std::string> errors;
};
ReplicationResult run_replication(const SynthConfig& cfg, const std::vector<EstimatorSpec>& estimators,
                                  std::uint64_t world_seed,
                                  const EstimatorRegistry& registry = EstimatorRegistry::defaults());

// Estimator options with the config-driven defaults applied (e.g. chips n_clusters = emp_c_num).
EstimatorSpec resolve_estimator(const EstimatorSpec& spec, const SynthConfig& cfg,
                                const EstimatorRegistry& registry = EstimatorRegistry::defaults());

void write_report_csv(std::ostream& out, const EstimateReport& report);

// ---- Bootstrap ECDF protocol ----

struct EcdfCurve {
  std::string estimator;
  std::vector<double> z;  // sorted ratios
  std::vector<double> f;  // F(z_i) = #{Z <= z_i} / T
};

// Step function value of an ECDF at x.
double ecdf_at(const EcdfCurve& curve, double x);
EcdfCurve make_ecdf(std::string estimator, std::vector<double> ratios);

struct EcdfResult {
  double policy_value = 0.0;  // mean reward of the evaluation data
  std::vector<EcdfCurve> curves;
  std::vector<std::vector<double>> squared_errors;  // [estimator][resample]
  std::vector<double> ips_squared_errors;
};

// T bootstrap resamples of size n from the logged data; every estimator's squared
// error is divided by IPS's on the same resample. Clusterers and reward models are
// refit per resample.
EcdfResult ecdf_protocol(const BanditDataset& log, const BanditDataset& eval, const PolicyEvaluator& pi,
                         const std::vector<EstimatorSpec>& estimators, std::size_t n, std::size_t T,
                         RandomStream& rng, const EstimatorRegistry& registry = EstimatorRegistry::defaults());
// Same, with pi(. | x_i) already evaluated on the logged contexts.
EcdfResult ecdf_protocol(const BanditDataset& log, const Matrix& log_pi_rows, const BanditDataset& eval,
                         const std::vector<EstimatorSpec>& estimators, std::size_t n, std::size_t T,
                         RandomStream& rng, const EstimatorRegistry& registry = EstimatorRegistry::defaults());

void write_ecdf_csv(std::ostream& out, const EcdfResult& result);

// ---- Prior strength selection ----

// Maps the expected number of evaluation draws per (cluster, action) cell to a
// Beta prior strength. Buckets are [edge_{i-1}, edge_i); the last edge is +inf.
struct AlphaReference {
  std::vector<double> upper_edges;
  std::vector<double> alphas;

  double lookup(double points_per_cell) const;
  void validate() const;  // sizes match, edges ascending, alphas > 1 and nondecreasing
  nlohmann::json to_json() const;
  static AlphaReference from_json(const nlohmann::json& j);
  // The table shipped with the library (regenerable with `ope alpha-select --calibrate`).
  static const AlphaReference& shipped();
};

struct AlphaSelection {
  double alpha = 0.0;
  double points_per_cell = 0.0;
  std::size_t occupied_cells = 0;
};

// Draws one action per training context from pi, counts draws per
// (cluster, action) cell and reads alpha for the mean count over occupied cells.
AlphaSelection select_alpha(const BanditDataset& train, const Matrix& pi_rows, const ContextPartition& partition,
                            const AlphaReference& reference, RandomStream& rng);
AlphaSelection select_alpha(const BanditDataset& train, const PolicyEvaluator& pi,
                            const ContextPartition& partition, const AlphaReference& reference,
                            RandomStream& rng);

struct CalibrationSpec {
  SynthConfig base;
  std::vector<long long> sample_sizes;  // n_samples grid
  std::vector<int> cluster_counts;      // emp_c_num grid
  std::vector<double> alphas;           // candidate prior strengths
  std::vector<double> bucket_edges;     // upper edges of the points-per-cell buckets (last = inf added)
  std::size_t replications = 20;
  std::uint64_t seed = 0;
  // The anchor: a bucket containing `anchor_points` is pinned to `anchor_alpha`.
  double anchor_points = 52.0;
  double anchor_alpha = 20.0;
};

struct CalibrationRow {
  long long n_samples;
  int clusters;
  double points_per_cell;
  double alpha;
  double mse;
  double ips_mse;
};

struct CalibrationResult {
  AlphaReference reference;
  std::vector<CalibrationRow> rows;
};

CalibrationResult calibrate_alpha_reference(const CalibrationSpec& spec);

// ---- Classification data as bandit feedback ----

struct ConversionOptions {
  double train_fraction = 0.5;  // share used to fit the scorer; the rest becomes bandit data
  double logging_temperature = 5.0;  // +inf gives uniform logging
  double eval_epsilon = 0.1;
  std::size_t epochs = 300;
  double learning_rate = 0.5;
  double l2 = 1e-4;
};

// Multinomial logistic scorer s(x) = W x + b.
class LinearScorer {
 public:
  LinearScorer(Matrix weights, std::vector<double> bias);
  std::size_t num_classes() const { return weights_.rows(); }
  std::size_t dim() const { return weights_.cols(); }
  void scores(std::span<const double> x, std::span<double> out) const;
  std::size_t predict(std::span<const double> x) const;

 private:
  Matrix weights_;
  std::vector<double> bias_;
};

LinearScorer fit_logistic_scorer(const Matrix& features, std::span<const int> labels, std::size_t num_classes,
                                 const ConversionOptions& opts);

// softmax(s(x) / T); uniform when T is infinite.
class SoftmaxPolicy final : public PolicyEvaluator {
 public:
  SoftmaxPolicy(std::shared_ptr<const LinearScorer> scorer, double temperature);
  std::size_t num_actions() const override { return scorer_->num_classes(); }
  void probabilities(std::span<const double> x, std::span<double> out) const override;

 private:
  std::shared_ptr<const LinearScorer> scorer_;
  double temperature_;
};

// (1 - eps) on the top-scoring class, eps spread uniformly.
class EpsilonGreedyPolicy final : public PolicyEvaluator {
 public:
  EpsilonGreedyPolicy(std::shared_ptr<const LinearScorer> scorer, double epsilon);
  std::size_t num_actions() const override { return scorer_->num_classes(); }
  void probabilities(std::span<const double> x, std::span<double> out) const override;

 private:
  std::shared_ptr<const LinearScorer> scorer_;
  double epsilon_;
};

struct ConvertedBandit {
  BanditDataset data;
  std::vector<int> labels;  // true class of each bandit row
  std::shared_ptr<const LinearScorer> scorer;
  std::shared_ptr<const PolicyEvaluator> logging_policy;
  std::shared_ptr<const PolicyEvaluator> eval_policy;
  double true_value = 0.0;  // mean_i pi(label_i | x_i) over the bandit rows
};

// Throws ConfigError for fewer than two classes and ValidationError for a class without examples.
ConvertedBandit classification_to_bandit(const Matrix& features, std::span<const int> labels,
                                         std::size_t num_classes, const ConversionOptions& opts,
                                         RandomStream& rng);

// Logged data drawn again from an already converted problem (fresh actions and rewards).
BanditDataset resample_bandit_actions(const ConvertedBandit& problem, RandomStream& rng);

// ---- Timing ----

struct BenchSpec {
  SynthConfig base;
  std::vector<long long> sizes;
  std::vector<EstimatorSpec> estimators;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
  bool time_clustering = true;  // adds a "kmeans-fit" row per size
  // Sweep a buffer larger than the last-level cache before every timed run, so
  // small and large inputs are measured under the same cache state.
  bool cold_cache = true;
};

struct BenchRow {
  std::string estimator;
  long long n;
  double seconds;  // median over repeats
};

std::vector<BenchRow> run_benchmark(const BenchSpec& spec,
                                    const EstimatorRegistry& registry = EstimatorRegistry::defaults());
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace ope
