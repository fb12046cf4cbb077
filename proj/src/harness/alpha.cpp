#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ope/errors.hpp"
#include "ope/estimators.hpp"
#include "ope/harness.hpp"
#include "replication.hpp"

namespace ope {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json edge_to_json(double e) { return std::isinf(e) ? nlohmann::json("inf") : nlohmann::json(e); }

double edge_from_json(const nlohmann::json& j) {
  if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "infinity")) return kInf;
  if (!j.is_number()) throw ConfigError("alpha reference edges must be numbers or \"inf\"");
  return j.get<double>();
}

}  // namespace

double AlphaReference::lookup(double points_per_cell) const {
  for (std::size_t i = 0; i < upper_edges.size(); ++i)
    if (points_per_cell < upper_edges[i]) return alphas[i];
  return alphas.back();
}

void AlphaReference::validate() const {
  if (upper_edges.empty() || upper_edges.size() != alphas.size())
    throw ConfigError("alpha reference needs one alpha per bucket");
  for (std::size_t i = 1; i < upper_edges.size(); ++i)
    if (!(upper_edges[i] > upper_edges[i - 1])) throw ConfigError("alpha reference edges must be ascending");
  if (!std::isinf(upper_edges.back())) throw ConfigError("the last alpha reference edge must be inf");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 1.0)) throw ConfigError("alpha reference values must be > 1");
    if (i > 0 && alphas[i] < alphas[i - 1]) throw ConfigError("alpha reference values must be nondecreasing");
  }
}

nlohmann::json AlphaReference::to_json() const {
  nlohmann::json edges = nlohmann::json::array();
  for (double e : upper_edges) edges.push_back(edge_to_json(e));
  return {{"upper_edges", edges}, {"alphas", alphas}};
}

AlphaReference AlphaReference::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("upper_edges") || !j.contains("alphas"))
    throw ConfigError("alpha reference needs 'upper_edges' and 'alphas'");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "upper_edges" && it.key() != "alphas") throw ConfigError("unknown alpha reference key '" + it.key() + "'");
  AlphaReference r;
  for (const auto& e : j.at("upper_edges")) r.upper_edges.push_back(edge_from_json(e));
  r.alphas = j.at("alphas").get<std::vector<double>>();
  r.validate();
  return r;
}

const AlphaReference& AlphaReference::shipped() {
  // Output of `ope alpha-select --calibrate` with configs/alpha_calibration.json (also in data/alpha_reference.json).
  static const AlphaReference ref = [] {
    AlphaReference r;
    r.upper_edges = {2.0, 5.0, 10.0, 25.0, 100.0, 400.0, kInf};
    r.alphas = {1.01, 1.01, 1.01, 1.01, 20.0, 20.0, 20.0};
    r.validate();
    return r;
  }();
  return ref;
}

AlphaSelection select_alpha(const BanditDataset& train, const Matrix& pi_rows, const ContextPartition& partition,
                            const AlphaReference& reference, RandomStream& rng) {
  if (train.size() == 0) throw ValidationError("alpha selection needs a nonempty dataset");
  if (pi_rows.rows() != train.size()) throw ValidationError("policy rows must be N x A");
  const std::size_t K = partition.num_clusters(), A = pi_rows.cols();
  const std::vector<int> ids = partition.assign_all(train.contexts);
  const RowSampler sampler(pi_rows);
  std::vector<std::size_t> counts(K * A, 0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const std::size_t a = sampler.sample(i, rng.uniform());
    ++counts[static_cast<std::size_t>(ids[i]) * A + a];
  }
  AlphaSelection out;
  std::size_t total = 0;
  for (std::size_t c : counts)
    if (c > 0) {
      ++out.occupied_cells;
      total += c;
    }
  out.points_per_cell = static_cast<double>(total) / static_cast<double>(out.occupied_cells);
  out.alpha = reference.lookup(out.points_per_cell);
  return out;
}

AlphaSelection select_alpha(const BanditDataset& train, const PolicyEvaluator& pi, const ContextPartition& partition,
                            const AlphaReference& reference, RandomStream& rng) {
  return select_alpha(train, policy_rows(pi, train.contexts), partition, reference, rng);
}

CalibrationResult calibrate_alpha_reference(const CalibrationSpec& spec) {
  spec.base.validate();
  if (spec.sample_sizes.empty() || spec.cluster_counts.empty() || spec.alphas.empty())
    throw ConfigError("calibration needs sample sizes, cluster counts and alphas");
  if (spec.replications < 1) throw ConfigError("replications must be >= 1");
  for (double a : spec.alphas)
    if (!(a > 1.0)) throw ConfigError("candidate alphas must be > 1");
  std::vector<double> edges = spec.bucket_edges;
  std::sort(edges.begin(), edges.end());
  if (edges.empty() || !std::isinf(edges.back())) edges.push_back(kInf);

  CalibrationResult out;
  for (long long n : spec.sample_sizes)
    for (int k : spec.cluster_counts) {
      SynthConfig cfg = spec.base;
      cfg.n_samples = n;
      cfg.emp_c_num = k;
      cfg.validate();
      std::vector<double> se(spec.alphas.size(), 0.0);
      double ips_se = 0.0, ppc = 0.0;
      for (std::size_t r = 0; r < spec.replications; ++r) {
        const std::uint64_t seed = derive_seed(spec.seed, r);
        detail::LoggedSample s = detail::draw_logged_sample(cfg, seed);
        EvaluationSession session(s.data, std::move(s.pi_rows), mix64(seed ^ streams::kEstimators));
        ChipsOptions opts;
        opts.partition = session.partition(static_cast<std::size_t>(k), KMeansOptions{});
        RandomStream draw = session.stream(streams::kEvaluation);
        ppc += select_alpha(s.data, session.pi_rows(), *opts.partition, AlphaReference::shipped(), draw).points_per_cell;
        const double e_ips = estimate_ips(s.data, session.pi_rows()).value - s.true_value;
        ips_se += e_ips * e_ips;
        for (std::size_t i = 0; i < spec.alphas.size(); ++i) {
          opts.alpha = spec.alphas[i];
          const double e = estimate_chips(s.data, session.pi_rows(), opts).value - s.true_value;
          se[i] += e * e;
        }
      }
      const double R = static_cast<double>(spec.replications);
      const std::size_t best = static_cast<std::size_t>(std::min_element(se.begin(), se.end()) - se.begin());
      out.rows.push_back({n, k, ppc / R, spec.alphas[best], se[best] / R, ips_se / R});
    }

  // Per bucket: the geometric mean of the winning alphas, snapped to the candidate grid.
  const std::size_t B = edges.size();
  std::vector<double> log_sum(B, 0.0);
  std::vector<std::size_t> hits(B, 0);
  for (const auto& row : out.rows) {
    const std::size_t b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), row.points_per_cell) -
                                                   edges.begin());
    const std::size_t bb = std::min(b, B - 1);
    log_sum[bb] += std::log(row.alpha);
    ++hits[bb];
  }
  std::vector<double> grid = spec.alphas;
  std::sort(grid.begin(), grid.end());
  auto snap = [&](double a) {
    double best = grid.front();
    for (double g : grid)
      if (std::abs(std::log(g) - std::log(a)) < std::abs(std::log(best) - std::log(a))) best = g;
    return best;
  };
  std::vector<double> alphas(B, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t b = 0; b < B; ++b)
    if (hits[b]) alphas[b] = snap(std::exp(log_sum[b] / static_cast<double>(hits[b])));

  std::size_t anchor = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), spec.anchor_points) -
                                                edges.begin());
  anchor = std::min(anchor, B - 1);
  alphas[anchor] = spec.anchor_alpha;
  // Fill empty buckets from the nearest filled one below (or above), then make the table monotone around the anchor.
  for (std::size_t b = 1; b < B; ++b)
    if (std::isnan(alphas[b])) alphas[b] = alphas[b - 1];
  for (std::size_t b = B - 1; b-- > 0;)
    if (std::isnan(alphas[b])) alphas[b] = alphas[b + 1];
  for (std::size_t b = anchor; b-- > 0;) alphas[b] = std::min(alphas[b], alphas[b + 1]);
  for (std::size_t b = anchor + 1; b < B; ++b) alphas[b] = std::max(alphas[b], alphas[b - 1]);

  out.reference.upper_edges = edges;
  out.reference.alphas = alphas;
  out.reference.validate();
  return out;
}

}  // namespace ope
