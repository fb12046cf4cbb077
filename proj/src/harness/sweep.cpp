#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "ope/csv.hpp"
#include "ope/errors.hpp"
#include "ope/harness.hpp"
#include "replication.hpp"

namespace ope {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_synth_field(const std::string& name) {
  const auto& f = SynthConfig::field_names();
  return std::find(f.begin(), f.end(), name) != f.end();
}

std::vector<EstimatorSpec> apply_value(const std::vector<EstimatorSpec>& specs, const std::string& parameter,
                                       double value, const EstimatorRegistry& registry) {
  std::vector<EstimatorSpec> out = specs;
  for (auto& s : out)
    if (registry.accepts_option(s.name, parameter)) s.options[parameter] = value;
  return out;
}

std::size_t thread_count(std::size_t requested, std::size_t tasks) {
  std::size_t t = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(t, tasks));
}

}  // namespace

void SweepSpec::validate(const EstimatorRegistry& registry) const {
  base.validate();
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (estimators.empty()) throw ConfigError("a sweep needs at least one estimator");
  for (const auto& e : estimators) registry.check(e);
  if (parameter.empty()) {
    if (values.size() > 1) throw ConfigError("a value grid needs a parameter name");
    return;
  }
  if (values.empty()) throw ConfigError("the value grid is empty");
  if (is_synth_field(parameter)) {
    for (double v : values) {
      SynthConfig c = base;
      c.set(parameter, v);
      c.validate();
    }
    return;
  }
  bool used = false;
  for (const auto& e : estimators) used = used || registry.accepts_option(e.name, parameter);
  if (!used) throw ConfigError("'" + parameter + "' is neither a synthetic-world field nor an option of any listed estimator");
}

const ReportCell& EstimateReport::cell(std::size_t value_index, std::size_t estimator_index) const {
  return cells.at(value_index * estimators.size() + estimator_index);
}

const ReportCell* EstimateReport::find(double value, const std::string& estimator) const {
  for (const auto& c : cells)
    if (c.value == value && c.estimator == estimator) return &c;
  return nullptr;
}

void summarize_cell(ReportCell& cell) {
  double sum_e = 0.0, sum_e2 = 0.0, sum_est = 0.0, sum_true = 0.0;
  std::size_t n = 0;
  for (std::size_t s = 0; s < cell.estimates.size(); ++s) {
    const double est = cell.estimates[s];
    if (!std::isfinite(est)) continue;
    const double e = est - cell.true_values[s];
    sum_e += e;
    sum_est += est;
    sum_true += cell.true_values[s];
    ++n;
  }
  cell.n_seeds = n;
  if (n == 0) {
    cell.mse = cell.squared_bias = cell.variance = cell.mean_estimate = cell.mean_true_value = kNaN;
    cell.std_across_seeds = kNaN;
    return;
  }
  const double dn = static_cast<double>(n);
  const double bias = sum_e / dn;
  double var = 0.0, var_est = 0.0;
  cell.mean_estimate = sum_est / dn;
  cell.mean_true_value = sum_true / dn;
  for (std::size_t s = 0; s < cell.estimates.size(); ++s) {
    const double est = cell.estimates[s];
    if (!std::isfinite(est)) continue;
    const double d = (est - cell.true_values[s]) - bias;
    var += d * d;
    sum_e2 += (est - cell.true_values[s]) * (est - cell.true_values[s]);
    var_est += (est - cell.mean_estimate) * (est - cell.mean_estimate);
  }
  cell.squared_bias = bias * bias;
  cell.variance = var / dn;
  cell.mse = sum_e2 / dn;
  cell.std_across_seeds = n > 1 ? std::sqrt(var_est / (dn - 1.0)) : 0.0;
}

EstimatorSpec resolve_estimator(const EstimatorSpec& spec, const SynthConfig& cfg, const EstimatorRegistry& registry) {
  EstimatorSpec out = spec;
  if (registry.accepts_option(spec.name, "n_clusters") && !spec.options.contains("n_clusters"))
    out.options["n_clusters"] = cfg.emp_c_num;
  return out;
}

namespace detail {

LoggedSample draw_logged_sample(const SynthConfig& cfg, std::uint64_t world_seed) {
  LoggedSample out;
  out.world = generate_world(cfg, world_seed);
  RandomStream rng(world_seed, streams::kLogged);
  std::vector<std::size_t> index;
  out.data = sample_logged_data(out.world, static_cast<std::size_t>(cfg.n_samples), SamplePolicy::Logging, rng, &index);
  out.pi_rows = Matrix(out.data.size(), out.data.num_actions);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    auto src = out.world.pi_eval.row(index[i]);
    std::copy(src.begin(), src.end(), out.pi_rows.row(i).begin());
  }
  out.true_value = true_policy_value(out.world);
  return out;
}

}  // namespace detail

ReplicationResult run_replication(const SynthConfig& cfg, const std::vector<EstimatorSpec>& estimators,
                                  std::uint64_t world_seed, const EstimatorRegistry& registry) {
  detail::LoggedSample sample = detail::draw_logged_sample(cfg, world_seed);
  EvaluationSession session(sample.data, std::move(sample.pi_rows), mix64(world_seed ^ streams::kEstimators));

  ReplicationResult out;
  out.true_value = sample.true_value;
  for (const auto& spec : estimators) {
    try {
      out.estimates.push_back(registry.run(session, resolve_estimator(spec, cfg, registry)).value);
      out.errors.emplace_back();
    } catch (const std::exception& e) {
      out.estimates.push_back(kNaN);
      out.errors.emplace_back(e.what());
    }
  }
  return out;
}

EstimateReport run_sweep(const SweepSpec& spec, const EstimatorRegistry& registry) {
  spec.validate(registry);
  const std::vector<double> values = spec.parameter.empty() ? std::vector<double>{0.0} : spec.values;
  const std::size_t V = values.size(), E = spec.estimators.size(), R = spec.replications;

  EstimateReport report;
  report.parameter = spec.parameter;
  report.values = values;
  for (const auto& e : spec.estimators) report.estimators.push_back(e.name);
  report.cells.resize(V * E);
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t e = 0; e < E; ++e) {
      auto& c = report.cells[v * E + e];
      c.value = values[v];
      c.estimator = spec.estimators[e].name;
      c.estimates.assign(R, kNaN);
      c.true_values.assign(R, kNaN);
      c.errors.assign(R, {});
    }

  const bool synth_param = !spec.parameter.empty() && is_synth_field(spec.parameter);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < V * R; t = next++) {
      const std::size_t v = t / R, r = t % R;
      SynthConfig cfg = spec.base;
      std::vector<EstimatorSpec> specs = spec.estimators;
      if (synth_param) {
        cfg.set(spec.parameter, values[v]);
      } else if (!spec.parameter.empty()) {
        specs = apply_value(specs, spec.parameter, values[v], registry);
      }
      // Seeds are shared across grid values so every value sees the same worlds.
      ReplicationResult res;
      try {
        res = run_replication(cfg, specs, derive_seed(spec.seed, r), registry);
      } catch (const std::exception& ex) {
        res.true_value = kNaN;
        res.estimates.assign(E, kNaN);
        res.errors.assign(E, ex.what());
      }
      for (std::size_t e = 0; e < E; ++e) {
        auto& c = report.cells[v * E + e];
        c.estimates[r] = res.estimates[e];
        c.true_values[r] = res.true_value;
        c.errors[r] = res.errors[e];
      }
    }
  };
  const std::size_t nt = thread_count(spec.threads, V * R);
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (auto& c : report.cells) summarize_cell(c);
  const auto ips = std::find(report.estimators.begin(), report.estimators.end(), "ips");
  if (ips != report.estimators.end()) {
    const std::size_t ie = static_cast<std::size_t>(ips - report.estimators.begin());
    for (std::size_t v = 0; v < V; ++v) {
      const double base = report.cells[v * E + ie].mse;
      for (std::size_t e = 0; e < E; ++e) {
        auto& c = report.cells[v * E + e];
        c.relative_mse_vs_ips = e == ie ? 1.0 : c.mse / base;
      }
    }
  }
  return report;
}

void write_report_csv(std::ostream& out, const EstimateReport& report) {
  out << "param,value,estimator,mse,bias2,variance,rel_mse_ips,n_seeds\n";
  for (const auto& c : report.cells) {
    out << report.parameter << ',' << format_real(c.value) << ',' << c.estimator << ',' << format_real(c.mse) << ','
        << format_real(c.squared_bias) << ',' << format_real(c.variance) << ',' << format_real(c.relative_mse_vs_ips)
        << ',' << c.n_seeds << '\n';
  }
}

}  // namespace ope
