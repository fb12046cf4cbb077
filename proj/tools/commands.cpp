#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "ope/ope.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ope::cli {

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<std::size_t> random;
  bool calibrate = false;
};

void require_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(std::string(what) + " config has unknown key '" + it.key() + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

std::uint64_t seed_of(const json& cfg, const Options& o) {
  if (o.seed) return *o.seed;
  return get_or<std::uint64_t>(cfg, "seed", 0);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// Relative paths in a config file are taken relative to the file.
fs::path config_dir(const Options& o) { return o.config.empty() ? fs::current_path() : fs::path(o.config).parent_path(); }

std::vector<EstimatorSpec> parse_estimators(const json& j) {
  std::vector<EstimatorSpec> out;
  auto add_names = [&](const std::string& s) {
    std::stringstream ss(s);
    std::string name;
    while (std::getline(ss, name, ','))
      if (!name.empty()) out.push_back({name, json::object()});
  };
  if (j.is_string()) {
    add_names(j.get<std::string>());
  } else if (j.is_array()) {
    for (const auto& e : j) {
      if (e.is_string()) {
        add_names(e.get<std::string>());
      } else if (e.is_object()) {
        require_keys(e, {"name", "options"}, "estimator");
        if (!e.contains("name") || !e.at("name").is_string()) throw ConfigError("estimator entries need a 'name'");
        out.push_back({e.at("name").get<std::string>(), e.value("options", json::object())});
      } else {
        throw ConfigError("estimators must be names or {name, options} objects");
      }
    }
  } else {
    throw ConfigError("'estimators' must be a list");
  }
  if (out.empty()) throw ConfigError("no estimators requested");
  for (const auto& e : out) EstimatorRegistry::defaults().check(e);
  return out;
}

CsvSchema schema_from(const json& cfg) {
  CsvSchema s;
  if (cfg.contains("reward_max")) s.reward_max = get_or<double>(cfg, "reward_max", 1.0);
  if (cfg.contains("num_actions")) s.num_actions = get_or<std::size_t>(cfg, "num_actions", 0);
  return s;
}

Matrix read_rows_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (r.ec != std::errc() || r.ptr != cell.data() + cell.size()) throw ParseError("bad number '" + cell + "'", lineno);
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("ragged row", lineno);
    rows.push_back(std::move(row));
  }
  return Matrix::from_rows(rows);
}

PolicyTable world_policy(const fs::path& path) {
  const json w = read_json_file(path);
  if (!w.contains("pi_eval") || !w.contains("contexts")) throw ConfigError("world file needs 'pi_eval' and 'contexts'");
  return PolicyTable(matrix_from_json(w.at("pi_eval"), "pi_eval"), matrix_from_json(w.at("contexts"), "contexts"));
}

// pi(. | x_i) for the dataset, from a world file or an explicit rows file.
Matrix evaluation_rows(const json& cfg, const BanditDataset& d, const fs::path& base) {
  if (cfg.contains("world")) {
    const PolicyTable pi = world_policy(resolve(base, cfg.at("world").get<std::string>()));
    try {
      return policy_rows(pi, d.contexts);
    } catch (const std::out_of_range&) {
      throw ValidationError("a dataset context does not occur in the world file");
    }
  }
  if (cfg.contains("pi_rows")) {
    Matrix m = read_rows_csv(resolve(base, cfg.at("pi_rows").get<std::string>()));
    if (m.rows() != d.size() || m.cols() != d.num_actions)
      throw ValidationError("pi_rows must have one row per sample and one column per action");
    check_probability_rows(m, 1e-9, "pi_rows");
    return m;
  }
  throw ConfigError("give the evaluation policy as 'world' or 'pi_rows'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

// ---- subcommands ----

int cmd_synth(const json& cfg, const Options& o, std::ostream& out) {
  require_keys(cfg, {"config", "seed", "policy"}, "synth");
  const SynthConfig sc = synth_config_from_json(cfg.value("config", json::object()));
  const std::string which = get_or<std::string>(cfg, "policy", "logging");
  if (which != "logging" && which != "evaluation") throw ConfigError("policy must be 'logging' or 'evaluation'");
  const std::uint64_t seed = seed_of(cfg, o);
  const SyntheticWorld world = generate_world(sc, seed);
  RandomStream rng(seed, which == "logging" ? streams::kLogged : streams::kEvaluation);
  const BanditDataset d = sample_logged_data(world, static_cast<std::size_t>(sc.n_samples),
                                             which == "logging" ? SamplePolicy::Logging : SamplePolicy::Evaluation, rng);
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  write_bandit_csv(dir / "dataset.csv", d);
  write_json_file(dir / "world.json", world_to_json(world));
  out << "wrote " << d.size() << " rows to " << (dir / "dataset.csv").string() << "\n";
  return kOk;
}

int cmd_estimate(const json& cfg, const Options& o, std::ostream& out) {
  require_keys(cfg, {"dataset", "world", "pi_rows", "estimators", "seed", "reward_max", "num_actions"}, "estimate");
  if (!cfg.contains("dataset")) throw ConfigError("estimate needs 'dataset'");
  if (!cfg.contains("estimators")) throw ConfigError("estimate needs 'estimators'");
  const auto specs = parse_estimators(cfg.at("estimators"));
  const fs::path base = config_dir(o);
  const BanditDataset d = load_bandit_csv(resolve(base, cfg.at("dataset").get<std::string>()), schema_from(cfg));
  EvaluationSession session(d, evaluation_rows(cfg, d, base), seed_of(cfg, o));
  json result = json::object();
  for (const auto& s : specs) result[s.name] = EstimatorRegistry::defaults().run(session, s).value;
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  write_json_file(dir / "estimates.json", result);
  out << result.dump(2) << "\n";
  return kOk;
}

int cmd_sweep(const json& cfg, const Options& o, std::ostream& out, std::ostream& err) {
  require_keys(cfg, {"base", "parameter", "values", "estimators", "replications", "seed", "threads"}, "sweep");
  SweepSpec spec;
  spec.base = synth_config_from_json(cfg.value("base", json::object()));
  spec.parameter = get_or<std::string>(cfg, "parameter", "");
  spec.values = get_or<std::vector<double>>(cfg, "values", {});
  if (!cfg.contains("estimators")) throw ConfigError("sweep needs 'estimators'");
  spec.estimators = parse_estimators(cfg.at("estimators"));
  spec.replications = get_or<std::size_t>(cfg, "replications", 100);
  spec.threads = get_or<std::size_t>(cfg, "threads", 0);
  spec.seed = seed_of(cfg, o);
  const EstimateReport report = run_sweep(spec);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  std::ostringstream csv;
  write_report_csv(csv, report);
  write_text(dir / "report.csv", csv.str());
  std::ostringstream raw;
  raw << "value,estimator,seed,estimate,true_value,error\n";
  for (const auto& c : report.cells)
    for (std::size_t s = 0; s < c.estimates.size(); ++s) {
      std::string e = c.errors[s];
      std::replace(e.begin(), e.end(), ',', ';');
      std::replace(e.begin(), e.end(), '\n', ' ');
      raw << format_real(c.value) << ',' << c.estimator << ',' << s << ',' << format_real(c.estimates[s]) << ','
          << format_real(c.true_values[s]) << ',' << e << '\n';
    }
  write_text(dir / "raw.csv", raw.str());
  out << csv.str();

  const bool all_failed =
      std::all_of(report.cells.begin(), report.cells.end(), [](const ReportCell& c) { return c.n_seeds == 0; });
  if (all_failed) {
    err << "error: every sweep cell failed; first error: " << report.cells.front().errors.front() << "\n";
    return kCapabilityError;
  }
  return kOk;
}

int cmd_ecdf(const json& cfg, const Options& o, std::ostream& out) {
  require_keys(cfg, {"synthetic", "log", "eval", "world", "pi_rows", "estimators", "n", "T", "seed", "reward_max",
                     "num_actions"},
               "ecdf");
  if (!cfg.contains("estimators")) throw ConfigError("ecdf needs 'estimators'");
  const auto specs = parse_estimators(cfg.at("estimators"));
  const std::uint64_t seed = seed_of(cfg, o);
  const std::size_t T = get_or<std::size_t>(cfg, "T", 100);
  RandomStream rng(seed, streams::kEstimators);
  EcdfResult result;
  if (cfg.contains("synthetic")) {
    const SynthConfig sc = synth_config_from_json(cfg.at("synthetic"));
    const SyntheticWorld world = generate_world(sc, seed);
    RandomStream log_rng(seed, streams::kLogged), eval_rng(seed, streams::kEvaluation);
    std::vector<std::size_t> index;
    const BanditDataset log =
        sample_logged_data(world, static_cast<std::size_t>(sc.b_len), SamplePolicy::Logging, log_rng, &index);
    const BanditDataset eval =
        sample_logged_data(world, static_cast<std::size_t>(sc.e_len), SamplePolicy::Evaluation, eval_rng);
    Matrix rows(log.size(), log.num_actions);
    for (std::size_t i = 0; i < log.size(); ++i) {
      auto src = world.pi_eval.row(index[i]);
      std::copy(src.begin(), src.end(), rows.row(i).begin());
    }
    const std::size_t n = get_or<std::size_t>(cfg, "n", static_cast<std::size_t>(sc.n_samples));
    result = ecdf_protocol(log, rows, eval, specs, n, T, rng);
  } else {
    if (!cfg.contains("log") || !cfg.contains("eval")) throw ConfigError("ecdf needs 'synthetic' or both 'log' and 'eval'");
    const fs::path base = config_dir(o);
    const CsvSchema schema = schema_from(cfg);
    const BanditDataset log = load_bandit_csv(resolve(base, cfg.at("log").get<std::string>()), schema);
    const BanditDataset eval = load_bandit_csv(resolve(base, cfg.at("eval").get<std::string>()), schema);
    const std::size_t n = get_or<std::size_t>(cfg, "n", log.size());
    result = ecdf_protocol(log, evaluation_rows(cfg, log, base), eval, specs, n, T, rng);
  }
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  std::ostringstream csv;
  write_ecdf_csv(csv, result);
  write_text(dir / "ecdf.csv", csv.str());
  out << "policy value " << format_real(result.policy_value) << "; wrote " << result.curves.size() << " curves to "
      << (dir / "ecdf.csv").string() << "\n";
  return kOk;
}

const char* status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "PASS";
    case CheckStatus::Fail: return "FAIL";
    case CheckStatus::Skipped: return "SKIP";
  }
  return "?";
}

int cmd_verify(const json& cfg, const Options& o, std::ostream& out) {
  require_keys(cfg, {"instance", "n", "seed"}, "verify");
  const std::size_t n = get_or<std::size_t>(cfg, "n", 10);
  std::vector<std::pair<std::string, DiscreteInstance>> instances;
  if (o.random) {
    RandomStream rng(seed_of(cfg, o), 0);
    const InstanceKind kinds[] = {InstanceKind::FullSupport, InstanceKind::Homogeneous, InstanceKind::Deficient,
                                  InstanceKind::ClusterConstant, InstanceKind::Joint};
    for (std::size_t i = 0; i < *o.random; ++i) {
      const InstanceKind k = kinds[i % 5];
      instances.emplace_back(std::string(instance_kind_name(k)) + "#" + std::to_string(i),
                             random_instance(k, random_shape(rng), rng));
    }
  } else {
    if (!cfg.contains("instance")) throw ConfigError("verify needs 'instance' or --random <k>");
    const fs::path p = resolve(config_dir(o), cfg.at("instance").get<std::string>());
    instances.emplace_back(p.filename().string(), instance_from_json(read_json_file(p)));
  }

  json report = json::array();
  std::size_t failed = 0;
  for (const auto& [name, inst] : instances) {
    for (const auto& r : run_identity_checks(inst, n)) {
      out << status_name(r.status) << ' ' << name << ' ' << r.name;
      if (r.status == CheckStatus::Skipped) {
        out << " (" << r.note << ")";
      } else {
        out << " residual=" << format_real(r.residual) << " tol=" << format_real(r.tolerance);
      }
      out << "\n";
      if (r.status == CheckStatus::Fail) ++failed;
      report.push_back({{"instance", name},
                        {"check", r.name},
                        {"status", status_name(r.status)},
                        {"residual", r.residual},
                        {"tolerance", r.tolerance},
                        {"note", r.note}});
    }
  }
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  write_json_file(dir / "verify.json", report);
  out << (failed ? std::to_string(failed) + " check(s) failed" : std::string("all checks passed")) << "\n";
  return failed ? kCheckFailed : kOk;
}

int cmd_alpha_select(const json& cfg, const Options& o, std::ostream& out) {
  const fs::path dir(o.out_dir);
  if (o.calibrate) {
    require_keys(cfg, {"base", "sample_sizes", "cluster_counts", "alphas", "bucket_edges", "replications", "seed",
                       "anchor_points", "anchor_alpha"},
                 "alpha calibration");
    CalibrationSpec spec;
    spec.base = synth_config_from_json(cfg.value("base", json::object()));
    spec.sample_sizes = get_or<std::vector<long long>>(cfg, "sample_sizes", {});
    spec.cluster_counts = get_or<std::vector<int>>(cfg, "cluster_counts", {});
    spec.alphas = get_or<std::vector<double>>(cfg, "alphas", {});
    spec.bucket_edges = get_or<std::vector<double>>(cfg, "bucket_edges", {});
    spec.replications = get_or<std::size_t>(cfg, "replications", 20);
    spec.anchor_points = get_or<double>(cfg, "anchor_points", 52.0);
    spec.anchor_alpha = get_or<double>(cfg, "anchor_alpha", 20.0);
    spec.seed = seed_of(cfg, o);
    const CalibrationResult res = calibrate_alpha_reference(spec);
    fs::create_directories(dir);
    write_json_file(dir / "alpha_reference.json", res.reference.to_json());
    std::ostringstream csv;
    csv << "n_samples,clusters,points_per_cell,alpha,mse,ips_mse\n";
    for (const auto& r : res.rows)
      csv << r.n_samples << ',' << r.clusters << ',' << format_real(r.points_per_cell) << ',' << format_real(r.alpha)
          << ',' << format_real(r.mse) << ',' << format_real(r.ips_mse) << '\n';
    write_text(dir / "calibration.csv", csv.str());
    out << res.reference.to_json().dump() << "\n";
    return kOk;
  }
  require_keys(cfg, {"dataset", "world", "pi_rows", "n_clusters", "reference", "seed", "reward_max", "num_actions"},
               "alpha-select");
  if (!cfg.contains("dataset") || !cfg.contains("n_clusters")) throw ConfigError("alpha-select needs 'dataset' and 'n_clusters'");
  const fs::path base = config_dir(o);
  const BanditDataset d = load_bandit_csv(resolve(base, cfg.at("dataset").get<std::string>()), schema_from(cfg));
  const AlphaReference ref = cfg.contains("reference")
                                 ? AlphaReference::from_json(read_json_file(resolve(base, cfg.at("reference").get<std::string>())))
                                 : AlphaReference::shipped();
  const std::uint64_t seed = seed_of(cfg, o);
  EvaluationSession session(d, evaluation_rows(cfg, d, base), seed);
  const auto partition = session.partition(get_or<std::size_t>(cfg, "n_clusters", 0), KMeansOptions{});
  RandomStream rng(seed, streams::kEvaluation);
  const AlphaSelection sel = select_alpha(d, session.pi_rows(), *partition, ref, rng);
  const json result = {{"alpha", sel.alpha}, {"points_per_cell", sel.points_per_cell}, {"occupied_cells", sel.occupied_cells}};
  fs::create_directories(dir);
  write_json_file(dir / "alpha.json", result);
  out << result.dump(2) << "\n";
  return kOk;
}

int cmd_bench(const json& cfg, const Options& o, std::ostream& out) {
  require_keys(cfg, {"base", "sizes", "estimators", "repeats", "seed", "time_clustering", "cold_cache"}, "bench");
  BenchSpec spec;
  spec.base = synth_config_from_json(cfg.value("base", json::object()));
  spec.sizes = get_or<std::vector<long long>>(cfg, "sizes", {});
  if (!cfg.contains("estimators")) throw ConfigError("bench needs 'estimators'");
  spec.estimators = parse_estimators(cfg.at("estimators"));
  spec.repeats = get_or<std::size_t>(cfg, "repeats", 3);
  spec.time_clustering = get_or<bool>(cfg, "time_clustering", true);
  spec.cold_cache = get_or<bool>(cfg, "cold_cache", true);
  spec.seed = seed_of(cfg, o);
  const auto rows = run_benchmark(spec);
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  std::ostringstream csv;
  write_bench_csv(csv, rows);
  write_text(dir / "bench.csv", csv.str());
  out << csv.str();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Off-policy evaluation toolkit"};
  app.require_subcommand(1);
  Options o;
  const char* names[] = {"synth", "estimate", "sweep", "ecdf", "verify", "alpha-select", "bench"};
  const char* help[] = {"generate a synthetic world and logged dataset",
                        "run estimators on a logged dataset",
                        "replicated MSE sweep over one parameter",
                        "bootstrap ECDF of squared-error ratios against IPS",
                        "check the oracle identities on discrete instances",
                        "pick the Beta prior strength (or calibrate the reference table)",
                        "time estimators across sample sizes"};
  for (std::size_t i = 0; i < 7; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--seed", o.seed, "overrides the config seed");
    sub->add_option("--out", o.out_dir, "output directory");
    if (std::string(names[i]) == "verify") sub->add_option("--random", o.random, "check k random instances");
    if (std::string(names[i]) == "alpha-select") sub->add_flag("--calibrate", o.calibrate, "rebuild the reference table");
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    json cfg = json::object();
    if (!o.config.empty()) {
      cfg = read_json_file(o.config);
    } else if (!(cmd == "verify" && o.random)) {
      throw ConfigError("--config is required");
    }
    if (cmd == "synth") return cmd_synth(cfg, o, out);
    if (cmd == "estimate") return cmd_estimate(cfg, o, out);
    if (cmd == "sweep") return cmd_sweep(cfg, o, out, err);
    if (cmd == "ecdf") return cmd_ecdf(cfg, o, out);
    if (cmd == "verify") return cmd_verify(cfg, o, out);
    if (cmd == "alpha-select") return cmd_alpha_select(cfg, o, out);
    return cmd_bench(cfg, o, out);
  } catch (const CapabilityError& e) {
    err << "error: " << e.what() << "\n";
    return kCapabilityError;
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << "\n";
    return kResourceError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
}

}  // namespace ope::cli
