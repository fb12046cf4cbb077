#include "ope/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ope/errors.hpp"

namespace ope {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

Matrix matrix_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& row : j) {
    if (!row.is_array()) throw ParseError(std::string(what) + " rows must be arrays");
    std::vector<double> r;
    for (const auto& v : row) {
      if (!v.is_number()) throw ParseError(std::string(what) + " entries must be numbers");
      r.push_back(v.get<double>());
    }
    if (!rows.empty() && r.size() != rows.front().size()) throw ParseError(std::string(what) + " is not rectangular");
    rows.push_back(std::move(r));
  }
  return Matrix::from_rows(rows);
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synthetic config must be an object");
  SynthConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number()) throw ConfigError("synthetic config field '" + it.key() + "' must be a number");
    cfg.set(it.key(), it.value().get<double>());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json synth_config_to_json(const SynthConfig& cfg) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& name : SynthConfig::field_names()) {
    const double v = cfg.get(name);
    if (name == "c_exp" || name == "c_rad" || name == "sigma" || name == "beta") {
      out[name] = v;
    } else {
      out[name] = static_cast<long long>(v);
    }
  }
  return out;
}

nlohmann::json world_to_json(const SyntheticWorld& world) {
  return {{"config", synth_config_to_json(world.config)},
          {"centers", matrix_to_json(world.centers)},
          {"contexts", matrix_to_json(world.contexts)},
          {"cluster_of", world.cluster_of},
          {"p_x", world.p_x},
          {"pi_eval", matrix_to_json(world.pi_eval.probs())},
          {"pi_log", matrix_to_json(world.pi_log.probs())},
          {"reward_mean", matrix_to_json(world.reward_mean)},
          {"deficient_actions", world.deficient_actions},
          {"true_value", true_policy_value(world)}};
}

nlohmann::json cluster_model_to_json(const ClusterModel& model) {
  return {{"K", model.centers().rows()}, {"centers", matrix_to_json(model.centers())}};
}

ClusterModel cluster_model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("centers")) throw ParseError("cluster model needs 'centers'");
  Matrix centers = matrix_from_json(j.at("centers"), "centers");
  if (j.contains("K") && (!j.at("K").is_number_integer() || j.at("K").get<std::size_t>() != centers.rows()))
    throw ParseError("cluster model 'K' does not match the number of centers");
  return ClusterModel(std::move(centers));
}

nlohmann::json instance_to_json(const DiscreteInstance& inst) {
  nlohmann::json out = {{"p_x", inst.p_x()},
                        {"cluster_of", inst.cluster_of()},
                        {"pi", matrix_to_json(inst.pi())},
                        {"pi0", matrix_to_json(inst.pi0())},
                        {"q", matrix_to_json(inst.q())}};
  if (inst.has_embedding()) out["embedding"] = inst.embedding();
  return out;
}

DiscreteInstance instance_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("instance must be an object");
  static const char* required[] = {"p_x", "cluster_of", "pi", "pi0", "q"};
  for (const char* k : required)
    if (!j.contains(k)) throw ParseError(std::string("instance is missing '") + k + "'");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k != "p_x" && k != "cluster_of" && k != "pi" && k != "pi0" && k != "q" && k != "embedding")
      throw ConfigError("unknown instance key '" + k + "'");
  }
  try {
    std::optional<std::vector<int>> emb;
    if (j.contains("embedding")) emb = j.at("embedding").get<std::vector<int>>();
    return DiscreteInstance(j.at("p_x").get<std::vector<double>>(), j.at("cluster_of").get<std::vector<int>>(),
                            matrix_from_json(j.at("pi"), "pi"), matrix_from_json(j.at("pi0"), "pi0"),
                            matrix_from_json(j.at("q"), "q"), std::move(emb));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance field has the wrong type: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw ParseError(path.string() + ": " + e.what(), line);
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace ope
