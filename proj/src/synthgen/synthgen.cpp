#include "ope/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "ope/errors.hpp"

namespace ope {

namespace {

struct Field {
  std::function<double(const SynthConfig&)> get;
  std::function<void(SynthConfig&, double)> set;
  bool integral;
};

template <typename T>
Field field(T SynthConfig::*member) {
  return Field{[member](const SynthConfig& c) { return static_cast<double>(c.*member); },
               [member](SynthConfig& c, double v) { c.*member = static_cast<T>(v); },
               std::is_integral_v<T>};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f{
      {"c_exp", field(&SynthConfig::c_exp)},       {"c_rad", field(&SynthConfig::c_rad)},
      {"d_x", field(&SynthConfig::d_x)},           {"x_num", field(&SynthConfig::x_num)},
      {"a_num", field(&SynthConfig::a_num)},       {"c_num", field(&SynthConfig::c_num)},
      {"n_samples", field(&SynthConfig::n_samples)}, {"emp_c_num", field(&SynthConfig::emp_c_num)},
      {"e_len", field(&SynthConfig::e_len)},       {"b_len", field(&SynthConfig::b_len)},
      {"sigma", field(&SynthConfig::sigma)},       {"beta", field(&SynthConfig::beta)},
      {"n_deficient", field(&SynthConfig::n_deficient)},
  };
  return f;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void SynthConfig::validate() const {
  require(c_exp > 0.0 && std::isfinite(c_exp), "c_exp must be > 0");
  require(c_rad > 0.0 && std::isfinite(c_rad), "c_rad must be > 0");
  require(d_x >= 1, "d_x must be >= 1");
  require(x_num >= 1, "x_num must be >= 1");
  require(a_num >= 1, "a_num must be >= 1");
  require(c_num >= 1, "c_num must be >= 1");
  require(n_samples >= 0, "n_samples must be >= 0");
  require(emp_c_num >= 1, "emp_c_num must be >= 1");
  require(e_len >= 1, "e_len must be >= 1");
  require(b_len >= 1, "b_len must be >= 1");
  require(sigma >= 0.0 && sigma <= 1.0, "sigma must lie in [0, 1]");
  require(beta >= -1.0 && beta <= 1.0, "beta must lie in [-1, 1]");
  require(n_deficient >= 0, "n_deficient must be >= 0");
  require(n_deficient < a_num, "n_deficient must be < a_num");
}

void SynthConfig::set(const std::string& name, double value) {
  auto it = fields().find(name);
  if (it == fields().end()) throw ConfigError("unknown synthetic-world parameter '" + name + "'");
  if (it->second.integral && value != std::floor(value))
    throw ConfigError("parameter '" + name + "' needs an integer value");
  it->second.set(*this, value);
}

double SynthConfig::get(const std::string& name) const {
  auto it = fields().find(name);
  if (it == fields().end()) throw ConfigError("unknown synthetic-world parameter '" + name + "'");
  return it->second.get(*this);
}

const std::vector<std::string>& SynthConfig::field_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, v] : fields()) out.push_back(k);
    return out;
  }();
  return names;
}

Matrix sample_in_ball(std::size_t m, double radius, int d, RandomStream& rng) {
  const auto dim = static_cast<std::size_t>(d);
  Matrix out(m, dim);
  std::vector<double> z(dim);
  for (std::size_t i = 0; i < m; ++i) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& v : z) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
    } while (norm == 0.0);
    const double r = radius * std::pow(rng.uniform(), 1.0 / d);
    for (std::size_t t = 0; t < dim; ++t) out(i, t) = r * z[t] / norm;
  }
  return out;
}

Matrix generate_cluster_centers(std::size_t m, double c_exp, int d_x, RandomStream& rng) {
  return sample_in_ball(m, c_exp, d_x, rng);
}

ContextSpace generate_context_space(const SynthConfig& cfg, RandomStream& rng) {
  cfg.validate();
  ContextSpace cs;
  const auto m = static_cast<std::size_t>(cfg.c_num);
  const auto dim = static_cast<std::size_t>(cfg.d_x);
  cs.centers = generate_cluster_centers(m, cfg.c_exp, cfg.d_x, rng);

  std::vector<double> s(m);
  for (auto& v : s) v = rng.uniform();
  const auto p_cluster = softmax(s);
  cs.cluster_sizes.assign(m, 0);
  for (int i = 0; i < cfg.x_num; ++i) ++cs.cluster_sizes[rng.categorical(p_cluster)];

  cs.contexts = Matrix(static_cast<std::size_t>(cfg.x_num), dim);
  cs.cluster_of.reserve(static_cast<std::size_t>(cfg.x_num));
  std::size_t k = 0;
  for (std::size_t c = 0; c < m; ++c) {
    const auto h = static_cast<std::size_t>(cs.cluster_sizes[c]);
    Matrix offsets = sample_in_ball(h, cfg.c_rad, cfg.d_x, rng);
    for (std::size_t i = 0; i < h; ++i, ++k) {
      for (std::size_t t = 0; t < dim; ++t) cs.contexts(k, t) = cs.centers(c, t) + offsets(i, t);
      cs.cluster_of.push_back(static_cast<int>(c));
    }
  }

  cs.p_x = softmax(rng.normals(static_cast<std::size_t>(cfg.x_num)));
  return cs;
}

PolicyPair generate_policies(const SynthConfig& cfg, const std::vector<int>& cluster_of, RandomStream& rng) {
  const auto a_num = static_cast<std::size_t>(cfg.a_num);
  const std::size_t x_num = cluster_of.size();
  Matrix y(static_cast<std::size_t>(cfg.c_num), a_num);
  for (double* p = y.data(); p != y.data() + y.rows() * y.cols(); ++p) *p = rng.normal();

  Matrix pi(x_num, a_num);
  Matrix pi0(x_num, a_num);
  for (std::size_t k = 0; k < x_num; ++k) {
    auto yc = y.row(static_cast<std::size_t>(cluster_of[k]));
    auto logits = pi.row(k);
    auto scaled = pi0.row(k);
    for (std::size_t j = 0; j < a_num; ++j) {
      logits[j] = yc[j] + cfg.sigma * rng.normal();
      scaled[j] = cfg.beta * logits[j];
    }
    softmax_inplace(logits);
    softmax_inplace(scaled);
  }
  return {PolicyTable(std::move(pi)), PolicyTable(std::move(pi0))};
}

PolicyTable apply_deficiency(const PolicyTable& pi_log, int n_def, RandomStream& rng, std::vector<int>* chosen) {
  const std::size_t a_num = pi_log.num_actions();
  if (n_def < 0 || static_cast<std::size_t>(n_def) >= a_num)
    throw ConfigError("n_deficient must lie in [0, a_num)");
  if (chosen) chosen->clear();
  if (n_def == 0) return pi_log;

  std::vector<int> order(a_num);
  for (std::size_t j = 0; j < a_num; ++j) order[j] = static_cast<int>(j);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n_def); ++i) {
    const std::size_t j = i + rng.index(a_num - i);
    std::swap(order[i], order[j]);
  }
  std::vector<int> dropped(order.begin(), order.begin() + n_def);
  std::sort(dropped.begin(), dropped.end());

  Matrix probs = pi_log.probs();
  for (std::size_t k = 0; k < probs.rows(); ++k) {
    auto row = probs.row(k);
    for (int a : dropped) row[static_cast<std::size_t>(a)] = 0.0;
    double total = 0.0;
    for (double p : row) total += p;
    if (!(total > 0.0)) throw ValidationError("deficiency leaves context " + std::to_string(k) + " without actions");
    for (auto& p : row) p /= total;
  }
  if (chosen) *chosen = dropped;
  if (pi_log.has_contexts()) return PolicyTable(std::move(probs), pi_log.contexts());
  return PolicyTable(std::move(probs));
}

Matrix build_reward_means(const SynthConfig& cfg, const Matrix& contexts, const PolicyTable& pi_eval) {
  Matrix q(contexts.rows(), pi_eval.num_actions());
  const double scale = cfg.c_exp * cfg.d_x;
  for (std::size_t k = 0; k < contexts.rows(); ++k) {
    double l1 = 0.0;
    for (double v : contexts.row(k)) l1 += std::abs(v);
    for (std::size_t j = 0; j < q.cols(); ++j) q(k, j) = std::clamp(pi_eval(k, j) * l1 / scale, 0.0, 1.0);
  }
  return q;
}

SyntheticWorld generate_world(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  RandomStream ctx_rng(seed, streams::kContexts);
  RandomStream pol_rng(seed, streams::kPolicies);
  RandomStream def_rng(seed, streams::kDeficiency);

  ContextSpace cs = generate_context_space(cfg, ctx_rng);
  PolicyPair pols = generate_policies(cfg, cs.cluster_of, pol_rng);

  SyntheticWorld w;
  w.config = cfg;
  PolicyTable pi_log = apply_deficiency(pols.pi_log, cfg.n_deficient, def_rng, &w.deficient_actions);
  w.reward_mean = build_reward_means(cfg, cs.contexts, pols.pi_eval);
  w.pi_eval = PolicyTable(pols.pi_eval.probs(), cs.contexts);
  w.pi_log = PolicyTable(pi_log.probs(), cs.contexts);
  w.centers = std::move(cs.centers);
  w.contexts = std::move(cs.contexts);
  w.cluster_of = std::move(cs.cluster_of);
  w.p_x = std::move(cs.p_x);
  return w;
}

BanditDataset sample_logged_data(const SyntheticWorld& world, std::size_t n, SamplePolicy policy, RandomStream& rng,
                                 std::vector<std::size_t>* context_index) {
  const std::size_t a_num = world.pi_log.num_actions();
  Matrix px(1, world.p_x.size());
  std::copy(world.p_x.begin(), world.p_x.end(), px.data());
  const RowSampler ctx_sampler(px);
  const PolicyTable& acting = policy == SamplePolicy::Logging ? world.pi_log : world.pi_eval;
  const RowSampler act_sampler(acting.probs());

  Matrix contexts(n, world.contexts.cols());
  Matrix props(n, a_num);
  std::vector<int> actions(n);
  std::vector<double> rewards(n);
  if (context_index) context_index->assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = ctx_sampler.sample(0, rng.uniform());
    const std::size_t a = act_sampler.sample(k, rng.uniform());
    rewards[i] = rng.uniform() < world.reward_mean(k, a) ? 1.0 : 0.0;
    actions[i] = static_cast<int>(a);
    auto src = world.contexts.row(k);
    std::copy(src.begin(), src.end(), contexts.row(i).begin());
    auto prow = world.pi_log.row(k);
    std::copy(prow.begin(), prow.end(), props.row(i).begin());
    if (context_index) (*context_index)[i] = k;
  }
  return make_dataset(std::move(contexts), std::move(actions), std::move(rewards), std::move(props), 1.0);
}

double true_policy_value(const SyntheticWorld& world) {
  double v = 0.0;
  for (std::size_t k = 0; k < world.p_x.size(); ++k) {
    double inner = 0.0;
    for (std::size_t a = 0; a < world.reward_mean.cols(); ++a) inner += world.pi_eval(k, a) * world.reward_mean(k, a);
    v += world.p_x[k] * inner;
  }
  return v;
}

}  // namespace ope
