#include <algorithm>
#include <cmath>
#include <limits>

#include "common.hpp"
#include "ope/estimators.hpp"
#include "ope/kernels.hpp"

namespace ope {

namespace {

// sum_a pi(a|x_i) q_hat(a, x_i) for every sample.
std::vector<double> direct_terms(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows) {
  detail::check_rows(d, pi_rows, "policy");
  detail::check_rows(d, q_rows, "reward-model");
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = kernels::dot(pi_rows.row(i), q_rows.row(i));
  return out;
}

double residual(const BanditDataset& d, const Matrix& q_rows, std::size_t i) {
  return d.rewards[i] - q_rows(i, static_cast<std::size_t>(d.actions[i]));
}

// DM term plus a weighted residual correction, with w_i replaced by shrink(w_i).
template <typename Shrink>
Estimate corrected(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows, const char* name,
                   Shrink shrink) {
  detail::check_nonempty(d);
  auto w = importance_weights(d, pi_rows);
  auto terms = direct_terms(d, pi_rows, q_rows);
  for (std::size_t i = 0; i < d.size(); ++i) terms[i] += shrink(w[i]) * residual(d, q_rows, i);
  return {detail::mean(terms), name, std::move(terms)};
}

}  // namespace

Estimate estimate_dm(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows) {
  detail::check_nonempty(d);
  auto terms = direct_terms(d, pi_rows, q_rows);
  return {detail::mean(terms), "dm", std::move(terms)};
}

Estimate estimate_dm(const BanditDataset& d, const PolicyEvaluator& pi, const RewardModel& q) {
  return estimate_dm(d, policy_rows(pi, d.contexts), reward_rows(q, d.contexts));
}

Estimate estimate_dr(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows) {
  return corrected(d, pi_rows, q_rows, "dr", [](double w) { return w; });
}

Estimate estimate_dr(const BanditDataset& d, const PolicyEvaluator& pi, const RewardModel& q) {
  return estimate_dr(d, policy_rows(pi, d.contexts), reward_rows(q, d.contexts));
}

Estimate estimate_sndr(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows) {
  detail::check_nonempty(d);
  auto w = importance_weights(d, pi_rows);
  auto dm = direct_terms(d, pi_rows, q_rows);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    num += w[i] * residual(d, q_rows, i);
    den += w[i];
  }
  if (!(den > 0.0)) throw ValidationError("self-normalized estimate undefined: all weights are zero");
  return {detail::mean(dm) + num / den, "sndr", std::nullopt};
}

Estimate estimate_sndr(const BanditDataset& d, const PolicyEvaluator& pi, const RewardModel& q) {
  return estimate_sndr(d, policy_rows(pi, d.contexts), reward_rows(q, d.contexts));
}

double dros_weight(double w, double lambda) {
  if (lambda == 0.0) return 0.0;
  if (std::isinf(lambda)) return w;
  return lambda * w / (w * w + lambda);
}

Estimate estimate_dros(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("DRoS lambda must be >= 0");
  return corrected(d, pi_rows, q_rows, "dros", [lambda](double w) { return dros_weight(w, lambda); });
}

Estimate estimate_dros(const BanditDataset& d, const PolicyEvaluator& pi, const RewardModel& q, double lambda) {
  return estimate_dros(d, policy_rows(pi, d.contexts), reward_rows(q, d.contexts), lambda);
}

double default_switch_tau(std::span<const double> weights) {
  if (weights.empty()) return std::numeric_limits<double>::infinity();
  std::vector<double> v(weights.begin(), weights.end());
  std::sort(v.begin(), v.end());
  // Linear interpolation between order statistics.
  const double pos = 0.95 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

Estimate estimate_switch_dr(const BanditDataset& d, const Matrix& pi_rows, const Matrix& q_rows,
                            std::optional<double> tau) {
  detail::check_nonempty(d);
  const double t = tau ? *tau : default_switch_tau(importance_weights(d, pi_rows));
  if (!(t > 0.0)) throw ConfigError("SwitchDR tau must be > 0");
  return corrected(d, pi_rows, q_rows, "switch-dr", [t](double w) { return w <= t ? w : 0.0; });
}

Estimate estimate_switch_dr(const BanditDataset& d, const PolicyEvaluator& pi, const RewardModel& q,
                            std::optional<double> tau) {
  return estimate_switch_dr(d, policy_rows(pi, d.contexts), reward_rows(q, d.contexts), tau);
}

}  // namespace ope
