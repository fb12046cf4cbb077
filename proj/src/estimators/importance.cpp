#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "ope/estimators.hpp"

namespace ope {

std::vector<double> importance_weights(const BanditDataset& d, const Matrix& pi_rows) {
  detail::check_rows(d, pi_rows, "policy");
  std::vector<double> w(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double p0 = d.logged_propensity[i];
    if (!(p0 > 0.0)) throw ValidationError("sample " + std::to_string(i) + " has zero logging propensity");
    w[i] = pi_rows(i, static_cast<std::size_t>(d.actions[i])) / p0;
  }
  return w;
}

Estimate estimate_ips(const BanditDataset& d, const Matrix& pi_rows) {
  detail::check_nonempty(d);
  auto w = importance_weights(d, pi_rows);
  std::vector<double> terms(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) terms[i] = w[i] * d.rewards[i];
  Estimate e{detail::mean(terms), "ips", std::move(terms)};
  return e;
}

Estimate estimate_ips(const BanditDataset& d, const PolicyEvaluator& pi) {
  return estimate_ips(d, policy_rows(pi, d.contexts));
}

Estimate estimate_snips(const BanditDataset& d, const Matrix& pi_rows) {
  detail::check_nonempty(d);
  auto w = importance_weights(d, pi_rows);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    num += w[i] * d.rewards[i];
    den += w[i];
  }
  if (!(den > 0.0)) throw ValidationError("self-normalized estimate undefined: all weights are zero");
  return {num / den, "snips", std::nullopt};
}

Estimate estimate_snips(const BanditDataset& d, const PolicyEvaluator& pi) {
  return estimate_snips(d, policy_rows(pi, d.contexts));
}

Estimate estimate_mr(const BanditDataset& d, const Matrix& pi_rows, std::size_t bins) {
  detail::check_nonempty(d);
  auto w = importance_weights(d, pi_rows);
  const std::size_t n = d.size();
  std::vector<std::size_t> group(n);
  std::size_t groups;
  if (d.binary_rewards()) {
    groups = 2;
    for (std::size_t i = 0; i < n; ++i) group[i] = d.rewards[i] == 1.0 ? 1 : 0;
  } else {
    if (bins == 0) throw ConfigError("weight regression needs at least one bin");
    groups = bins;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = d.reward_max > 0.0 ? d.rewards[i] / d.reward_max : 0.0;
      group[i] = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, u) * static_cast<double>(bins)));
    }
  }
  std::vector<double> sum(groups, 0.0);
  std::vector<double> count(groups, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    sum[group[i]] += w[i];
    count[group[i]] += 1.0;
  }
  // Least-squares fit of w on the reward level: the group mean; empty groups borrow the nearest populated one.
  std::vector<double> fit(groups, 0.0);
  for (std::size_t g = 0; g < groups; ++g) {
    if (count[g] > 0.0) {
      fit[g] = sum[g] / count[g];
      continue;
    }
    for (std::size_t off = 1; off < groups; ++off) {
      if (g >= off && count[g - off] > 0.0) {
        fit[g] = sum[g - off] / count[g - off];
        break;
      }
      if (g + off < groups && count[g + off] > 0.0) {
        fit[g] = sum[g + off] / count[g + off];
        break;
      }
    }
  }
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) terms[i] = fit[group[i]] * d.rewards[i];
  return {detail::mean(terms), "mr", std::move(terms)};
}

Estimate estimate_mr(const BanditDataset& d, const PolicyEvaluator& pi, std::size_t bins) {
  return estimate_mr(d, policy_rows(pi, d.contexts), bins);
}

Estimate estimate_mips(const BanditDataset& d, const Matrix& pi_rows, std::span<const int> embedding) {
  detail::check_nonempty(d);
  detail::check_rows(d, pi_rows, "policy");
  if (!d.propensities) throw CapabilityError("MIPS needs full logging propensity rows; the dataset only has logged propensities");
  std::span<const int> emb = embedding;
  if (emb.empty()) {
    if (!d.action_embeddings) throw CapabilityError("MIPS needs an action embedding; none given and none in the dataset");
    emb = *d.action_embeddings;
  }
  if (emb.size() != d.num_actions) throw ConfigError("embedding must map every action");
  for (std::size_t a = 0; a < emb.size(); ++a)
    if (emb[a] < 0) throw CapabilityError("embedding undefined for action " + std::to_string(a));

  const Matrix& p0 = *d.propensities;
  std::vector<double> terms(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int e = emb[static_cast<std::size_t>(d.actions[i])];
    double num = 0.0;
    double den = 0.0;
    for (std::size_t a = 0; a < d.num_actions; ++a) {
      if (emb[a] != e) continue;
      num += pi_rows(i, a);
      den += p0(i, a);
    }
    if (!(den > 0.0)) throw ValidationError("sample " + std::to_string(i) + " has zero embedding propensity");
    terms[i] = num / den * d.rewards[i];
  }
  return {detail::mean(terms), "mips", std::move(terms)};
}

Estimate estimate_mips(const BanditDataset& d, const PolicyEvaluator& pi, std::span<const int> embedding) {
  return estimate_mips(d, policy_rows(pi, d.contexts), embedding);
}

}  // namespace ope
