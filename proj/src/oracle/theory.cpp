#include <algorithm>
#include <cmath>
#include <limits>

#include "ope/errors.hpp"
#include "ope/oracle.hpp"

namespace ope {

namespace {

std::size_t cluster(const DiscreteInstance& inst, std::size_t x) {
  return static_cast<std::size_t>(inst.cluster_of()[x]);
}

// Reward mean of (a, cluster) read from the cluster's first context.
Matrix cluster_rewards(const DiscreteInstance& inst) {
  Matrix qc(inst.num_clusters(), inst.num_actions());
  std::vector<bool> done(inst.num_clusters(), false);
  for (std::size_t x = 0; x < inst.num_contexts(); ++x) {
    const std::size_t c = cluster(inst, x);
    if (done[c]) continue;
    done[c] = true;
    for (std::size_t a = 0; a < inst.num_actions(); ++a) qc(c, a) = inst.q()(x, a);
  }
  return qc;
}

void require_homogeneous(const DiscreteInstance& inst, const char* what) {
  if (!is_reward_homogeneous(inst))
    throw AssumptionError(std::string(what) + " needs rewards that depend only on (action, cluster)");
}

double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// Weight the estimator gives to action a logged at context x.
double oracle_weight(const DiscreteInstance& inst, OracleEstimator est, std::size_t x, std::size_t a) {
  switch (est) {
    case OracleEstimator::Ips:
      return ratio_or_zero(inst.pi()(x, a), inst.pi0()(x, a));
    case OracleEstimator::Chips: {
      const std::size_t c = cluster(inst, x);
      return ratio_or_zero(inst.cluster_pi()(c, a), inst.cluster_pi0()(c, a));
    }
    case OracleEstimator::Mips: {
      const auto e = static_cast<std::size_t>(inst.embedding()[a]);
      return ratio_or_zero(inst.embed_pi()(x, e), inst.embed_pi0()(x, e));
    }
  }
  return 0.0;
}

}  // namespace

bool has_common_support(const DiscreteInstance& inst) {
  for (std::size_t x = 0; x < inst.num_contexts(); ++x)
    for (std::size_t a = 0; a < inst.num_actions(); ++a)
      if (inst.pi()(x, a) > 0.0 && inst.pi0()(x, a) == 0.0) return false;
  return true;
}

bool has_cluster_support(const DiscreteInstance& inst) {
  for (std::size_t c = 0; c < inst.num_clusters(); ++c)
    for (std::size_t a = 0; a < inst.num_actions(); ++a)
      if (inst.cluster_pi()(c, a) > 0.0 && inst.cluster_pi0()(c, a) == 0.0) return false;
  return true;
}

bool has_embedding_support(const DiscreteInstance& inst) {
  if (!inst.has_embedding()) return false;
  for (std::size_t x = 0; x < inst.num_contexts(); ++x)
    for (std::size_t e = 0; e < inst.num_embeddings(); ++e)
      if (inst.embed_pi()(x, e) > 0.0 && inst.embed_pi0()(x, e) == 0.0) return false;
  return true;
}

bool is_reward_homogeneous(const DiscreteInstance& inst, double tol) {
  const Matrix qc = cluster_rewards(inst);
  for (std::size_t x = 0; x < inst.num_contexts(); ++x)
    for (std::size_t a = 0; a < inst.num_actions(); ++a)
      if (std::abs(inst.q()(x, a) - qc(cluster(inst, x), a)) > tol) return false;
  return true;
}

bool has_no_direct_effect(const DiscreteInstance& inst, double tol) {
  if (!inst.has_embedding()) return false;
  const auto& emb = inst.embedding();
  for (std::size_t x = 0; x < inst.num_contexts(); ++x) {
    std::vector<double> first(inst.num_embeddings(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t a = 0; a < inst.num_actions(); ++a) {
      const auto e = static_cast<std::size_t>(emb[a]);
      if (std::isnan(first[e])) {
        first[e] = inst.q()(x, a);
      } else if (std::abs(inst.q()(x, a) - first[e]) > tol) {
        return false;
      }
    }
  }
  return true;
}

double true_value(const DiscreteInstance& inst) {
  double v = 0.0;
  for (std::size_t x = 0; x < inst.num_contexts(); ++x) {
    double s = 0.0;
    for (std::size_t a = 0; a < inst.num_actions(); ++a) s += inst.pi()(x, a) * inst.q()(x, a);
    v += inst.p_x()[x] * s;
  }
  return v;
}

double cluster_form_value(const DiscreteInstance& inst) {
  require_homogeneous(inst, "the cluster-form value");
  const Matrix qc = cluster_rewards(inst);
  double v = 0.0;
  for (std::size_t c = 0; c < inst.num_clusters(); ++c) {
    double s = 0.0;
    for (std::size_t a = 0; a < inst.num_actions(); ++a) s += inst.cluster_pi()(c, a) * qc(c, a);
    v += inst.p_c()[c] * s;
  }
  return v;
}

Moments exact_moments(const DiscreteInstance& inst, OracleEstimator est, std::size_t n) {
  if (n == 0) throw ConfigError("exact_moments needs n >= 1");
  if (est == OracleEstimator::Mips && !inst.has_embedding())
    throw CapabilityError("MIPS moments need an action embedding");
  // Outcomes (x, a, r) with r in {0, 1}; the r = 0 atoms contribute nothing.
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t x = 0; x < inst.num_contexts(); ++x) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t a = 0; a < inst.num_actions(); ++a) {
      const double p = inst.pi0()(x, a);
      if (p == 0.0) continue;
      const double w = oracle_weight(inst, est, x, a);
      s1 += p * w * inst.q()(x, a);
      s2 += p * w * w * inst.q()(x, a);
    }
    m1 += inst.p_x()[x] * s1;
    m2 += inst.p_x()[x] * s2;
  }
  Moments out;
  out.mean = m1;
  out.variance = std::max(0.0, m2 - m1 * m1) / static_cast<double>(n);
  return out;
}

double exact_bias_deficient(const DiscreteInstance& inst, OracleEstimator est) {
  require_homogeneous(inst, "the deficient-action bias formula");
  const Matrix qc = cluster_rewards(inst);
  double b = 0.0;
  if (est == OracleEstimator::Ips) {
    for (std::size_t x = 0; x < inst.num_contexts(); ++x) {
      double s = 0.0;
      for (std::size_t a = 0; a < inst.num_actions(); ++a)
        if (inst.pi0()(x, a) == 0.0) s += inst.pi()(x, a) * qc(cluster(inst, x), a);
      b += inst.p_x()[x] * s;
    }
  } else if (est == OracleEstimator::Chips) {
    for (std::size_t c = 0; c < inst.num_clusters(); ++c) {
      double s = 0.0;
      for (std::size_t a = 0; a < inst.num_actions(); ++a)
        if (inst.cluster_pi0()(c, a) == 0.0) s += inst.cluster_pi()(c, a) * qc(c, a);
      b += inst.p_c()[c] * s;
    }
  } else {
    throw ConfigError("exact_bias_deficient supports ips and chips");
  }
  return b;
}

double deficient_bias_difference(const DiscreteInstance& inst) {
  require_homogeneous(inst, "the bias difference formula");
  const Matrix qc = cluster_rewards(inst);
  double d = 0.0;
  for (std::size_t x = 0; x < inst.num_contexts(); ++x) {
    const std::size_t c = cluster(inst, x);
    double s = 0.0;
    for (std::size_t a = 0; a < inst.num_actions(); ++a)
      if (inst.pi0()(x, a) == 0.0 && inst.cluster_pi0()(c, a) > 0.0) s += inst.pi()(x, a) * qc(c, a);
    d += inst.p_x()[x] * s;
  }
  return d;
}

DeltaBounds delta_bounds(const DiscreteInstance& inst) {
  const std::size_t K = inst.num_clusters(), A = inst.num_actions();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  DeltaBounds out;
  out.delta_minus_pi = Matrix(K, A, nan);
  out.delta_plus_pi = Matrix(K, A, nan);
  out.delta_minus_pi0 = Matrix(K, A, nan);
  out.delta_plus_pi0 = Matrix(K, A, nan);
  out.gap = Matrix(K, A, 0.0);

  auto fill = [&](const Matrix& per_x, const Matrix& per_c, Matrix& lo, Matrix& hi) {
    for (std::size_t x = 0; x < inst.num_contexts(); ++x) {
      if (inst.p_x()[x] == 0.0) continue;
      const std::size_t c = cluster(inst, x);
      for (std::size_t a = 0; a < A; ++a) {
        if (per_c(c, a) == 0.0) continue;
        const double r = per_x(x, a) / per_c(c, a);
        lo(c, a) = std::isnan(lo(c, a)) ? std::min(r, 1.0) : std::min(lo(c, a), r);
        hi(c, a) = std::isnan(hi(c, a)) ? std::max(r, 1.0) : std::max(hi(c, a), r);
      }
    }
  };
  fill(inst.pi(), inst.cluster_pi(), out.delta_minus_pi, out.delta_plus_pi);
  fill(inst.pi0(), inst.cluster_pi0(), out.delta_minus_pi0, out.delta_plus_pi0);

  for (std::size_t c = 0; c < K; ++c)
    for (std::size_t a = 0; a < A; ++a) {
      const bool has_pi = inst.cluster_pi()(c, a) > 0.0;
      const bool has_pi0 = inst.cluster_pi0()(c, a) > 0.0;
      if (has_pi && !has_pi0) {
        out.gap(c, a) = inf;
        out.unbounded = true;
        continue;
      }
      double hi = -inf, lo = inf;
      if (has_pi) {
        hi = std::max(hi, out.delta_plus_pi(c, a));
        lo = std::min(lo, out.delta_minus_pi(c, a));
      }
      if (has_pi0) {
        hi = std::max(hi, out.delta_plus_pi0(c, a));
        lo = std::min(lo, out.delta_minus_pi0(c, a));
      }
      out.gap(c, a) = (has_pi || has_pi0) ? hi - lo : 0.0;
    }

  if (out.unbounded) {
    out.bias_bound = inf;
    return out;
  }
  double bound = 0.0;
  for (std::size_t x = 0; x < inst.num_contexts(); ++x) {
    const std::size_t c = cluster(inst, x);
    double s = 0.0;
    for (std::size_t a = 0; a < A; ++a) s += inst.cluster_pi()(c, a) * inst.q()(x, a) * out.gap(c, a);
    bound += inst.p_x()[x] * s;
  }
  out.bias_bound = bound;
  return out;
}

double variance_gap(const DiscreteInstance& inst) {
  if (!has_common_support(inst)) throw AssumptionError("the variance gap formula needs common support");
  require_homogeneous(inst, "the variance gap formula");
  const Matrix qc = cluster_rewards(inst);
  const std::size_t K = inst.num_clusters(), A = inst.num_actions();
  double gap = 0.0;
  for (std::size_t c = 0; c < K; ++c) {
    double s = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      const double pa = inst.cluster_pi0()(c, a);
      if (pa == 0.0) continue;
      // pi0(x | a, c) = p(x|c) pi0(a|x) / p(a|c,pi0); its mean of w(a, x) is w(a, c).
      const double mean = inst.cluster_pi()(c, a) / pa;
      double var = 0.0;
      for (std::size_t x = 0; x < inst.num_contexts(); ++x) {
        if (cluster(inst, x) != c || inst.pi0()(x, a) == 0.0) continue;
        const double px = inst.p_x_given_c(x) * inst.pi0()(x, a) / pa;
        const double dev = inst.pi()(x, a) / inst.pi0()(x, a) - mean;
        var += px * dev * dev;
      }
      s += pa * var * qc(c, a);
    }
    gap += inst.p_c()[c] * s;
  }
  return gap;
}

double mse_identity_residual(const DiscreteInstance& inst, std::size_t n) {
  const double v = true_value(inst);
  const Moments ips = exact_moments(inst, OracleEstimator::Ips, n);
  const Moments chips = exact_moments(inst, OracleEstimator::Chips, n);
  const double bias_ips = ips.mean - v, bias_chips = chips.mean - v;
  const double lhs = (bias_ips * bias_ips + ips.variance) - (bias_chips * bias_chips + chips.variance);
  const double rhs = ips.variance - chips.variance - bias_chips * bias_chips;
  return lhs - rhs;
}

double mips_bias_difference(const DiscreteInstance& inst) {
  if (!inst.has_embedding()) throw CapabilityError("the MIPS bias formula needs an action embedding");
  require_homogeneous(inst, "the MIPS bias formula");
  if (!has_no_direct_effect(inst)) throw AssumptionError("the MIPS bias formula needs q(a, x) = q(e(a), x)");
  const auto& emb = inst.embedding();
  // q(e, x) from any action mapped to e.
  Matrix qe(inst.num_contexts(), inst.num_embeddings());
  for (std::size_t x = 0; x < inst.num_contexts(); ++x)
    for (std::size_t a = 0; a < inst.num_actions(); ++a) qe(x, static_cast<std::size_t>(emb[a])) = inst.q()(x, a);
  double mips = 0.0;
  for (std::size_t x = 0; x < inst.num_contexts(); ++x) {
    double s = 0.0;
    for (std::size_t e = 0; e < inst.num_embeddings(); ++e)
      if (inst.embed_pi0()(x, e) == 0.0) s += inst.embed_pi()(x, e) * qe(x, e);
    mips += inst.p_x()[x] * s;
  }
  return mips - exact_bias_deficient(inst, OracleEstimator::Chips);
}

double mr_shifted_mean(const DiscreteInstance& inst, double eps) {
  double m = 0.0;
  for (std::size_t x = 0; x < inst.num_contexts(); ++x) {
    double s = 0.0;
    for (std::size_t a = 0; a < inst.num_actions(); ++a) {
      const double p = inst.pi0()(x, a);
      if (p == 0.0) continue;
      s += p * (inst.pi()(x, a) / p + eps) * inst.q()(x, a);
    }
    m += inst.p_x()[x] * s;
  }
  return m;
}

double mr_bias_difference(const DiscreteInstance& inst, double eps) {
  const Matrix qc = cluster_rewards(inst);
  const double missed = deficient_bias_difference(inst);
  double shift = 0.0;
  for (std::size_t c = 0; c < inst.num_clusters(); ++c) {
    double s = 0.0;
    for (std::size_t a = 0; a < inst.num_actions(); ++a) s += qc(c, a) * inst.cluster_pi0()(c, a);
    shift += inst.p_c()[c] * s;
  }
  return -missed + eps * shift;
}

}  // namespace ope
