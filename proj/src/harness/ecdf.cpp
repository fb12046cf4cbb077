#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ope/csv.hpp"
#include "ope/errors.hpp"
#include "ope/estimators.hpp"
#include "ope/harness.hpp"

namespace ope {

double ecdf_at(const EcdfCurve& curve, double x) {
  if (curve.z.empty()) return 0.0;
  const auto k = std::upper_bound(curve.z.begin(), curve.z.end(), x) - curve.z.begin();
  return static_cast<double>(k) / static_cast<double>(curve.z.size());
}

EcdfCurve make_ecdf(std::string estimator, std::vector<double> ratios) {
  EcdfCurve c;
  c.estimator = std::move(estimator);
  std::sort(ratios.begin(), ratios.end());
  c.z = std::move(ratios);
  c.f.resize(c.z.size());
  for (std::size_t i = 0; i < c.z.size(); ++i) c.f[i] = ecdf_at(c, c.z[i]);
  return c;
}

EcdfResult ecdf_protocol(const BanditDataset& log, const Matrix& log_pi_rows, const BanditDataset& eval,
                         const std::vector<EstimatorSpec>& estimators, std::size_t n, std::size_t T,
                         RandomStream& rng, const EstimatorRegistry& registry) {
  if (eval.size() == 0) throw ValidationError("the evaluation dataset is empty");
  if (log.size() == 0) throw ValidationError("the logged dataset is empty");
  if (n == 0 || T == 0) throw ConfigError("bootstrap size and repetitions must be >= 1");
  if (log_pi_rows.rows() != log.size() || log_pi_rows.cols() != log.num_actions)
    throw ValidationError("policy rows must be N x A");
  for (const auto& e : estimators) registry.check(e);

  const double inf = std::numeric_limits<double>::infinity();
  EcdfResult out;
  double total = 0.0;
  for (double r : eval.rewards) total += r;
  out.policy_value = total / static_cast<double>(eval.size());
  out.squared_errors.assign(estimators.size(), std::vector<double>(T, inf));
  out.ips_squared_errors.assign(T, inf);
  std::vector<std::vector<double>> ratios(estimators.size(), std::vector<double>(T, inf));

  std::vector<std::size_t> idx(n);
  for (std::size_t t = 0; t < T; ++t) {
    for (auto& i : idx) i = rng.index(log.size());
    const BanditDataset sample = subset(log, idx);
    EvaluationSession session(sample, log_pi_rows.gather_rows(idx), rng.engine()());
    const double ips = estimate_ips(sample, session.pi_rows()).value - out.policy_value;
    const double ips_se = ips * ips;
    out.ips_squared_errors[t] = ips_se;
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      double se = inf;
      try {
        const double err = registry.run(session, estimators[e]).value - out.policy_value;
        if (std::isfinite(err)) se = err * err;
      } catch (const std::exception&) {
        // A failed fit scores as an infinitely bad resample.
      }
      out.squared_errors[e][t] = se;
      ratios[e][t] = (ips_se == 0.0 || !std::isfinite(se)) ? inf : se / ips_se;
    }
  }
  for (std::size_t e = 0; e < estimators.size(); ++e)
    out.curves.push_back(make_ecdf(estimators[e].name, std::move(ratios[e])));
  return out;
}

EcdfResult ecdf_protocol(const BanditDataset& log, const BanditDataset& eval, const PolicyEvaluator& pi,
                         const std::vector<EstimatorSpec>& estimators, std::size_t n, std::size_t T,
                         RandomStream& rng, const EstimatorRegistry& registry) {
  return ecdf_protocol(log, policy_rows(pi, log.contexts), eval, estimators, n, T, rng, registry);
}

void write_ecdf_csv(std::ostream& out, const EcdfResult& result) {
  out << "estimator,z,F\n";
  for (const auto& c : result.curves)
    for (std::size_t i = 0; i < c.z.size(); ++i)
      out << c.estimator << ',' << format_real(c.z[i]) << ',' << format_real(c.f[i]) << '\n';
}

}  // namespace ope
