#include <algorithm>
#include <atomic>
#include <chrono>
#include <ostream>

#include "ope/csv.hpp"
#include "ope/errors.hpp"
#include "ope/harness.hpp"
#include "replication.hpp"

namespace ope {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr std::size_t kEvictBytes = std::size_t{256} << 20;

void evict_caches() {
  static std::vector<unsigned char> buffer(kEvictBytes);
  static std::atomic<unsigned char> sink;
  unsigned char acc = 0;
  for (std::size_t i = 0; i < buffer.size(); i += 64) acc = static_cast<unsigned char>(acc + ++buffer[i]);
  sink.store(acc, std::memory_order_relaxed);
}

}  // namespace

std::vector<BenchRow> run_benchmark(const BenchSpec& spec, const EstimatorRegistry& registry) {
  spec.base.validate();
  if (spec.sizes.empty()) throw ConfigError("benchmark needs at least one size");
  if (spec.repeats < 1) throw ConfigError("repeats must be >= 1");
  for (const auto& e : spec.estimators) registry.check(e);

  std::vector<BenchRow> rows;
  for (long long n : spec.sizes) {
    SynthConfig cfg = spec.base;
    cfg.n_samples = n;
    cfg.validate();
    const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(n));
    const detail::LoggedSample s = detail::draw_logged_sample(cfg, seed);
    const std::uint64_t session_seed = mix64(seed ^ streams::kEstimators);

    if (spec.time_clustering) {
      std::vector<double> t;
      for (std::size_t r = 0; r < spec.repeats; ++r) {
        EvaluationSession session(s.data, s.pi_rows, session_seed);
        if (spec.cold_cache) evict_caches();
        t.push_back(seconds([&] { session.partition(static_cast<std::size_t>(cfg.emp_c_num), KMeansOptions{}); }));
      }
      rows.push_back({"kmeans-fit", n, median(t)});
    }
    for (const auto& e : spec.estimators) {
      const EstimatorSpec resolved = resolve_estimator(e, cfg, registry);
      std::vector<double> t;
      for (std::size_t r = 0; r < spec.repeats; ++r) {
        // A fresh session per repeat so model fits are part of the measured time.
        EvaluationSession session(s.data, s.pi_rows, session_seed);
        if (spec.cold_cache) evict_caches();
        t.push_back(seconds([&] { registry.run(session, resolved); }));
      }
      rows.push_back({e.name, n, median(t)});
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "estimator,n,seconds\n";
  for (const auto& r : rows) out << r.estimator << ',' << r.n << ',' << format_real(r.seconds) << '\n';
}

}  // namespace ope
