#include <algorithm>
#include <cmath>
#include <limits>

#include "ope/clustering.hpp"
#include "ope/errors.hpp"

namespace ope {

std::vector<int> ContextPartition::assign_all(const Matrix& contexts) const {
  std::vector<int> out(contexts.rows());
  for (std::size_t i = 0; i < contexts.rows(); ++i) out[i] = assign(contexts.row(i));
  return out;
}

ClusterModel::ClusterModel(Matrix centers) : centers_(std::move(centers)) {
  if (centers_.rows() == 0) throw ConfigError("cluster model needs at least one center");
  for (double v : centers_.values())
    if (!std::isfinite(v)) throw ValidationError("cluster centers must be finite");
  block_ = kernels::CenterBlock(centers_.data(), centers_.rows(), centers_.cols());
}

int ClusterModel::assign(std::span<const double> context) const {
  if (context.size() != dim()) throw ValidationError("context dimension differs from the cluster model's");
  std::vector<double> scratch(block_.stride());
  return static_cast<int>(block_.nearest(context.data(), scratch.data()));
}

std::vector<int> ClusterModel::assign_all(const Matrix& contexts) const {
  if (contexts.rows() && contexts.cols() != dim())
    throw ValidationError("context dimension differs from the cluster model's");
  std::vector<int> out(contexts.rows());
  std::vector<double> scratch(block_.stride());
  for (std::size_t i = 0; i < contexts.rows(); ++i)
    out[i] = static_cast<int>(block_.nearest(contexts.row(i).data(), scratch.data()));
  return out;
}

double ClusterModel::inertia(const Matrix& contexts) const {
  std::vector<double> scratch(block_.stride());
  double total = 0.0;
  for (std::size_t i = 0; i < contexts.rows(); ++i) {
    double d2 = 0.0;
    block_.nearest(contexts.row(i).data(), scratch.data(), &d2);
    total += d2;
  }
  return total;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double d = a[t] - b[t];
    s += d * d;
  }
  return s;
}

// k-means++ seeding over the rows listed in `pool`.
Matrix seed_centers(const Matrix& x, const std::vector<std::size_t>& pool, std::size_t k, RandomStream& rng) {
  const std::size_t dim = x.cols();
  Matrix centers(k, dim);
  std::vector<double> d2(pool.size(), std::numeric_limits<double>::infinity());

  std::size_t pick = pool[rng.index(pool.size())];
  for (std::size_t c = 0; c < k; ++c) {
    auto src = x.row(pick);
    std::copy(src.begin(), src.end(), centers.row(c).begin());
    if (c + 1 == k) break;
    double total = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(pool[i]), centers.row(c)));
      total += d2[i];
    }
    if (total > 0.0) {
      pick = pool[rng.categorical(d2)];
    } else {
      pick = pool[rng.index(pool.size())];
    }
  }
  return centers;
}

}  // namespace

ClusterModel fit_minibatch_kmeans(const Matrix& contexts, std::size_t k, const KMeansOptions& opts,
                                  RandomStream& rng) {
  const std::size_t n = contexts.rows();
  const std::size_t dim = contexts.cols();
  if (k == 0) throw ConfigError("number of clusters must be >= 1");
  if (k > n) throw ConfigError("number of clusters (" + std::to_string(k) + ") exceeds sample count (" +
                               std::to_string(n) + ")");
  if (opts.batch == 0) throw ConfigError("batch size must be >= 1");

  // Seeding pool: a uniform subsample of min(N, 10 K batch) rows, always in index order.
  const std::size_t pool_size = std::min<std::size_t>(n, 10 * k * opts.batch);
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  if (pool_size < n) {
    for (std::size_t i = 0; i < pool_size; ++i) std::swap(pool[i], pool[i + rng.index(n - i)]);
    pool.resize(pool_size);
    std::sort(pool.begin(), pool.end());
  }
  Matrix centers = seed_centers(contexts, pool, k, rng);

  std::vector<double> counts(k, 0.0);
  std::vector<std::size_t> batch;
  std::vector<std::size_t> labels;
  const bool full_batch = opts.batch >= n;
  for (std::size_t it = 0; it < opts.iterations; ++it) {
    batch.clear();
    if (full_batch) {
      for (std::size_t i = 0; i < n; ++i) batch.push_back(i);
    } else {
      for (std::size_t b = 0; b < opts.batch; ++b) batch.push_back(rng.index(n));
    }
    kernels::CenterBlock block(centers.data(), k, dim);
    std::vector<double> scratch(block.stride());
    labels.resize(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b)
      labels[b] = block.nearest(contexts.row(batch[b]).data(), scratch.data());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const std::size_t c = labels[b];
      counts[c] += 1.0;
      const double eta = 1.0 / counts[c];
      auto center = centers.row(c);
      auto x = contexts.row(batch[b]);
      for (std::size_t t = 0; t < dim; ++t) center[t] += eta * (x[t] - center[t]);
    }
  }

  // Full pass; re-seed empty clusters at the points farthest from their centers.
  kernels::CenterBlock block(centers.data(), k, dim);
  std::vector<double> scratch(block.stride());
  std::vector<std::size_t> assign(n);
  std::vector<double> dist(n);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    assign[i] = block.nearest(contexts.row(i).data(), scratch.data(), &dist[i]);
    ++sizes[assign[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] > 0) continue;
    std::size_t far = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (sizes[assign[i]] <= 1 || dist[i] <= 0.0) continue;
      if (far == n || dist[i] > dist[far]) far = i;
    }
    if (far == n) break;  // every remaining point sits on its center
    auto src = contexts.row(far);
    std::copy(src.begin(), src.end(), centers.row(c).begin());
    --sizes[assign[far]];
    assign[far] = c;
    dist[far] = 0.0;
    sizes[c] = 1;
  }
  return ClusterModel(std::move(centers));
}

std::shared_ptr<const ContextPartition> MiniBatchKMeans::fit(const Matrix& contexts, RandomStream& rng) const {
  return std::make_shared<ClusterModel>(fit_minibatch_kmeans(contexts, k_, opts_, rng));
}

}  // namespace ope
