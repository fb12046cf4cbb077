#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "ope/kernels.hpp"
#include "ope/matrix.hpp"
#include "ope/random.hpp"

namespace ope {

// A partition of context space: the map xi from contexts to cluster ids.
class ContextPartition {
 public:
  virtual ~ContextPartition() = default;
  virtual std::size_t num_clusters() const = 0;
  virtual int assign(std::span<const double> context) const = 0;
  virtual std::vector<int> assign_all(const Matrix& contexts) const;
};

// Nearest-center partition.
class ClusterModel final : public ContextPartition {
 public:
  explicit ClusterModel(Matrix centers);

  std::size_t num_clusters() const override { return centers_.rows(); }
  std::size_t dim() const { return centers_.cols(); }
  const Matrix& centers() const { return centers_; }

  // Nearest center, lowest index on exact ties.
  int assign(std::span<const double> context) const override;
  std::vector<int> assign_all(const Matrix& contexts) const override;
  // Sum of squared distances to the assigned centers.
  double inertia(const Matrix& contexts) const;

 private:
  Matrix centers_;
  kernels::CenterBlock block_;
};

struct KMeansOptions {
  std::size_t batch = 1024;
  std::size_t iterations = 100;
};

// Mini-batch k-means with k-means++ seeding. Throws ConfigError unless 1 <= k <= N.
ClusterModel fit_minibatch_kmeans(const Matrix& contexts, std::size_t k, const KMeansOptions& opts,
                                  RandomStream& rng);

// Pluggable fitting step, so other clustering methods can feed the estimators.
class Clusterer {
 public:
  virtual ~Clusterer() = default;
  virtual std::shared_ptr<const ContextPartition> fit(const Matrix& contexts, RandomStream& rng) const = 0;
};

class MiniBatchKMeans final : public Clusterer {
 public:
  MiniBatchKMeans(std::size_t k, KMeansOptions opts = {}) : k_(k), opts_(opts) {}
  std::shared_ptr<const ContextPartition> fit(const Matrix& contexts, RandomStream& rng) const override;
  std::size_t k() const { return k_; }

 private:
  std::size_t k_;
  KMeansOptions opts_;
};

}  // namespace ope
