#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ope/matrix.hpp"

namespace ope {

// SplitMix64 finalizer; used to derive well-spread seeds from small integers.
std::uint64_t mix64(std::uint64_t x);

// Seed for replication `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Deterministic random source identified by (seed, stream_id). Equal pairs give
// identical draws; different stream ids give unrelated sequences.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // A fresh stream for a named sub-purpose, independent of this stream's state.
  RandomStream substream(std::uint64_t purpose) const;

  double uniform();  // [0, 1)
  double normal();   // N(0, 1)
  std::size_t index(std::size_t n);  // uniform on [0, n)
  std::vector<double> normals(std::size_t n);

  // Draws i with probability weights[i] / sum(weights).
  std::size_t categorical(std::span<const double> weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Softmax of a vector of logits (max-shifted).
std::vector<double> softmax(std::span<const double> logits);
void softmax_inplace(std::span<double> values);

// Inverse-CDF sampler over every row of a probability table.
class RowSampler {
 public:
  RowSampler() = default;
  explicit RowSampler(const Matrix& probs);
  // Column drawn from row `row` using a uniform variate u in [0, 1).
  std::size_t sample(std::size_t row, double u) const;

 private:
  Matrix cdf_;
};

}  // namespace ope
