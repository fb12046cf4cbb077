#include "ope/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ope/errors.hpp"

namespace ope {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x8bb84b93962eacc9ULL));
}

namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t stream_id) {
  const std::uint64_t a = mix64(seed);
  const std::uint64_t b = mix64(a ^ mix64(stream_id + 0x632be59bd9b4e019ULL));
  return std::seed_seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                       static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  auto seq = make_seed_seq(seed, stream_id);
  engine_.seed(seq);
}

RandomStream RandomStream::substream(std::uint64_t purpose) const {
  return RandomStream(seed_, derive_seed(stream_id_, purpose + 1));
}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() { return normal_(engine_); }

std::size_t RandomStream::index(std::size_t n) {
  if (n == 0) throw ConfigError("index(0): empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

std::vector<double> RandomStream::normals(std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = normal();
  return out;
}

std::size_t RandomStream::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw ValidationError("categorical: weights sum to zero");
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

void softmax_inplace(std::span<double> values) {
  if (values.empty()) return;
  const double m = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (auto& v : values) {
    v = std::exp(v - m);
    total += v;
  }
  for (auto& v : values) v /= total;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  softmax_inplace(out);
  return out;
}

RowSampler::RowSampler(const Matrix& probs) : cdf_(probs.rows(), probs.cols()) {
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      acc += probs(i, j);
      cdf_(i, j) = acc;
    }
  }
}

std::size_t RowSampler::sample(std::size_t row, double u) const {
  auto c = cdf_.row(row);
  const double target = u * c.back();
  auto it = std::upper_bound(c.begin(), c.end(), target);
  std::size_t j = static_cast<std::size_t>(it - c.begin());
  if (j >= c.size()) j = c.size() - 1;
  // Never return a zero-probability column (possible only through rounding at the top end).
  while (j > 0 && c[j] == c[j - 1]) --j;
  return j;
}

}  // namespace ope
