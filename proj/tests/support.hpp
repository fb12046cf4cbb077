#pragma once

#include <cmath>
#include <vector>

#include "ope/ope.hpp"

namespace ope::test {

// Random logged data with full propensity rows, binary rewards and a random
// evaluation policy. Some propensity entries can be made exactly zero.
struct RandomBandit {
  BanditDataset data;
  Matrix pi_rows;
};

inline Matrix random_prob_rows(RandomStream& rng, std::size_t n, std::size_t A, double zero_rate = 0.0) {
  Matrix m(n, A);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = m.row(i);
    double s = 0.0;
    for (auto& v : row) {
      v = rng.uniform() < zero_rate ? 0.0 : std::exp(1.5 * rng.normal());
      s += v;
    }
    if (s == 0.0) {
      row[rng.index(A)] = 1.0;
      s = 1.0;
    }
    for (auto& v : row) v /= s;
  }
  return m;
}

inline RandomBandit random_bandit(RandomStream& rng, std::size_t n, std::size_t A, std::size_t d = 2,
                                  double zero_rate = 0.0) {
  Matrix x(n, d);
  for (double& v : std::span<double>(x.data(), n * d)) v = rng.normal();
  Matrix p0 = random_prob_rows(rng, n, A, zero_rate);
  std::vector<int> actions(n);
  std::vector<double> rewards(n);
  for (std::size_t i = 0; i < n; ++i) {
    actions[i] = static_cast<int>(rng.categorical(p0.row(i)));
    rewards[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
  }
  RandomBandit out;
  out.pi_rows = random_prob_rows(rng, n, A);
  out.data = make_dataset(std::move(x), std::move(actions), std::move(rewards), std::move(p0));
  return out;
}

inline std::vector<int> random_ids(RandomStream& rng, std::size_t n, std::size_t k) {
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i < k ? i : rng.index(k));
  return ids;
}

}  // namespace ope::test
