#pragma once

#include <cstdint>

#include "ope/dataset.hpp"
#include "ope/matrix.hpp"
#include "ope/synthgen.hpp"

namespace ope::detail {

// Logged data for one synthetic world plus pi(. | x_i) on the logged contexts.
struct LoggedSample {
  SyntheticWorld world;
  BanditDataset data;
  Matrix pi_rows;
  double true_value = 0.0;
};

LoggedSample draw_logged_sample(const SynthConfig& cfg, std::uint64_t world_seed);

}  // namespace ope::detail
