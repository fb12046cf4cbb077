#pragma once

#include <string>

#include "ope/dataset.hpp"
#include "ope/errors.hpp"
#include "ope/matrix.hpp"

namespace ope::detail {

inline void check_rows(const BanditDataset& d, const Matrix& rows, const char* what) {
  if (rows.rows() != d.size() || rows.cols() != d.num_actions)
    throw ValidationError(std::string(what) + " rows must be N x A (" + std::to_string(d.size()) + " x " +
                          std::to_string(d.num_actions) + "), got " + std::to_string(rows.rows()) + " x " +
                          std::to_string(rows.cols()));
}

inline void check_nonempty(const BanditDataset& d) {
  if (d.size() == 0) throw ValidationError("estimator called on an empty dataset");
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace ope::detail
