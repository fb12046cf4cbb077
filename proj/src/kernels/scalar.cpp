#include "kernels_impl.hpp"

namespace ope::kernels::scalar {

double sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void accumulate(double* acc, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i];
}

void squared_distances(const double* point, const double* centers, std::size_t stride, std::size_t count,
                       std::size_t dim, double* out) {
  for (std::size_t j = 0; j < count; ++j) out[j] = 0.0;
  for (std::size_t t = 0; t < dim; ++t) {
    const double p = point[t];
    const double* row = centers + t * stride;
    for (std::size_t j = 0; j < count; ++j) {
      const double diff = p - row[j];
      out[j] += diff * diff;
    }
  }
}

}  // namespace ope::kernels::scalar
