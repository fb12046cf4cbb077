#pragma once

#include <cstddef>

namespace ope::kernels {

namespace scalar {
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void accumulate(double* acc, const double* x, std::size_t n);
void squared_distances(const double* point, const double* centers, std::size_t stride, std::size_t count,
                       std::size_t dim, double* out);
}  // namespace scalar

namespace avx2 {
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void accumulate(double* acc, const double* x, std::size_t n);
void squared_distances(const double* point, const double* centers, std::size_t stride, std::size_t count,
                       std::size_t dim, double* out);
}  // namespace avx2

}  // namespace ope::kernels
