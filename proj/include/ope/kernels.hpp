#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ope::kernels {

enum class Backend { Scalar, Avx2 };

// Function table for the numeric inner loops. Every backend must agree with the
// scalar one: bit for bit on distances, to rounding on reductions.
struct KernelTable {
  Backend backend;
  const char* name;
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // acc[i] += x[i]
  void (*accumulate)(double* acc, const double* x, std::size_t n);
  // out[j] = sum_t (point[t] - centers[t * stride + j])^2 for j < count; centers
  // are stored dimension-major with `stride` >= count entries per dimension.
  void (*squared_distances)(const double* point, const double* centers, std::size_t stride,
                            std::size_t count, std::size_t dim, double* out);
};

const KernelTable& scalar_table();
// nullptr when the backend was not compiled in.
const KernelTable* avx2_table();

bool cpu_supports(Backend b);
std::vector<Backend> available_backends();
Backend parse_backend(std::string_view name);
const char* backend_name(Backend b);

// The active table. On first use it honours OPE_KERNELS=scalar|avx2, otherwise
// picks the widest backend the CPU supports.
const KernelTable& active();
// Switches the active backend; throws CapabilityError when unavailable.
void select(Backend b);

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline void accumulate(std::span<double> acc, std::span<const double> x) {
  active().accumulate(acc.data(), x.data(), acc.size());
}

// Centers laid out for the distance kernel: dimension-major, padded to a
// multiple of 8 columns.
class CenterBlock {
 public:
  CenterBlock() = default;
  // `centers` is count x dim row-major.
  CenterBlock(const double* centers, std::size_t count, std::size_t dim);

  std::size_t count() const { return count_; }
  std::size_t dim() const { return dim_; }
  std::size_t stride() const { return stride_; }
  const double* data() const { return data_.data(); }

  // Squared distance to every center; `out` must hold stride() values.
  void distances(const double* point, double* out) const;
  // Index of the nearest center, lowest index on ties; sets *dist2 when given.
  std::size_t nearest(const double* point, double* scratch, double* dist2 = nullptr) const;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::size_t stride_ = 0;
  std::vector<double> data_;
};

}  // namespace ope::kernels
