#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "ope/errors.hpp"
#include "ope/kernels.hpp"

namespace ope::kernels {

namespace {

const KernelTable kScalar{Backend::Scalar, "scalar", &scalar::sum, &scalar::dot, &scalar::accumulate,
                          &scalar::squared_distances};

#ifdef OPE_HAVE_AVX2_KERNELS
const KernelTable kAvx2{Backend::Avx2, "avx2", &avx2::sum, &avx2::dot, &avx2::accumulate,
                        &avx2::squared_distances};
#endif

const KernelTable* table_for(Backend b) {
  if (b == Backend::Scalar) return &kScalar;
  return avx2_table();
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("OPE_KERNELS"); env && *env) {
    const Backend b = parse_backend(env);
    if (!cpu_supports(b)) throw CapabilityError(std::string("OPE_KERNELS=") + env + " is not supported on this machine");
    return table_for(b);
  }
  if (cpu_supports(Backend::Avx2)) return table_for(Backend::Avx2);
  return &kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#ifdef OPE_HAVE_AVX2_KERNELS
  return &kAvx2;
#else
  return nullptr;
#endif
}

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(OPE_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::Scalar};
  if (cpu_supports(Backend::Avx2)) out.push_back(Backend::Avx2);
  return out;
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::Scalar;
  if (name == "avx2") return Backend::Avx2;
  throw ConfigError("unknown kernel backend '" + std::string(name) + "' (expected scalar or avx2)");
}

const char* backend_name(Backend b) { return b == Backend::Scalar ? "scalar" : "avx2"; }

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Backend b) {
  if (!cpu_supports(b)) throw CapabilityError(std::string("kernel backend ") + backend_name(b) + " is unavailable");
  current().store(table_for(b), std::memory_order_release);
}

CenterBlock::CenterBlock(const double* centers, std::size_t count, std::size_t dim)
    : count_(count), dim_(dim), stride_((count + 7) / 8 * 8), data_(stride_ * dim, 0.0) {
  for (std::size_t j = 0; j < count; ++j)
    for (std::size_t t = 0; t < dim; ++t) data_[t * stride_ + j] = centers[j * dim + t];
}

void CenterBlock::distances(const double* point, double* out) const {
  active().squared_distances(point, data_.data(), stride_, count_, dim_, out);
}

std::size_t CenterBlock::nearest(const double* point, double* scratch, double* dist2) const {
  distances(point, scratch);
  std::size_t best = 0;
  double best_d = scratch[0];
  for (std::size_t j = 1; j < count_; ++j) {
    if (scratch[j] < best_d) {
      best_d = scratch[j];
      best = j;
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

}  // namespace ope::kernels
