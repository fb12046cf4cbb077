#include <cmath>
#include <string>

#include "ope/errors.hpp"
#include "ope/oracle.hpp"

namespace ope {

namespace {

void check_rows(const Matrix& m, std::size_t rows, const char* name) {
  if (m.rows() != rows) throw ValidationError(std::string(name) + " must have one row per context");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (double v : m.row(r)) {
      if (!(v >= 0.0)) throw ValidationError(std::string(name) + " has a negative or NaN entry");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ValidationError(std::string(name) + " row " + std::to_string(r) + " does not sum to 1");
  }
}

}  // namespace

DiscreteInstance::DiscreteInstance(std::vector<double> p_x, std::vector<int> cluster_of, Matrix pi, Matrix pi0,
                                   Matrix q, std::optional<std::vector<int>> embedding)
    : p_x_(std::move(p_x)),
      cluster_of_(std::move(cluster_of)),
      pi_(std::move(pi)),
      pi0_(std::move(pi0)),
      q_(std::move(q)),
      embedding_(std::move(embedding)) {
  const std::size_t M = p_x_.size();
  if (M == 0) throw ValidationError("instance needs at least one context");
  const std::size_t A = pi_.cols();
  if (A == 0) throw ValidationError("instance needs at least one action");
  if (M * A > kEnumerationCap)
    throw ResourceError("instance has " + std::to_string(M * A) + " (context, action) atoms; the cap is " +
                        std::to_string(kEnumerationCap));
  double total = 0.0;
  for (double p : p_x_) {
    if (!(p >= 0.0)) throw ValidationError("p_x has a negative or NaN entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("p_x does not sum to 1");
  if (pi0_.cols() != A || q_.cols() != A) throw ValidationError("pi, pi0 and q must have the same number of actions");
  check_rows(pi_, M, "pi");
  check_rows(pi0_, M, "pi0");
  if (q_.rows() != M) throw ValidationError("q must have one row per context");
  for (double v : q_.values())
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("q entries must lie in [0, 1]");
  if (cluster_of_.size() != M) throw ValidationError("cluster_of must have one entry per context");

  int k_max = -1;
  for (int c : cluster_of_) {
    if (c < 0) throw ValidationError("cluster ids must be >= 0");
    k_max = std::max(k_max, c);
  }
  const std::size_t K = static_cast<std::size_t>(k_max) + 1;
  std::vector<bool> seen(K, false);
  for (int c : cluster_of_) seen[static_cast<std::size_t>(c)] = true;
  for (std::size_t c = 0; c < K; ++c)
    if (!seen[c]) throw ValidationError("cluster " + std::to_string(c) + " has no contexts");

  p_c_.assign(K, 0.0);
  for (std::size_t x = 0; x < M; ++x) p_c_[static_cast<std::size_t>(cluster_of_[x])] += p_x_[x];
  cluster_pi_ = Matrix(K, A);
  cluster_pi0_ = Matrix(K, A);
  for (std::size_t x = 0; x < M; ++x) {
    const double w = p_x_given_c(x);
    const auto c = static_cast<std::size_t>(cluster_of_[x]);
    for (std::size_t a = 0; a < A; ++a) {
      cluster_pi_(c, a) += w * pi_(x, a);
      cluster_pi0_(c, a) += w * pi0_(x, a);
    }
  }

  if (embedding_) {
    if (embedding_->size() != A) throw ValidationError("embedding must have one entry per action");
    int e_max = -1;
    for (int e : *embedding_) {
      if (e < 0) throw ValidationError("embedding ids must be >= 0");
      e_max = std::max(e_max, e);
    }
    num_embeddings_ = static_cast<std::size_t>(e_max) + 1;
    embed_pi_ = Matrix(M, num_embeddings_);
    embed_pi0_ = Matrix(M, num_embeddings_);
    for (std::size_t x = 0; x < M; ++x)
      for (std::size_t a = 0; a < A; ++a) {
        const auto e = static_cast<std::size_t>((*embedding_)[a]);
        embed_pi_(x, e) += pi_(x, a);
        embed_pi0_(x, e) += pi0_(x, a);
      }
  }
}

double DiscreteInstance::p_x_given_c(std::size_t x) const {
  const double pc = p_c_[static_cast<std::size_t>(cluster_of_[x])];
  return pc > 0.0 ? p_x_[x] / pc : 0.0;
}

const std::vector<int>& DiscreteInstance::embedding() const {
  if (!embedding_) throw CapabilityError("instance has no action embedding");
  return *embedding_;
}

}  // namespace ope
