#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>

#include "ope/matrix.hpp"

namespace ope {

// Anything that maps a context to a probability row over actions.
class PolicyEvaluator {
 public:
  virtual ~PolicyEvaluator() = default;
  virtual std::size_t num_actions() const = 0;
  virtual void probabilities(std::span<const double> context, std::span<double> out) const = 0;
};

// pi(. | x_i) for every row of `contexts`.
Matrix policy_rows(const PolicyEvaluator& policy, const Matrix& contexts);

// Throws ValidationError unless every row is a probability vector (sum 1 +- tol, entries >= 0).
void check_probability_rows(const Matrix& probs, double tol = 1e-9, const char* what = "policy");

// A policy over a finite universe of contexts, one probability row per context.
class PolicyTable final : public PolicyEvaluator {
 public:
  PolicyTable() = default;
  explicit PolicyTable(Matrix probs);
  // With a context matrix the table can also answer lookups by context vector.
  PolicyTable(Matrix probs, Matrix contexts);

  std::size_t num_contexts() const { return probs_.rows(); }
  std::size_t num_actions() const override { return probs_.cols(); }
  const Matrix& probs() const { return probs_; }
  std::span<const double> row(std::size_t i) const { return probs_.row(i); }
  double operator()(std::size_t i, std::size_t a) const { return probs_(i, a); }

  bool has_contexts() const { return !contexts_.empty(); }
  const Matrix& contexts() const { return contexts_; }
  std::optional<std::size_t> find(std::span<const double> context) const;

  // Exact-match lookup; throws std::out_of_range for unknown contexts.
  void probabilities(std::span<const double> context, std::span<double> out) const override;

 private:
  Matrix probs_;
  Matrix contexts_;
  std::unordered_multimap<std::uint64_t, std::size_t> index_;
};

}  // namespace ope
