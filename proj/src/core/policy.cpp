#include "ope/policy.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "ope/errors.hpp"

namespace ope {

namespace {

std::uint64_t hash_context(std::span<const double> x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : x) {
    if (v == 0.0) v = 0.0;  // fold -0.0 into +0.0
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h ^= bits;
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  }
  return h;
}

}  // namespace

Matrix policy_rows(const PolicyEvaluator& policy, const Matrix& contexts) {
  Matrix out(contexts.rows(), policy.num_actions());
  for (std::size_t i = 0; i < contexts.rows(); ++i) policy.probabilities(contexts.row(i), out.row(i));
  return out;
}

void check_probability_rows(const Matrix& probs, double tol, const char* what) {
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double total = 0.0;
    for (double p : probs.row(i)) {
      if (!(p >= 0.0)) throw ValidationError(std::string(what) + " row " + std::to_string(i) + " has a negative entry");
      total += p;
    }
    if (!(std::abs(total - 1.0) <= tol))
      throw ValidationError(std::string(what) + " row " + std::to_string(i) + " sums to " + std::to_string(total));
  }
}

PolicyTable::PolicyTable(Matrix probs) : probs_(std::move(probs)) { check_probability_rows(probs_); }

PolicyTable::PolicyTable(Matrix probs, Matrix contexts) : probs_(std::move(probs)), contexts_(std::move(contexts)) {
  check_probability_rows(probs_);
  if (contexts_.rows() != probs_.rows()) throw ValidationError("policy table: one context per row required");
  index_.reserve(contexts_.rows());
  for (std::size_t i = 0; i < contexts_.rows(); ++i) index_.emplace(hash_context(contexts_.row(i)), i);
}

std::optional<std::size_t> PolicyTable::find(std::span<const double> context) const {
  if (context.size() != contexts_.cols()) return std::nullopt;
  auto [lo, hi] = index_.equal_range(hash_context(context));
  std::optional<std::size_t> best;
  for (auto it = lo; it != hi; ++it) {
    auto row = contexts_.row(it->second);
    bool same = true;
    for (std::size_t t = 0; t < row.size() && same; ++t) same = row[t] == context[t];
    if (same && (!best || it->second < *best)) best = it->second;
  }
  return best;
}

void PolicyTable::probabilities(std::span<const double> context, std::span<double> out) const {
  auto i = find(context);
  if (!i) throw std::out_of_range("policy table: context not in the table's universe");
  auto r = probs_.row(*i);
  std::copy(r.begin(), r.end(), out.begin());
}

}  // namespace ope
