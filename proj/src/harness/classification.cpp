#include <algorithm>
#include <cmath>
#include <numeric>

#include "ope/errors.hpp"
#include "ope/harness.hpp"

namespace ope {

LinearScorer::LinearScorer(Matrix weights, std::vector<double> bias) : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (bias_.size() != weights_.rows()) throw ValidationError("scorer bias must have one entry per class");
}

void LinearScorer::scores(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dim() || out.size() != num_classes()) throw ValidationError("scorer input has the wrong shape");
  for (std::size_t k = 0; k < num_classes(); ++k) {
    double s = bias_[k];
    auto w = weights_.row(k);
    for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
    out[k] = s;
  }
}

std::size_t LinearScorer::predict(std::span<const double> x) const {
  std::vector<double> s(num_classes());
  scores(x, s);
  return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
}

LinearScorer fit_logistic_scorer(const Matrix& features, std::span<const int> labels, std::size_t num_classes,
                                 const ConversionOptions& opts) {
  const std::size_t N = features.rows(), d = features.cols(), L = num_classes;
  if (N == 0) throw ValidationError("cannot fit a scorer on no examples");
  if (labels.size() != N) throw ValidationError("one label per feature row is required");
  Matrix W(L, d);
  std::vector<double> b(L, 0.0);
  Matrix gW(L, d);
  std::vector<double> gb(L), p(L);
  const double inv_n = 1.0 / static_cast<double>(N);
  // Full-batch gradient descent on the L2-regularized softmax cross-entropy.
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    std::fill(gW.data(), gW.data() + L * d, 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      auto x = features.row(i);
      for (std::size_t k = 0; k < L; ++k) {
        double s = b[k];
        auto w = W.row(k);
        for (std::size_t j = 0; j < d; ++j) s += w[j] * x[j];
        p[k] = s;
      }
      softmax_inplace(p);
      p[static_cast<std::size_t>(labels[i])] -= 1.0;
      for (std::size_t k = 0; k < L; ++k) {
        gb[k] += p[k];
        auto g = gW.row(k);
        for (std::size_t j = 0; j < d; ++j) g[j] += p[k] * x[j];
      }
    }
    for (std::size_t k = 0; k < L; ++k) {
      b[k] -= opts.learning_rate * gb[k] * inv_n;
      auto w = W.row(k);
      auto g = gW.row(k);
      for (std::size_t j = 0; j < d; ++j) w[j] -= opts.learning_rate * (g[j] * inv_n + opts.l2 * w[j]);
    }
  }
  return LinearScorer(std::move(W), std::move(b));
}

SoftmaxPolicy::SoftmaxPolicy(std::shared_ptr<const LinearScorer> scorer, double temperature)
    : scorer_(std::move(scorer)), temperature_(temperature) {
  if (!(temperature_ > 0.0)) throw ConfigError("softmax temperature must be > 0");
}

void SoftmaxPolicy::probabilities(std::span<const double> x, std::span<double> out) const {
  if (std::isinf(temperature_)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return;
  }
  scorer_->scores(x, out);
  for (double& v : out) v /= temperature_;
  softmax_inplace(out);
}

EpsilonGreedyPolicy::EpsilonGreedyPolicy(std::shared_ptr<const LinearScorer> scorer, double epsilon)
    : scorer_(std::move(scorer)), epsilon_(epsilon) {
  if (!(epsilon_ >= 0.0 && epsilon_ <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
}

void EpsilonGreedyPolicy::probabilities(std::span<const double> x, std::span<double> out) const {
  const std::size_t best = scorer_->predict(x);
  std::fill(out.begin(), out.end(), epsilon_ / static_cast<double>(out.size()));
  out[best] += 1.0 - epsilon_;
}

namespace {

BanditDataset draw_bandit(const Matrix& contexts, const std::vector<int>& labels, const PolicyEvaluator& logging,
                          RandomStream& rng) {
  const std::size_t n = contexts.rows();
  Matrix props = policy_rows(logging, contexts);
  std::vector<int> actions(n);
  std::vector<double> rewards(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = rng.categorical(props.row(i));
    actions[i] = static_cast<int>(a);
    rewards[i] = static_cast<int>(a) == labels[i] ? 1.0 : 0.0;
  }
  return make_dataset(contexts, std::move(actions), std::move(rewards), std::move(props), 1.0);
}

}  // namespace

ConvertedBandit classification_to_bandit(const Matrix& features, std::span<const int> labels, std::size_t num_classes,
                                         const ConversionOptions& opts, RandomStream& rng) {
  if (num_classes < 2) throw ConfigError("classification data needs at least two classes");
  const std::size_t N = features.rows();
  if (labels.size() != N) throw ValidationError("one label per feature row is required");
  std::vector<std::size_t> per_class(num_classes, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw ValidationError("label out of range");
    ++per_class[static_cast<std::size_t>(y)];
  }
  for (std::size_t k = 0; k < num_classes; ++k)
    if (per_class[k] == 0) throw ValidationError("class " + std::to_string(k) + " has no examples");
  if (!(opts.train_fraction > 0.0 && opts.train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const auto n_train = static_cast<std::size_t>(std::floor(opts.train_fraction * static_cast<double>(N)));
  if (n_train == 0 || n_train == N) throw ValidationError("too few examples to split into scorer and bandit parts");

  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> bandit_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(bandit_idx.begin(), bandit_idx.end());
  const Matrix train_x = features.gather_rows(train_idx);
  std::vector<int> train_y;
  for (auto i : train_idx) train_y.push_back(labels[i]);

  ConvertedBandit out;
  out.scorer = std::make_shared<const LinearScorer>(fit_logistic_scorer(train_x, train_y, num_classes, opts));
  out.logging_policy = std::make_shared<const SoftmaxPolicy>(out.scorer, opts.logging_temperature);
  out.eval_policy = std::make_shared<const EpsilonGreedyPolicy>(out.scorer, opts.eval_epsilon);

  const Matrix bandit_x = features.gather_rows(bandit_idx);
  for (auto i : bandit_idx) out.labels.push_back(labels[i]);
  out.data = draw_bandit(bandit_x, out.labels, *out.logging_policy, rng);

  const Matrix pi = policy_rows(*out.eval_policy, bandit_x);
  double v = 0.0;
  for (std::size_t i = 0; i < out.labels.size(); ++i) v += pi(i, static_cast<std::size_t>(out.labels[i]));
  out.true_value = v / static_cast<double>(out.labels.size());
  return out;
}

BanditDataset resample_bandit_actions(const ConvertedBandit& problem, RandomStream& rng) {
  return draw_bandit(problem.data.contexts, problem.labels, *problem.logging_policy, rng);
}

}  // namespace ope
