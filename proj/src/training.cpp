#include "preauction/training.hpp"

#include "preauction/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace preauction {

namespace {

void check_same_size(const Eigen::VectorXd &a, const Eigen::VectorXd &b, const char *what)
{
  if (a.size() != b.size() || a.size() == 0) {
    throw std::invalid_argument(std::string(what) + ": size mismatch or empty input");
  }
}

Eigen::VectorXd softmax(const Eigen::VectorXd &logits)
{
  const double    shift = logits.maxCoeff();
  Eigen::VectorXd e     = (logits.array() - shift).exp();
  return e / e.sum();
}

Eigen::VectorXd top1(const Eigen::VectorXd &y)
{
  for (double v : y) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("listwise loss: labels must be positive and finite");
    }
  }
  return y / y.sum();
}

double swr_of(const Eigen::VectorXd &scores, const Eigen::VectorXd &labels, std::size_t m,
              std::size_t k)
{
  const auto          sel = top_k_indices(std::span(scores.data(), scores.size()), m);
  std::vector<double> picked;
  picked.reserve(sel.size());
  for (std::size_t i : sel) {
    picked.push_back(labels[static_cast<Eigen::Index>(i)]);
  }
  const double best = sum_top_k(std::span(labels.data(), labels.size()), k);
  const double got  = sum_top_k(picked, k);
  return best > 0.0 ? got / best : 1.0;
}

enum class LossKind
{
  listwise,
  mse,
};

struct PreparedSample
{
  const FeatureMatrix *features;
  Eigen::VectorXd      target;
};

FeatureMatrix without_bid(const FeatureMatrix &x)
{
  return x.rightCols(x.cols() - 1);
}

TrainResult train_loop(std::span<const TrainingSample> train,
                       std::span<const TrainingSample> validation, ScorerKind kind,
                       const TrainConfig &config)
{
  config.validate();
  if (train.empty()) {
    throw std::invalid_argument("training: empty dataset");
  }
  const bool drop_bid = kind == ScorerKind::regctr;
  const auto d        = train.front().features.cols();
  for (const auto &s : train) {
    if (s.features.cols() != d || s.features.rows() != s.labels.size() ||
        s.bids.size() != s.labels.size()) {
      throw std::invalid_argument("training: inconsistent sample dimensions");
    }
  }

  // Inputs and targets in the form the loss sees them.
  std::vector<FeatureMatrix> stripped;
  if (drop_bid) {
    stripped.reserve(train.size());
    for (const auto &s : train) {
      stripped.push_back(without_bid(s.features));
    }
  }
  std::vector<PreparedSample> data;
  data.reserve(train.size());
  double scale = 1.0;
  if (kind != ScorerKind::pas) {
    double      total = 0.0;
    std::size_t count = 0;
    for (const auto &s : train) {
      const Eigen::VectorXd t =
          drop_bid ? Eigen::VectorXd(s.labels.array() / s.bids.array().max(kMinLabel)) : s.labels;
      total += t.sum();
      count += static_cast<std::size_t>(t.size());
    }
    scale = total > 0.0 ? total / static_cast<double>(count) : 1.0;
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto &s = train[i];
    PreparedSample p;
    p.features = drop_bid ? &stripped[i] : &s.features;
    if (kind == ScorerKind::pas) {
      p.target = s.labels.cwiseMax(kMinLabel);
    } else if (drop_bid) {
      p.target = (s.labels.array() / s.bids.array().max(kMinLabel)).matrix() / scale;
    } else {
      p.target = s.labels / scale;
    }
    data.push_back(std::move(p));
  }

  ScorerArchitecture arch;
  arch.input_dim      = static_cast<std::size_t>(drop_bid ? d - 1 : d);
  arch.encoder_widths = config.encoder_widths;
  arch.head_widths    = config.head_widths;
  arch.activation     = config.activation;
  arch.bid_input      = !drop_bid;

  Rng  rng(config.seed);
  Rng  init_rng = rng.fork(1);
  Rng  shuffle_rng = rng.fork(2);
  auto params   = ScorerParams::initialize(arch, kind, config.weight_init_scale, init_rng);
  params.output_scale = scale;

  TrainResult result;
  result.params = params;
  double best_val = -1.0;
  std::size_t since_best = 0;

  const std::size_t   n_weights = params.weights.size();
  std::vector<double> grad(n_weights);
  std::vector<double> velocity(n_weights, 0.0);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.n_epochs; ++epoch) {
    // Fisher-Yates with the library's own uniform integer draw.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const auto &s = data[order[b]];
        scorer_backward(params, *s.features,
                        [&](const Eigen::VectorXd &f) {
                          if (kind == ScorerKind::pas) {
                            batch_loss += listwise_loss(f, s.target);
                            return listwise_loss_grad(f, s.target);
                          }
                          batch_loss += mse_loss(f, s.target);
                          return mse_loss_grad(f, s.target);
                        },
                        grad);
      }
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("training diverged: non-finite loss in epoch " +
                                 std::to_string(epoch + 1) + " (learning rate " +
                                 std::to_string(config.learning_rate) + ")");
      }
      epoch_loss += batch_loss;
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t w = 0; w < n_weights; ++w) {
        velocity[w] = config.momentum * velocity[w] + grad[w] * inv;
        params.weights[w] -= config.learning_rate * velocity[w];
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(data.size()));

    if (validation.empty()) {
      result.params     = params;
      result.best_epoch = epoch;
      continue;
    }
    const double val = mean_swr(params, validation, config.metric_m, config.metric_k);
    result.val_swr.push_back(val);
    if (val > best_val) {
      best_val          = val;
      result.params     = params;
      result.best_epoch = epoch;
      since_best        = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace

void TrainConfig::validate() const
{
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("train config: learning_rate must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("train config: momentum must lie in [0, 1)");
  }
  if (n_epochs == 0 || batch_size == 0) {
    throw std::invalid_argument("train config: n_epochs and batch_size must be positive");
  }
  if (metric_k == 0 || metric_m < metric_k) {
    throw std::invalid_argument("train config: require 1 <= metric_k <= metric_m");
  }
  if (!(weight_init_scale >= 0.0)) {
    throw std::invalid_argument("train config: weight_init_scale must be >= 0");
  }
}

FeatureMatrix build_features(const AuctionInstance &instance, bool include_bid)
{
  const std::size_t n = instance.size();
  if (n == 0) {
    throw std::invalid_argument("build_features: auction has no ads");
  }
  const std::size_t da   = instance.ads.front().partial_features.size();
  const std::size_t du   = instance.user_features.size();
  const std::size_t off  = include_bid ? 1 : 0;
  FeatureMatrix     x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(off + 1 + da + du));
  for (std::size_t i = 0; i < n; ++i) {
    const auto &ad = instance.ads[i];
    if (ad.partial_features.size() != da) {
      throw std::invalid_argument("build_features: ads disagree on partial feature length");
    }
    const auto r = static_cast<Eigen::Index>(i);
    Eigen::Index c = 0;
    if (include_bid) {
      x(r, c++) = ad.bid;
    }
    x(r, c++) = std::log(std::max(ad.coarse_ctr, 1e-12));
    for (double v : ad.partial_features) {
      x(r, c++) = v;
    }
    for (double v : instance.user_features) {
      x(r, c++) = v;
    }
  }
  return x;
}

TrainingSample make_training_sample(const AuctionInstance &instance,
                                    std::span<const double> refined_ctrs)
{
  if (refined_ctrs.size() != instance.size()) {
    throw std::invalid_argument("make_training_sample: one refined ctr per ad required");
  }
  TrainingSample s;
  s.features = build_features(instance, true);
  s.bids.resize(static_cast<Eigen::Index>(instance.size()));
  s.labels.resize(s.bids.size());
  for (std::size_t i = 0; i < instance.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    s.bids[r]    = instance.ads[i].bid;
    s.labels[r]  = std::max(instance.ads[i].bid * refined_ctrs[i], kMinLabel);
  }
  return s;
}

double listwise_loss(const Eigen::VectorXd &logits, const Eigen::VectorXd &y)
{
  check_same_size(logits, y, "listwise_loss");
  const Eigen::VectorXd py       = top1(y);
  const double          shift    = logits.maxCoeff();
  const double          log_norm = shift + std::log((logits.array() - shift).exp().sum());
  return -(py.array() * (logits.array() - log_norm)).sum();
}

Eigen::VectorXd listwise_loss_grad(const Eigen::VectorXd &logits, const Eigen::VectorXd &y)
{
  check_same_size(logits, y, "listwise_loss_grad");
  return softmax(logits) - top1(y);
}

double mse_loss(const Eigen::VectorXd &pred, const Eigen::VectorXd &target)
{
  check_same_size(pred, target, "mse_loss");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

Eigen::VectorXd mse_loss_grad(const Eigen::VectorXd &pred, const Eigen::VectorXd &target)
{
  check_same_size(pred, target, "mse_loss_grad");
  return 2.0 * (pred - target) / static_cast<double>(pred.size());
}

Eigen::VectorXd selection_scores(const ScorerParams &params, const FeatureMatrix &features_with_bid)
{
  if (params.kind != ScorerKind::regctr) {
    return scorer_forward(params, features_with_bid);
  }
  const Eigen::VectorXd ctr = scorer_forward(params, without_bid(features_with_bid));
  return features_with_bid.col(0).array() * ctr.array().max(0.0);
}

double mean_swr(const ScorerParams &params, std::span<const TrainingSample> samples, std::size_t m,
                std::size_t k)
{
  if (samples.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (const auto &s : samples) {
    total += swr_of(selection_scores(params, s.features), s.labels, m, k);
  }
  return total / static_cast<double>(samples.size());
}

TrainResult train_pas(std::span<const TrainingSample> train, std::span<const TrainingSample> validation,
                      const TrainConfig &config)
{
  return train_loop(train, validation, ScorerKind::pas, config);
}

TrainResult train_regression(std::span<const TrainingSample> train,
                             std::span<const TrainingSample> validation, RegressionTarget target,
                             const TrainConfig &config)
{
  return train_loop(train, validation,
                    target == RegressionTarget::ctr_only ? ScorerKind::regctr : ScorerKind::reg,
                    config);
}

}  // namespace preauction
