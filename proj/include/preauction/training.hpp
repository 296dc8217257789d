#pragma once

#include "preauction/auction.hpp"
#include "preauction/scorer.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace preauction {

/// Smallest label kept by the listwise loss; zero click values are raised to it.
inline constexpr double kMinLabel = 1e-9;

/// One auction prepared for supervised training.
struct TrainingSample
{
  FeatureMatrix   features;  // N x d, bid in column 0
  Eigen::VectorXd labels;    // b_i * refined ctr_i, clamped to >= kMinLabel
  Eigen::VectorXd bids;
};

/// Per-ad input rows [bid, log coarse ctr, partial features..., user
/// features...]. Without the bid the first column is dropped.
FeatureMatrix build_features(const AuctionInstance &instance, bool include_bid = true);

/// Features of `instance` with labels from the given refined ctrs.
TrainingSample make_training_sample(const AuctionInstance &instance,
                                    std::span<const double> refined_ctrs);

/// Cross entropy between the top-1 distribution of y and softmax(logits).
/// Throws std::invalid_argument on nonpositive labels or size mismatch.
double          listwise_loss(const Eigen::VectorXd &logits, const Eigen::VectorXd &y);
Eigen::VectorXd listwise_loss_grad(const Eigen::VectorXd &logits, const Eigen::VectorXd &y);

/// Mean squared error over the ads of one auction, and its gradient.
double          mse_loss(const Eigen::VectorXd &pred, const Eigen::VectorXd &target);
Eigen::VectorXd mse_loss_grad(const Eigen::VectorXd &pred, const Eigen::VectorXd &target);

enum class RegressionTarget
{
  b_times_ctr,  // REG
  ctr_only,     // REGCTR: bid column removed, target is ctr
};

struct TrainConfig
{
  double        learning_rate{0.02};
  double        momentum{0.9};
  std::size_t   n_epochs{15};
  std::size_t   batch_size{32};
  std::uint64_t seed{0};
  double        weight_init_scale{1.0};
  /// Epochs without a validation SWr@K improvement before stopping; 0 never
  /// stops early.
  std::size_t patience{0};
  /// K and M used by the validation SWr@K.
  std::size_t metric_k{5};
  std::size_t metric_m{10};
  std::vector<std::size_t> encoder_widths{16, 16};
  std::vector<std::size_t> head_widths{16};
  std::string              activation{"relu"};

  void validate() const;
};

struct TrainResult
{
  ScorerParams        params;
  std::vector<double> epoch_losses;  // mean training loss per epoch
  std::vector<double> val_swr;       // validation SWr@K after each epoch
  std::size_t         best_epoch{0};
};

/// Score used for pre-auction selection: raw output for PAS and REG,
/// bid * max(output, 0) for REGCTR.
Eigen::VectorXd selection_scores(const ScorerParams &params, const FeatureMatrix &features_with_bid);

/// Mean SWr@K of top-M selection by `params` over labeled samples.
double mean_swr(const ScorerParams &params, std::span<const TrainingSample> samples, std::size_t m,
                std::size_t k);

/// Mini-batch SGD on the listwise loss with seeded shuffling; keeps the
/// parameters of the epoch with the best validation SWr@K (the last epoch
/// when `validation` is empty). Throws std::runtime_error on a non-finite loss.
TrainResult train_pas(std::span<const TrainingSample> train, std::span<const TrainingSample> validation,
                      const TrainConfig &config);

/// Same loop on the MSE against the target scaled by its training mean; the
/// scale is stored in ScorerParams::output_scale.
TrainResult train_regression(std::span<const TrainingSample> train,
                             std::span<const TrainingSample> validation, RegressionTarget target,
                             const TrainConfig &config);

}  // namespace preauction
