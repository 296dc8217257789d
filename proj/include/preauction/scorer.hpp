#pragma once

#include "preauction/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace preauction {

using FeatureMatrix = Eigen::MatrixXd;

enum class ScorerKind
{
  pas,     // listwise logits
  reg,     // regression on bid * ctr
  regctr,  // regression on ctr without the bid input
};

std::string to_string(ScorerKind kind);
ScorerKind  scorer_kind_from_string(const std::string &name);

/// Set-encoding scorer layout.
///
/// Every ad row x_i goes through the encoder MLP (activation after each
/// layer); the encodings are pooled over the ad set with each aggregation
/// ("mean", "max") and concatenated into g. The head MLP maps [x_i, g] to one
/// score per ad, with activations on hidden layers only. Pooling makes the
/// map permutation-equivariant over ads.
///
/// Flat weight order: for each layer (encoder, head hidden, head output) the
/// row-major (out x in) matrix followed by the bias vector.
struct ScorerArchitecture
{
  std::size_t              input_dim{0};
  std::vector<std::size_t> encoder_widths{16, 16};
  std::vector<std::size_t> head_widths{16};
  std::string              activation{"relu"};
  std::vector<std::string> aggregations{"mean", "max"};
  /// Column 0 of the input is the bid.
  bool bid_input{true};

  std::size_t pooled_dim() const;
  std::size_t weight_count() const;
  /// Throws std::invalid_argument on unknown activations/aggregations or
  /// zero widths.
  void validate() const;

  bool operator==(const ScorerArchitecture &) const = default;
};

struct ScorerParams
{
  static constexpr const char *kFormatTag = "preauction-scorer/1";

  std::string         version{kFormatTag};
  ScorerKind          kind{ScorerKind::pas};
  ScorerArchitecture  architecture;
  std::vector<double> weights;
  /// Multiplies the network output (target scale of regression models).
  double output_scale{1.0};

  /// Uniform in [-s, s] with s = init_scale / sqrt(fan_in), biases included.
  static ScorerParams initialize(const ScorerArchitecture &arch, ScorerKind kind,
                                 double init_scale, Rng &rng);
  static ScorerParams zeros(const ScorerArchitecture &arch, ScorerKind kind);

  void validate() const;

  bool operator==(const ScorerParams &) const = default;
};

/// Per-ad scores for an N x d feature matrix.
Eigen::VectorXd scorer_forward(const ScorerParams &params, const FeatureMatrix &features);

/// Output and gradient of sum_i upstream[i] * f_i with respect to the
/// weights (output_scale excluded). `grad` is accumulated into, so callers
/// can sum over a batch.
Eigen::VectorXd scorer_backward(const ScorerParams &params, const FeatureMatrix &features,
                                const std::function<Eigen::VectorXd(const Eigen::VectorXd &)> &upstream,
                                std::span<double> grad);

/// Model file: one JSON header line (format tag, kind, architecture,
/// output scale, weight count) then the weights as little-endian float64.
void save_scorer(const ScorerParams &params, const std::filesystem::path &path);
ScorerParams load_scorer(const std::filesystem::path &path);

}  // namespace preauction
