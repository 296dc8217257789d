#pragma once

#include "preauction/auction.hpp"
#include "preauction/ctr_distribution.hpp"
#include "preauction/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace preauction {

/// Knobs of the synthetic two-stage environment.
///
/// Each auction draws a user vector u and, per ad, a bid and ad features a_i.
/// The refined estimator's pre-calibration score is
///
///   z_i = base_logit + popularity * a_i[0] + activity * u[0]
///         + cross_strength * <a_i[1..], u[1..]> / sqrt(d - 1)
///
/// and the refined CTR given partial features is a `support_size`-point
/// distribution obtained by jittering z_i by gap_factor * spread(a_i) and
/// applying the negative-down-sampling calibration with rate `eta`.
///
/// The logged coarse CTR is the geometric blend of the distribution mean
/// (weight 1 - light_model_weight) and the output of a light additive model
/// that ignores the cross term and the spread (weight light_model_weight).
/// With light_model_weight = 0 the coarse CTR equals the distribution mean.
struct EnvConfig
{
  std::size_t n_ads{100};
  std::size_t subset_size{10};
  std::size_t n_slots{5};
  std::size_t support_size{2};
  double      bid_low{0.5};
  double      bid_high{1.5};
  double      gap_factor{1.0};
  double      eta{1.0};
  double      light_model_weight{0.0};
  double      base_logit{-1.0};
  double      popularity{0.5};
  double      activity{0.6};
  double      cross_strength{0.6};
  std::size_t n_ad_features{4};
  std::size_t n_user_features{4};
  std::uint64_t seed{0};

  /// Throws std::invalid_argument on K <= M <= N, bid range or support
  /// violations.
  void validate() const;
};

/// Public-1 analog: calibration rate 0.01, wide coarse/refined gap.
EnvConfig public1_like();
/// Public-5 analog: calibration rate 0.05, narrower gap.
EnvConfig public5_like();
/// Resolves "public1-like" / "public5-like"; throws on other names.
EnvConfig preset_config(const std::string &name);

/// Explicit joint distribution over CTR vectors (one row per outcome).
struct JointTable
{
  std::vector<std::vector<double>> outcomes;
  std::vector<double>              probabilities;
};

/// Input of the relaxed pre-auction problem: bids, refined-CTR law, M and K.
/// Either `dists` (independent mode) or `joint` (correlated mode) is used.
struct SimpaInstance
{
  std::vector<double>          bids;
  std::vector<CtrDistribution> dists;
  std::optional<JointTable>    joint;
  std::size_t                  m{1};
  std::size_t                  k{1};

  std::size_t size() const noexcept { return bids.size(); }
  bool        is_joint() const noexcept { return joint.has_value(); }
  /// Per-ad mean CTR (marginal means in joint mode).
  std::vector<double> coarse_ctrs() const;
  void                validate() const;
};

/// E[ctr] of the distribution.
double coarse_ctr(const CtrDistribution &dist);

/// Correction for an estimator trained with negatives down-sampled at rate
/// eta: p / (p + (1 - p) / eta). Requires 0 < p < 1 and 0 < eta <= 1.
double calibrate_downsampled(double p, double eta);

/// One independent refined-CTR draw per distribution.
std::vector<double> sample_realization(std::span<const CtrDistribution> dists, Rng &rng);

/// Realization of a SimPA instance in either mode.
std::vector<double> sample_joint(const SimpaInstance &instance, Rng &rng);

/// Synthetic auction following EnvConfig. Ad features are
/// [a_i..., auxiliary noise]; the ctr table has one distribution per ad.
AuctionInstance generate_auction(const EnvConfig &config, Rng &rng);

/// Builds the SimPA view of an auction (requires every ad to have a
/// distribution).
SimpaInstance to_simpa(const AuctionInstance &instance);

/// Parameters of the adversarial greedy instance. Ads 1..M are deterministic
/// with click values `deterministic_values` (strictly descending); ad M+1 has
/// coarse click value `coarse_value` below the M-th and realizes
/// t * coarse_value w.p. 1/t or `epsilon` otherwise; the remaining ads are
/// deterministic below it.
struct Example1Params
{
  std::size_t         n{3};
  std::size_t         m{2};
  std::size_t         k{1};
  double              t{20.0};
  std::vector<double> deterministic_values;  // empty: 1.0, 0.96, 0.92, ...
  std::optional<double> coarse_value;        // empty: last deterministic - 0.01
  double              epsilon{0.0};
  /// When true, t must satisfy t * coarse_value > value of ad K.
  bool enforce_gap{true};
};

SimpaInstance generate_example1(const Example1Params &params);

/// Appendix reduction: each element set S_i becomes an ad with b_i = 1 that
/// realizes ctr 1 iff S_i meets a uniformly drawn nonempty U' of {1..L}.
/// K = 1. Elements are 1-based. Refuses L > 20.
SimpaInstance set_cover_to_simpa(std::size_t universe_size,
                                 const std::vector<std::set<std::size_t>> &subsets,
                                 std::size_t m);

}  // namespace preauction
