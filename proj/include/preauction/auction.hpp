#pragma once

#include "preauction/ctr_distribution.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace preauction {

/// One advertiser in an auction.
struct AdRecord
{
  std::int64_t        ad_id{0};
  double              bid{0.0};
  std::vector<double> partial_features;
  /// Output of the light pre-auction CTR estimator.
  double coarse_ctr{0.0};
  /// Index into AuctionInstance::ctr_table, when a distribution is known.
  std::optional<std::size_t> ctr_dist_id;
  /// Realized refined CTR, when logged.
  std::optional<double> refined_ctr;

  bool operator==(const AdRecord &) const = default;
};

/// The candidate set of one page view.
struct AuctionInstance
{
  std::int64_t                 auction_id{0};
  std::vector<AdRecord>        ads;
  std::vector<double>          user_features;
  std::size_t                  n_slots{1};      // K
  std::size_t                  subset_size{1};  // M
  std::vector<CtrDistribution> ctr_table;

  std::size_t size() const noexcept { return ads.size(); }

  std::vector<double> bids() const;
  std::vector<double> coarse_ctrs() const;
  /// Mean of each ad's refined-CTR distribution. Throws if any ad lacks one.
  std::vector<double> expected_ctrs() const;
  const CtrDistribution &distribution(std::size_t ad_index) const;

  /// Throws std::invalid_argument when K <= M <= N, unique ad ids, bid >= 0 or
  /// handle resolution is violated.
  void validate() const;

  bool operator==(const AuctionInstance &) const = default;
};

/// Result of the second-stage GSP auction. Slot j (0-based) is the (j+1)-th
/// highest position.
struct AuctionOutcome
{
  std::size_t              n_slots{0};
  std::vector<std::size_t> allocation;          // slot -> ad index
  std::vector<double>      payments_per_click;  // slot -> price
  double                   expected_revenue{0.0};
};

struct MetricsReport
{
  double      swr{0.0};
  double      recall{0.0};
  double      revr{0.0};
  std::size_t k{0};
};

/// Sum of the min(k, |values|) largest values. Throws std::invalid_argument
/// for k == 0.
double sum_top_k(std::span<const double> values, std::size_t k);

/// Indices sorted by descending score, ties by ascending index. Throws on NaN.
std::vector<std::size_t> rank_by_score(std::span<const double> scores);

/// The first min(k, n) entries of rank_by_score, without sorting the tail.
std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k);

/// GSP with critical-price payments: the winner of slot j pays
/// score_(j+1) / ctr_(j), zero when there is no runner-up.
AuctionOutcome gsp_run(std::span<const double> bids, std::span<const double> ctrs, std::size_t k);

/// sum_top_k of the expected click values bid * ctr.
double expected_social_welfare(std::span<const double> bids, std::span<const double> ctrs,
                               std::size_t k);

/// GSP revenue of a candidate set: sum over the first k slots of the
/// runner-up's click value.
double gsp_revenue(std::span<const double> click_values, std::size_t k);

/// SWr@K, Recall@K and REVr@K of `selected` against the full candidate set.
MetricsReport compute_metrics(std::span<const std::size_t> selected, std::span<const double> bids,
                              std::span<const double> realized_ctrs, std::size_t k);

MetricsReport compute_metrics(std::span<const std::size_t> selected,
                              const AuctionInstance &instance,
                              std::span<const double> realized_ctrs, std::size_t k);

}  // namespace preauction
