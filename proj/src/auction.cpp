#include "preauction/auction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace preauction {

std::vector<double> AuctionInstance::bids() const
{
  std::vector<double> out;
  out.reserve(ads.size());
  for (const auto &ad : ads) {
    out.push_back(ad.bid);
  }
  return out;
}

std::vector<double> AuctionInstance::coarse_ctrs() const
{
  std::vector<double> out;
  out.reserve(ads.size());
  for (const auto &ad : ads) {
    out.push_back(ad.coarse_ctr);
  }
  return out;
}

const CtrDistribution &AuctionInstance::distribution(std::size_t ad_index) const
{
  const auto &handle = ads.at(ad_index).ctr_dist_id;
  if (!handle || *handle >= ctr_table.size()) {
    throw std::invalid_argument("auction " + std::to_string(auction_id) + ": ad " +
                                std::to_string(ads[ad_index].ad_id) +
                                " has no ctr distribution");
  }
  return ctr_table[*handle];
}

std::vector<double> AuctionInstance::expected_ctrs() const
{
  std::vector<double> out;
  out.reserve(ads.size());
  for (std::size_t i = 0; i < ads.size(); ++i) {
    out.push_back(distribution(i).mean());
  }
  return out;
}

void AuctionInstance::validate() const
{
  const std::string where = "auction " + std::to_string(auction_id) + ": ";
  if (n_slots == 0) {
    throw std::invalid_argument(where + "K must be positive");
  }
  if (n_slots > subset_size) {
    throw std::invalid_argument(where + "K > M");
  }
  if (subset_size > ads.size()) {
    throw std::invalid_argument(where + "M > N");
  }
  std::set<std::int64_t> ids;
  for (const auto &ad : ads) {
    if (!ids.insert(ad.ad_id).second) {
      throw std::invalid_argument(where + "duplicate ad_id " + std::to_string(ad.ad_id));
    }
    if (!(ad.bid >= 0.0) || !std::isfinite(ad.bid)) {
      throw std::invalid_argument(where + "invalid bid for ad " + std::to_string(ad.ad_id));
    }
    if (!std::isfinite(ad.coarse_ctr) || ad.coarse_ctr < 0.0 || ad.coarse_ctr > 1.0) {
      throw std::invalid_argument(where + "invalid coarse_ctr for ad " + std::to_string(ad.ad_id));
    }
    if (ad.ctr_dist_id && *ad.ctr_dist_id >= ctr_table.size()) {
      throw std::invalid_argument(where + "unresolved ctr_dist_id for ad " +
                                  std::to_string(ad.ad_id));
    }
    if (ad.refined_ctr && !(*ad.refined_ctr >= 0.0 && *ad.refined_ctr <= 1.0)) {
      throw std::invalid_argument(where + "invalid refined_ctr for ad " + std::to_string(ad.ad_id));
    }
    for (double f : ad.partial_features) {
      if (!std::isfinite(f)) {
        throw std::invalid_argument(where + "non-finite feature for ad " +
                                    std::to_string(ad.ad_id));
      }
    }
  }
  for (double f : user_features) {
    if (!std::isfinite(f)) {
      throw std::invalid_argument(where + "non-finite user feature");
    }
  }
}

double sum_top_k(std::span<const double> values, std::size_t k)
{
  if (k == 0) {
    throw std::invalid_argument("sum_top_k: k must be positive");
  }
  if (values.size() <= k) {
    return std::accumulate(values.begin(), values.end(), 0.0);
  }
  std::vector<double> v(values.begin(), values.end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(),
                   std::greater<>{});
  std::sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), std::greater<>{});
  return std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
}

namespace {

void reject_nan(std::span<const double> scores)
{
  for (double s : scores) {
    if (std::isnan(s)) {
      throw std::invalid_argument("rank_by_score: NaN score");
    }
  }
}

}  // namespace

std::vector<std::size_t> rank_by_score(std::span<const double> scores)
{
  reject_nan(scores);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  return order;
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k)
{
  reject_nan(scores);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto before = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    before);
  order.resize(take);
  return order;
}

namespace {

void check_auction_inputs(std::span<const double> bids, std::span<const double> ctrs,
                          std::size_t k)
{
  if (k == 0) {
    throw std::invalid_argument("gsp: k must be positive");
  }
  if (bids.size() != ctrs.size() || bids.empty()) {
    throw std::invalid_argument("gsp: bids and ctrs must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (!(bids[i] >= 0.0) || !std::isfinite(bids[i])) {
      throw std::invalid_argument("gsp: bid must be finite and nonnegative");
    }
    if (!(ctrs[i] >= 0.0 && ctrs[i] <= 1.0)) {
      throw std::invalid_argument("gsp: ctr outside [0, 1]");
    }
  }
}

std::vector<double> click_values(std::span<const double> bids, std::span<const double> ctrs)
{
  std::vector<double> out(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) {
    out[i] = bids[i] * ctrs[i];
  }
  return out;
}

}  // namespace

AuctionOutcome gsp_run(std::span<const double> bids, std::span<const double> ctrs, std::size_t k)
{
  check_auction_inputs(bids, ctrs, k);
  const auto scores = click_values(bids, ctrs);
  const auto order  = top_k_indices(scores, k + 1);

  AuctionOutcome out;
  out.n_slots            = k;
  const std::size_t used = std::min(k, order.size());
  for (std::size_t j = 0; j < used; ++j) {
    const std::size_t winner = order[j];
    double            price  = 0.0;
    if (j + 1 < order.size()) {
      const double runner_up = scores[order[j + 1]];
      // A zero-ctr winner can only be followed by a zero-score runner-up.
      price = runner_up > 0.0 ? runner_up / ctrs[winner] : 0.0;
      out.expected_revenue += runner_up;
    }
    out.allocation.push_back(winner);
    out.payments_per_click.push_back(price);
  }
  return out;
}

double expected_social_welfare(std::span<const double> bids, std::span<const double> ctrs,
                               std::size_t k)
{
  check_auction_inputs(bids, ctrs, k);
  const auto scores = click_values(bids, ctrs);
  return sum_top_k(scores, k);
}

double gsp_revenue(std::span<const double> click_values, std::size_t k)
{
  if (k == 0) {
    throw std::invalid_argument("gsp_revenue: k must be positive");
  }
  const auto order = top_k_indices(click_values, k + 1);
  double     rev   = 0.0;
  for (std::size_t j = 1; j < order.size(); ++j) {
    rev += click_values[order[j]];
  }
  return rev;
}

MetricsReport compute_metrics(std::span<const std::size_t> selected, std::span<const double> bids,
                              std::span<const double> realized_ctrs, std::size_t k)
{
  if (k == 0) {
    throw std::invalid_argument("compute_metrics: k must be positive");
  }
  if (bids.size() != realized_ctrs.size()) {
    throw std::invalid_argument("compute_metrics: bids and ctrs differ in length");
  }
  if (selected.empty()) {
    throw std::invalid_argument("compute_metrics: empty selection");
  }
  const auto          all = click_values(bids, realized_ctrs);
  std::vector<double> sub;
  sub.reserve(selected.size());
  std::vector<bool> seen(all.size(), false);
  for (std::size_t i : selected) {
    if (i >= all.size()) {
      throw std::invalid_argument("compute_metrics: selected index out of range");
    }
    if (seen[i]) {
      throw std::invalid_argument("compute_metrics: repeated selected index");
    }
    seen[i] = true;
    sub.push_back(all[i]);
  }

  MetricsReport report;
  report.k = k;

  const double best = sum_top_k(all, k);
  const double got  = sum_top_k(sub, k);
  if (best == 0.0) {
    if (got != 0.0) {
      throw std::runtime_error("compute_metrics: degenerate instance with zero optimal welfare");
    }
    report.swr = 1.0;
  } else {
    report.swr = got / best;
  }

  // Top-K of the selected set uses the same global index tie-break as the
  // full ranking, so rank the subset by (score, original index).
  std::vector<std::size_t> sel_sorted(selected.begin(), selected.end());
  std::sort(sel_sorted.begin(), sel_sorted.end(), [&](std::size_t a, std::size_t b) {
    return all[a] > all[b] || (all[a] == all[b] && a < b);
  });
  const auto        global_top = top_k_indices(all, k);
  std::vector<bool> in_global(all.size(), false);
  for (std::size_t i : global_top) {
    in_global[i] = true;
  }
  std::size_t hits = 0;
  for (std::size_t j = 0; j < std::min(k, sel_sorted.size()); ++j) {
    hits += in_global[sel_sorted[j]] ? 1 : 0;
  }
  report.recall = static_cast<double>(hits) / static_cast<double>(k);

  const double rev_all = gsp_revenue(all, k);
  const double rev_sub = gsp_revenue(sub, k);
  report.revr          = rev_all == 0.0 ? (rev_sub == 0.0 ? 1.0 : 0.0) : rev_sub / rev_all;
  return report;
}

MetricsReport compute_metrics(std::span<const std::size_t> selected,
                              const AuctionInstance &instance,
                              std::span<const double> realized_ctrs, std::size_t k)
{
  const auto bids = instance.bids();
  return compute_metrics(selected, bids, realized_ctrs, k);
}

}  // namespace preauction
