#include "preauction/selection.hpp"

#include "preauction/auction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace preauction {

bool SelectionResult::contains(std::size_t ad) const
{
  return std::find(selected.begin(), selected.end(), ad) != selected.end();
}

SelectionResult select_by_scores(std::span<const double> scores, std::size_t m,
                                 std::string strategy_name)
{
  SelectionResult r;
  r.selected      = top_k_indices(scores, m);
  r.scores        = std::vector<double>(scores.begin(), scores.end());
  r.strategy_name = std::move(strategy_name);
  return r;
}

SelectionResult select_gdy(std::span<const double> bids, std::span<const double> coarse_ctrs,
                           std::size_t m)
{
  if (bids.size() != coarse_ctrs.size()) {
    throw std::invalid_argument("select_gdy: bids and coarse ctrs differ in length");
  }
  std::vector<double> scores(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) {
    scores[i] = bids[i] * coarse_ctrs[i];
  }
  return select_by_scores(scores, m, "gdy");
}

std::size_t outcome_count(const SimpaInstance &instance, std::span<const std::size_t> ads)
{
  if (instance.joint) {
    return instance.joint->outcomes.size();
  }
  std::size_t count = 1;
  for (std::size_t i : ads) {
    count *= instance.dists.at(i).size();
    if (count > kMaxEnumeratedOutcomes) {
      return kMaxEnumeratedOutcomes + 1;
    }
  }
  return count;
}

void for_each_outcome(const SimpaInstance &instance, std::span<const std::size_t> ads,
                      const std::function<void(std::span<const double>, double)> &visit)
{
  if (outcome_count(instance, ads) > kMaxEnumeratedOutcomes) {
    throw TooLargeError("outcome space exceeds " + std::to_string(kMaxEnumeratedOutcomes) +
                        " joint outcomes; use the Monte Carlo estimator");
  }
  std::vector<double> ctrs(ads.size());
  if (instance.joint) {
    const auto &table = *instance.joint;
    for (std::size_t r = 0; r < table.outcomes.size(); ++r) {
      for (std::size_t j = 0; j < ads.size(); ++j) {
        ctrs[j] = table.outcomes[r][ads[j]];
      }
      visit(ctrs, table.probabilities[r]);
    }
    return;
  }

  // Mixed-radix odometer over the supports of `ads`.
  std::vector<std::size_t> digit(ads.size(), 0);
  for (;;) {
    double prob = 1.0;
    for (std::size_t j = 0; j < ads.size(); ++j) {
      const auto &atom = instance.dists[ads[j]].support()[digit[j]];
      ctrs[j]          = atom.value;
      prob *= atom.probability;
    }
    visit(ctrs, prob);
    std::size_t pos = 0;
    while (pos < ads.size()) {
      if (++digit[pos] < instance.dists[ads[pos]].size()) {
        break;
      }
      digit[pos] = 0;
      ++pos;
    }
    if (pos == ads.size()) {
      return;
    }
  }
}

namespace {

std::vector<std::size_t> all_ads(std::size_t n)
{
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

PasScores pas_exact(const SimpaInstance &instance)
{
  instance.validate();
  const std::size_t   n   = instance.size();
  const auto          ads = all_ads(n);
  PasScores           out{std::vector<double>(n, 0.0)};
  std::vector<double> scores(n);
  for_each_outcome(instance, ads, [&](std::span<const double> ctrs, double prob) {
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = instance.bids[i] * ctrs[i];
    }
    for (std::size_t i : top_k_indices(scores, instance.k)) {
      out.probs[i] += prob;
    }
  });
  for (auto &p : out.probs) {
    p = std::clamp(p, 0.0, 1.0);
  }
  return out;
}

PasScores pas_monte_carlo(const SimpaInstance &instance, std::size_t n_samples, Rng &rng)
{
  if (n_samples == 0) {
    throw std::invalid_argument("pas_monte_carlo: n_samples must be positive");
  }
  instance.validate();
  const std::size_t        n = instance.size();
  std::vector<std::size_t> hits(n, 0);
  std::vector<double>      scores(n);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const auto ctrs = sample_joint(instance, rng);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = instance.bids[i] * ctrs[i];
    }
    for (std::size_t i : top_k_indices(scores, instance.k)) {
      ++hits[i];
    }
  }
  PasScores out{std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    out.probs[i] = static_cast<double>(hits[i]) / static_cast<double>(n_samples);
  }
  return out;
}

ObjectiveValue simpa_objective(std::span<const std::size_t> subset, const SimpaInstance &instance,
                               std::size_t fallback_samples, std::uint64_t fallback_seed)
{
  for (std::size_t i : subset) {
    if (i >= instance.size()) {
      throw std::invalid_argument("simpa_objective: ad index out of range");
    }
  }
  if (subset.empty()) {
    return {};
  }
  std::vector<double> values(subset.size());
  if (outcome_count(instance, subset) <= kMaxEnumeratedOutcomes) {
    double total = 0.0;
    for_each_outcome(instance, subset, [&](std::span<const double> ctrs, double prob) {
      for (std::size_t j = 0; j < subset.size(); ++j) {
        values[j] = instance.bids[subset[j]] * ctrs[j];
      }
      total += prob * sum_top_k(values, instance.k);
    });
    return {total, 0.0, true};
  }

  if (fallback_samples < 2) {
    throw std::invalid_argument("simpa_objective: Monte Carlo fallback needs >= 2 samples");
  }
  Rng    rng(fallback_seed);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < fallback_samples; ++s) {
    const auto ctrs = sample_joint(instance, rng);
    for (std::size_t j = 0; j < subset.size(); ++j) {
      values[j] = instance.bids[subset[j]] * ctrs[subset[j]];
    }
    const double v = sum_top_k(values, instance.k);
    sum += v;
    sum_sq += v * v;
  }
  const double n    = static_cast<double>(fallback_samples);
  const double mean = sum / n;
  const double var  = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), false};
}

SubsetValue brute_force_optimal_subset(const SimpaInstance &instance)
{
  instance.validate();
  const std::size_t n = instance.size();
  const std::size_t m = std::min(instance.m, n);
  if (m == 0) {
    return {};
  }

  // C(n, m) with early saturation.
  double count = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    count = count * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  if (count > static_cast<double>(kMaxEnumeratedSubsets)) {
    throw TooLargeError("brute force: C(N, M) exceeds " + std::to_string(kMaxEnumeratedSubsets));
  }

  SubsetValue              best;
  best.objective = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> subset(m);
  std::iota(subset.begin(), subset.end(), std::size_t{0});
  for (;;) {
    const auto v = simpa_objective(subset, instance);
    if (!v.exact) {
      throw TooLargeError("brute force: subset outcome space too large for exact evaluation");
    }
    if (v.value > best.objective) {
      best.objective = v.value;
      best.subset    = subset;
    }
    // Next combination in lexicographic order.
    std::size_t i = m;
    while (i > 0 && subset[i - 1] == n - m + (i - 1)) {
      --i;
    }
    if (i == 0) {
      break;
    }
    ++subset[i - 1];
    for (std::size_t j = i; j < m; ++j) {
      subset[j] = subset[j - 1] + 1;
    }
  }
  return best;
}

namespace {

/// SimPA objective evaluator shared by the greedy steps: exact enumeration or
/// a fixed realization panel.
class GreedyObjective
{
public:
  GreedyObjective(const SimpaInstance &instance, std::size_t panel_samples,
                  std::uint64_t panel_seed)
    : instance_(instance)
  {
    // Largest outcome space the greedy can meet: the M ads with most atoms.
    std::vector<std::size_t> by_support = all_ads(instance.size());
    if (!instance.joint) {
      std::sort(by_support.begin(), by_support.end(), [&](std::size_t a, std::size_t b) {
        return instance.dists[a].size() > instance.dists[b].size();
      });
    }
    by_support.resize(std::min(instance.m, instance.size()));
    exact_ = outcome_count(instance, by_support) <= kMaxEnumeratedOutcomes;
    if (!exact_) {
      Rng rng(panel_seed);
      panel_.reserve(panel_samples);
      for (std::size_t s = 0; s < panel_samples; ++s) {
        auto ctrs = sample_joint(instance, rng);
        for (std::size_t i = 0; i < ctrs.size(); ++i) {
          ctrs[i] *= instance.bids[i];
        }
        panel_.push_back(std::move(ctrs));
      }
    }
  }

  double value(std::span<const std::size_t> subset) const
  {
    if (exact_) {
      return simpa_objective(subset, instance_).value;
    }
    if (subset.empty()) {
      return 0.0;
    }
    std::vector<double> values(subset.size());
    double              total = 0.0;
    for (const auto &row : panel_) {
      for (std::size_t j = 0; j < subset.size(); ++j) {
        values[j] = row[subset[j]];
      }
      total += sum_top_k(values, instance_.k);
    }
    return total / static_cast<double>(panel_.size());
  }

private:
  const SimpaInstance             &instance_;
  bool                             exact_{true};
  std::vector<std::vector<double>> panel_;
};

struct Candidate
{
  double      bound;
  std::size_t ad;
  std::size_t round;  // selection round in which `bound` was computed
};

struct CandidateOrder
{
  bool operator()(const Candidate &a, const Candidate &b) const
  {
    // priority_queue pops the "largest": highest bound, then smallest index.
    return a.bound < b.bound || (a.bound == b.bound && a.ad > b.ad);
  }
};

}  // namespace

SubsetValue lazy_greedy_subset(const SimpaInstance &instance, std::size_t panel_samples,
                               std::uint64_t panel_seed)
{
  instance.validate();
  const std::size_t n = instance.size();
  const std::size_t m = std::min(instance.m, n);
  if (panel_samples == 0) {
    throw std::invalid_argument("lazy_greedy_subset: panel_samples must be positive");
  }
  GreedyObjective objective(instance, panel_samples, panel_seed);

  std::priority_queue<Candidate, std::vector<Candidate>, CandidateOrder> queue;
  constexpr std::size_t kStale = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < n; ++i) {
    queue.push({std::numeric_limits<double>::infinity(), i, kStale});
  }

  SubsetValue result;
  double      current = 0.0;
  for (std::size_t round = 0; round < m; ++round) {
    for (;;) {
      Candidate top = queue.top();
      queue.pop();
      if (top.round == round) {
        result.subset.push_back(top.ad);
        current += top.bound;
        break;
      }
      // Submodularity: a stale gain upper-bounds the fresh one.
      result.subset.push_back(top.ad);
      const double gain = objective.value(result.subset) - current;
      result.subset.pop_back();
      queue.push({gain, top.ad, round});
    }
  }
  result.objective = objective.value(result.subset);
  return result;
}

double expected_recall(std::span<const std::size_t> subset, const SimpaInstance &instance)
{
  instance.validate();
  const std::size_t n = instance.size();
  std::vector<bool> member(n, false);
  for (std::size_t i : subset) {
    member.at(i) = true;
  }
  const auto          ads = all_ads(n);
  std::vector<double> scores(n);
  double              total = 0.0;
  for_each_outcome(instance, ads, [&](std::span<const double> ctrs, double prob) {
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = instance.bids[i] * ctrs[i];
    }
    std::size_t hits = 0;
    for (std::size_t i : top_k_indices(scores, instance.k)) {
      hits += member[i] ? 1 : 0;
    }
    total += prob * static_cast<double>(hits);
  });
  return total;
}

}  // namespace preauction
