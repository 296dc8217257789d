#pragma once

#include "preauction/ctr_env.hpp"
#include "preauction/rng.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace preauction {

/// Outcome spaces above this size are refused by the exact routines.
inline constexpr std::size_t kMaxEnumeratedOutcomes = 1'000'000;
/// Subset counts above this size are refused by the brute-force oracle.
inline constexpr std::size_t kMaxEnumeratedSubsets = 100'000;

/// Raised when exhaustive enumeration would exceed its budget.
class TooLargeError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A pre-auction allocation: the top-M ads in rank order plus the ad-wise
/// scores behind it (indicator scores for set-wise strategies).
struct SelectionResult
{
  std::vector<std::size_t> selected;
  std::vector<double>      scores;
  std::string              strategy_name;

  bool contains(std::size_t ad) const;
};

/// Probability of each ad being among the final top K.
struct PasScores
{
  std::vector<double> probs;
};

struct SubsetValue
{
  std::vector<std::size_t> subset;
  double                   objective{0.0};
};

/// Value of the SimPA objective, with its Monte Carlo standard error when the
/// exact outcome space was too large to enumerate.
struct ObjectiveValue
{
  double value{0.0};
  double std_error{0.0};
  bool   exact{true};
};

/// Top-M by `scores`, ties by index.
SelectionResult select_by_scores(std::span<const double> scores, std::size_t m,
                                 std::string strategy_name = "scores");

/// Greedy pre-auction: top-M by bid * coarse ctr.
SelectionResult select_gdy(std::span<const double> bids, std::span<const double> coarse_ctrs,
                           std::size_t m);

/// Number of joint outcomes restricted to `ads` (table rows in joint mode).
/// Saturates at kMaxEnumeratedOutcomes + 1.
std::size_t outcome_count(const SimpaInstance &instance, std::span<const std::size_t> ads);

/// Calls visit(ctrs, probability) for every joint outcome restricted to
/// `ads`; ctrs[j] is the ctr of ads[j]. Throws TooLargeError past the budget.
void for_each_outcome(const SimpaInstance &instance, std::span<const std::size_t> ads,
                      const std::function<void(std::span<const double>, double)> &visit);

/// Exact Pr[i in top-K of all N] by outcome enumeration.
PasScores pas_exact(const SimpaInstance &instance);

/// Empirical top-K frequencies over n_samples realizations.
PasScores pas_monte_carlo(const SimpaInstance &instance, std::size_t n_samples, Rng &rng);

/// E[SumTopK({b_i ctr_i : i in subset}, K)]. Exact when the subset's outcome
/// space fits the budget, otherwise a Monte Carlo estimate with
/// `fallback_samples` draws seeded by `fallback_seed`.
ObjectiveValue simpa_objective(std::span<const std::size_t> subset, const SimpaInstance &instance,
                               std::size_t fallback_samples = 20000,
                               std::uint64_t fallback_seed = 0);

/// Exhaustive maximizer over all size-min(M, N) subsets, ties by the
/// lexicographically smallest subset. Requires exact objectives.
SubsetValue brute_force_optimal_subset(const SimpaInstance &instance);

/// Greedy marginal-gain selection with lazy re-evaluation. Uses exact
/// objectives when every candidate set fits the enumeration budget, else a
/// fixed panel of `panel_samples` realizations (common random numbers).
SubsetValue lazy_greedy_subset(const SimpaInstance &instance, std::size_t panel_samples = 4000,
                               std::uint64_t panel_seed = 0);

/// E[|subset intersect A_N^K|] by outcome enumeration.
double expected_recall(std::span<const std::size_t> subset, const SimpaInstance &instance);

}  // namespace preauction
