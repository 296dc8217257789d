#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace preauction {

/// Largest list handled by the exhaustive top-K enumeration (N! permutations).
inline constexpr std::size_t kMaxPlackettLuceItems = 8;

/// Plackett-Luce probability of the ranking `perm` (perm[r] = item at rank r)
/// under positive weights y: prod_r y[perm[r]] / sum_{s >= r} y[perm[s]].
double pl_permutation_prob(std::span<const std::size_t> perm, std::span<const double> y);

/// Top-1 probabilities y_i / sum_k y_k.
std::vector<double> pl_top1(std::span<const double> y);

/// Pr[item i ranked within the first k] by enumerating all N! rankings.
/// Requires N <= kMaxPlackettLuceItems.
std::vector<double> pl_prob_in_topk(std::span<const double> y, std::size_t k);

}  // namespace preauction
