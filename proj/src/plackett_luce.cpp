#include "preauction/plackett_luce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace preauction {

namespace {

void check_weights(std::span<const double> y)
{
  if (y.empty()) {
    throw std::invalid_argument("plackett-luce: empty weight vector");
  }
  for (double v : y) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("plackett-luce: weights must be positive and finite");
    }
  }
}

}  // namespace

double pl_permutation_prob(std::span<const std::size_t> perm, std::span<const double> y)
{
  check_weights(y);
  if (perm.size() != y.size()) {
    throw std::invalid_argument("plackett-luce: permutation length differs from N");
  }
  std::vector<bool> seen(y.size(), false);
  for (std::size_t p : perm) {
    if (p >= y.size() || seen[p]) {
      throw std::invalid_argument("plackett-luce: not a permutation");
    }
    seen[p] = true;
  }
  // Suffix sums, accumulated from the bottom rank up.
  double tail = 0.0;
  double prob = 1.0;
  for (std::size_t r = perm.size(); r-- > 0;) {
    tail += y[perm[r]];
    prob *= y[perm[r]] / tail;
  }
  return prob;
}

std::vector<double> pl_top1(std::span<const double> y)
{
  check_weights(y);
  const double        total = std::accumulate(y.begin(), y.end(), 0.0);
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = y[i] / total;
  }
  return out;
}

std::vector<double> pl_prob_in_topk(std::span<const double> y, std::size_t k)
{
  check_weights(y);
  if (y.size() > kMaxPlackettLuceItems) {
    throw std::invalid_argument("pl_prob_in_topk: N = " + std::to_string(y.size()) +
                                " exceeds the enumeration limit of " +
                                std::to_string(kMaxPlackettLuceItems));
  }
  if (k == 0) {
    throw std::invalid_argument("pl_prob_in_topk: k must be positive");
  }
  if (k == 1) {
    return pl_top1(y);
  }
  const std::size_t        n = y.size();
  std::vector<double>      out(n, 0.0);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  do {
    const double p = pl_permutation_prob(perm, y);
    for (std::size_t r = 0; r < std::min(k, n); ++r) {
      out[perm[r]] += p;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace preauction
