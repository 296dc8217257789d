#include "preauction/ctr_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace preauction {

namespace {

constexpr double kProbabilityTolerance = 1e-12;

}  // namespace

CtrDistribution::CtrDistribution(std::vector<CtrAtom> support)
  : support_(std::move(support))
{
  if (support_.empty()) {
    throw std::invalid_argument("ctr distribution: empty support");
  }
  double total = 0.0;
  for (const auto &atom : support_) {
    if (!(atom.value >= 0.0 && atom.value <= 1.0)) {
      throw std::invalid_argument("ctr distribution: value " + std::to_string(atom.value) +
                                  " outside [0, 1]");
    }
    if (!(atom.probability >= 0.0 && atom.probability <= 1.0)) {
      throw std::invalid_argument("ctr distribution: probability " +
                                  std::to_string(atom.probability) + " outside [0, 1]");
    }
    total += atom.probability;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw std::invalid_argument("ctr distribution: probabilities sum to " + std::to_string(total));
  }
  for (std::size_t i = 0; i < support_.size(); ++i) {
    for (std::size_t j = i + 1; j < support_.size(); ++j) {
      if (support_[i].value == support_[j].value) {
        throw std::invalid_argument("ctr distribution: repeated support value");
      }
    }
  }
}

CtrDistribution CtrDistribution::deterministic(double value)
{
  return CtrDistribution({CtrAtom{value, 1.0}});
}

CtrDistribution CtrDistribution::from_weighted(std::span<const double> values,
                                               std::span<const double> weights)
{
  if (values.size() != weights.size() || values.empty()) {
    throw std::invalid_argument("ctr distribution: values and weights must be non-empty and equal");
  }
  std::vector<CtrAtom> atoms;
  double               total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw std::invalid_argument("ctr distribution: negative or non-finite weight");
    }
    total += weights[i];
    auto it = std::find_if(atoms.begin(), atoms.end(),
                           [&](const CtrAtom &a) { return a.value == values[i]; });
    if (it == atoms.end()) {
      atoms.push_back({values[i], weights[i]});
    } else {
      it->probability += weights[i];
    }
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("ctr distribution: weights sum to zero");
  }
  for (auto &atom : atoms) {
    atom.probability /= total;
  }
  std::erase_if(atoms, [](const CtrAtom &a) { return a.probability == 0.0; });
  return CtrDistribution(std::move(atoms));
}

double CtrDistribution::mean() const noexcept
{
  double m = 0.0;
  for (const auto &atom : support_) {
    m += atom.value * atom.probability;
  }
  return m;
}

double CtrDistribution::quantile(double u) const noexcept
{
  double cumulative = 0.0;
  for (const auto &atom : support_) {
    cumulative += atom.probability;
    if (u < cumulative) {
      return atom.value;
    }
  }
  return support_.back().value;
}

}  // namespace preauction
