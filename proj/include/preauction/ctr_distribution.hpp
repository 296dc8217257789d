#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace preauction {

/// One atom of a discrete refined-CTR distribution.
struct CtrAtom
{
  double value;
  double probability;

  bool operator==(const CtrAtom &) const = default;
};

/// Finite-support distribution over refined CTR realizations. Its mean is the
/// conditional expectation of the refined CTR given pre-auction features.
///
/// Construction validates: at least one atom, values in [0, 1] and pairwise
/// distinct, probabilities in [0, 1] summing to 1 within 1e-12.
class CtrDistribution
{
public:
  explicit CtrDistribution(std::vector<CtrAtom> support);

  /// Point mass at `value`.
  static CtrDistribution deterministic(double value);

  /// Builds a distribution from possibly repeated values: equal values are
  /// merged and their probabilities added. Probabilities are renormalized.
  static CtrDistribution from_weighted(std::span<const double> values,
                                       std::span<const double> weights);

  std::span<const CtrAtom> support() const noexcept { return support_; }
  std::size_t              size() const noexcept { return support_.size(); }
  bool                     is_deterministic() const noexcept { return support_.size() == 1; }

  double mean() const noexcept;

  /// Inverse-CDF draw for a uniform `u` in [0, 1). Monotone in `u`, which lets
  /// callers reuse a common panel of uniforms across strategies.
  double quantile(double u) const noexcept;

  bool operator==(const CtrDistribution &) const = default;

private:
  std::vector<CtrAtom> support_;
};

}  // namespace preauction
