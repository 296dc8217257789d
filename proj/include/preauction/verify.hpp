#pragma once

#include "preauction/ctr_env.hpp"
#include "preauction/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace preauction {

/// Small independent-mode instance: bids U(0.5, 1.5), each ad with 1 to
/// `max_support` distinct ctr values in (0, 1) and random probabilities.
SimpaInstance random_simpa_instance(Rng &rng, std::size_t n, std::size_t m, std::size_t k,
                                    std::size_t max_support);

struct CheckResult
{
  std::string name;
  bool        passed{false};
  std::string detail;
};

/// Small-instance verification suite: every analytic property of the
/// selection layer checked against a separate brute-force enumeration.
std::vector<CheckResult> run_oracle_suite(std::uint64_t seed);

}  // namespace preauction
