#include "preauction/verify.hpp"

#include "preauction/auction.hpp"
#include "preauction/ic_test.hpp"
#include "preauction/plackett_luce.hpp"
#include "preauction/selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace preauction {

namespace {

// The helpers below deliberately avoid the library's enumeration and ranking
// code so that the suite compares two separate implementations.

using Visit = std::function<void(const std::vector<double> &, double)>;

void enumerate(const SimpaInstance &inst, const Visit &visit)
{
  if (inst.joint) {
    for (std::size_t r = 0; r < inst.joint->outcomes.size(); ++r) {
      visit(inst.joint->outcomes[r], inst.joint->probabilities[r]);
    }
    return;
  }
  std::vector<double>                       ctrs(inst.size());
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double p) {
    if (i == inst.size()) {
      visit(ctrs, p);
      return;
    }
    for (const auto &atom : inst.dists[i].support()) {
      ctrs[i] = atom.value;
      rec(i + 1, p * atom.probability);
    }
  };
  rec(0, 1.0);
}

/// Members of the top k by bid * ctr, ties to the lower index.
std::vector<bool> top_set(const SimpaInstance &inst, const std::vector<double> &ctrs,
                          std::size_t k)
{
  const std::size_t n = inst.size();
  std::vector<bool> in(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t better = 0;
    const double si    = inst.bids[i] * ctrs[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double sj = inst.bids[j] * ctrs[j];
      if (sj > si || (sj == si && j < i)) {
        ++better;
      }
    }
    in[i] = better < k;
  }
  return in;
}

double objective(const SimpaInstance &inst, const std::vector<std::size_t> &subset)
{
  double total = 0.0;
  enumerate(inst, [&](const std::vector<double> &ctrs, double p) {
    std::vector<double> v;
    for (std::size_t i : subset) {
      v.push_back(inst.bids[i] * ctrs[i]);
    }
    std::sort(v.rbegin(), v.rend());
    double s = 0.0;
    for (std::size_t j = 0; j < std::min(inst.k, v.size()); ++j) {
      s += v[j];
    }
    total += p * s;
  });
  return total;
}

double recall(const SimpaInstance &inst, const std::vector<std::size_t> &subset)
{
  double total = 0.0;
  enumerate(inst, [&](const std::vector<double> &ctrs, double p) {
    const auto in = top_set(inst, ctrs, inst.k);
    double     c  = 0.0;
    for (std::size_t i : subset) {
      c += in[i] ? 1.0 : 0.0;
    }
    total += p * c;
  });
  return total;
}

std::vector<std::vector<std::size_t>> subsets_of_size(std::size_t n, std::size_t m)
{
  std::vector<std::vector<std::size_t>> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != m) {
      continue;
    }
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        s.push_back(i);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::size_t> mask_members(std::uint32_t mask, std::size_t n)
{
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask & (1u << i)) {
      s.push_back(i);
    }
  }
  return s;
}

std::size_t pick(Rng &rng, std::size_t lo, std::size_t hi)
{
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

CheckResult check_recall_optimality(Rng &rng)
{
  CheckResult r{"pas-recall-optimality", true, ""};
  for (int t = 0; t < 50 && r.passed; ++t) {
    const std::size_t n    = pick(rng, 2, 7);
    const std::size_t m    = pick(rng, 1, std::min<std::size_t>(4, n));
    const std::size_t k    = pick(rng, 1, std::min<std::size_t>(2, m));
    const auto        inst = random_simpa_instance(rng, n, m, k, 3);
    const auto        pas  = pas_exact(inst);
    const auto        sel  = select_by_scores(pas.probs, m).selected;
    double            best = 0.0;
    for (const auto &s : subsets_of_size(n, m)) {
      best = std::max(best, recall(inst, s));
    }
    if (std::abs(recall(inst, sel) - best) > 1e-12) {
      r.passed = false;
      r.detail = "instance " + std::to_string(t) + ": pas top-M recall below the maximum";
    }
  }
  return r;
}

CheckResult check_recall_identity(Rng &rng)
{
  CheckResult r{"expected-recall-identity", true, ""};
  for (int t = 0; t < 50 && r.passed; ++t) {
    const std::size_t n    = pick(rng, 2, 7);
    const std::size_t k    = pick(rng, 1, std::min<std::size_t>(2, n));
    const auto        inst = random_simpa_instance(rng, n, n, k, 3);
    const auto        pas  = pas_exact(inst);
    const auto        s    = mask_members(static_cast<std::uint32_t>(rng.below(1u << n)), n);
    double            sum  = 0.0;
    for (std::size_t i : s) {
      sum += pas.probs[i];
    }
    if (std::abs(recall(inst, s) - sum) > 1e-12 || std::abs(expected_recall(s, inst) - sum) > 1e-12) {
      r.passed = false;
      r.detail = "instance " + std::to_string(t) + ": recall differs from summed PAS";
    }
  }
  return r;
}

CheckResult check_submodularity(Rng &rng)
{
  CheckResult r{"submodularity-and-greedy", true, ""};
  const double bound = 1.0 - 1.0 / std::numbers::e;
  for (int t = 0; t < 30 && r.passed; ++t) {
    const std::size_t   n    = pick(rng, 2, 5);
    const std::size_t   m    = pick(rng, 1, n);
    const std::size_t   k    = pick(rng, 1, m);
    const auto          inst = random_simpa_instance(rng, n, m, k, 3);
    std::vector<double> f(1u << n);
    for (std::uint32_t mask = 0; mask < f.size(); ++mask) {
      f[mask] = objective(inst, mask_members(mask, n));
    }
    for (std::uint32_t s = 0; s < f.size() && r.passed; ++s) {
      for (std::uint32_t tt = s; tt < f.size() && r.passed; ++tt) {
        if ((s & tt) != s) {
          continue;
        }
        if (f[s] > f[tt] + 1e-9) {
          r.passed = false;
          r.detail = "monotonicity violated";
        }
        for (std::size_t j = 0; j < n && r.passed; ++j) {
          const std::uint32_t bit = 1u << j;
          if (tt & bit) {
            continue;
          }
          if (f[s | bit] - f[s] < f[tt | bit] - f[tt] - 1e-9) {
            r.passed = false;
            r.detail = "diminishing returns violated";
          }
        }
      }
    }
    double opt = 0.0;
    for (const auto &s : subsets_of_size(n, m)) {
      opt = std::max(opt, objective(inst, s));
    }
    const auto greedy = lazy_greedy_subset(inst);
    const auto brute  = brute_force_optimal_subset(inst);
    if (greedy.objective < bound * opt - 1e-12 || std::abs(brute.objective - opt) > 1e-12) {
      r.passed = false;
      r.detail = "instance " + std::to_string(t) + ": greedy bound or brute-force optimum failed";
    }
  }
  return r;
}

CheckResult check_set_cover(Rng &rng)
{
  CheckResult r{"set-cover-reduction", true, ""};
  for (int t = 0; t < 40 && r.passed; ++t) {
    const std::size_t                  l = pick(rng, 1, 4);
    const std::size_t                  n = pick(rng, 1, 4);
    const std::size_t                  m = pick(rng, 1, n);
    std::vector<std::set<std::size_t>> sets(n);
    for (auto &s : sets) {
      while (s.empty()) {
        for (std::size_t e = 1; e <= l; ++e) {
          if (rng.uniform() < 0.4) {
            s.insert(e);
          }
        }
      }
    }
    bool cover = false;
    for (const auto &choice : subsets_of_size(n, m)) {
      std::set<std::size_t> u;
      for (std::size_t i : choice) {
        u.insert(sets[i].begin(), sets[i].end());
      }
      cover = cover || u.size() == l;
    }
    const auto inst = set_cover_to_simpa(l, sets, m);
    double     opt  = 0.0;
    for (const auto &s : subsets_of_size(n, m)) {
      opt = std::max(opt, objective(inst, s));
    }
    if ((std::abs(opt - 1.0) <= 1e-12) != cover) {
      r.passed = false;
      r.detail = "instance " + std::to_string(t) + ": optimum 1 does not match cover existence";
    }
  }
  return r;
}

CheckResult check_plackett_luce()
{
  CheckResult      r{"plackett-luce", true, ""};
  const double     y[] = {3.0, 2.0, 1.0};
  const auto       p   = pl_prob_in_topk(y, 2);
  const double     want[] = {51.0 / 60.0, 44.0 / 60.0, 25.0 / 60.0};
  for (std::size_t i = 0; i < 3; ++i) {
    if (std::abs(p[i] - want[i]) > 1e-12) {
      r.passed = false;
      r.detail = "top-2 probabilities of (3, 2, 1) differ from 51/60, 44/60, 25/60";
    }
  }
  std::vector<std::size_t> perm{0, 1, 2};
  double                   total = 0.0;
  do {
    total += pl_permutation_prob(perm, y);
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (std::abs(total - 1.0) > 1e-12) {
    r.passed = false;
    r.detail = "permutation probabilities do not sum to 1";
  }
  return r;
}

CheckResult check_gsp(Rng &rng)
{
  CheckResult r{"gsp-conditions", true, ""};
  for (int t = 0; t < 1000 && r.passed; ++t) {
    const std::size_t   n = pick(rng, 1, 8);
    const std::size_t   k = pick(rng, 1, 4);
    std::vector<double> bids(n), ctrs(n);
    for (std::size_t i = 0; i < n; ++i) {
      bids[i] = rng.uniform(0.0, 2.0);
      ctrs[i] = rng.uniform();
    }
    if (!verify_gsp_conditions(gsp_run(bids, ctrs, k), bids, ctrs)) {
      r.passed = false;
      r.detail = "fuzz case " + std::to_string(t) + " failed";
    }
  }
  return r;
}

CheckResult check_gdy_at_m_equals_k(Rng &rng)
{
  CheckResult r{"gdy-optimal-when-m-equals-k", true, ""};
  for (int t = 0; t < 50 && r.passed; ++t) {
    const std::size_t n    = pick(rng, 1, 6);
    const std::size_t m    = pick(rng, 1, n);
    const auto        inst = random_simpa_instance(rng, n, m, m, 3);
    const auto        gdy  = select_gdy(inst.bids, inst.coarse_ctrs(), m).selected;
    double            opt  = 0.0;
    for (const auto &s : subsets_of_size(n, m)) {
      opt = std::max(opt, objective(inst, s));
    }
    if (std::abs(objective(inst, gdy) - opt) > 1e-12) {
      r.passed = false;
      r.detail = "instance " + std::to_string(t) + ": GDY below the optimum";
    }
  }
  return r;
}

CheckResult check_example1()
{
  CheckResult        r{"greedy-gap-instance", true, ""};
  const auto         inst  = generate_example1(Example1Params{});
  const auto         gdy   = select_gdy(inst.bids, inst.coarse_ctrs(), inst.m).selected;
  double             opt   = 0.0;
  for (const auto &s : subsets_of_size(inst.size(), inst.m)) {
    opt = std::max(opt, objective(inst, s));
  }
  const double g = objective(inst, gdy);
  std::ostringstream os;
  os << "gdy " << g << ", optimum " << opt;
  r.detail = os.str();
  r.passed = std::abs(g - 1.0) <= 1e-12 && std::abs(opt - 1.9) <= 1e-12;
  return r;
}

}  // namespace

SimpaInstance random_simpa_instance(Rng &rng, std::size_t n, std::size_t m, std::size_t k,
                                    std::size_t max_support)
{
  SimpaInstance inst;
  inst.m = m;
  inst.k = k;
  for (std::size_t i = 0; i < n; ++i) {
    inst.bids.push_back(rng.uniform(0.5, 1.5));
    const std::size_t   s = 1 + static_cast<std::size_t>(rng.below(max_support));
    std::vector<double> values, weights;
    while (values.size() < s) {
      const double v = rng.uniform(0.01, 0.99);
      if (std::find(values.begin(), values.end(), v) == values.end()) {
        values.push_back(v);
        weights.push_back(rng.uniform(0.1, 1.0));
      }
    }
    inst.dists.push_back(CtrDistribution::from_weighted(values, weights));
  }
  inst.validate();
  return inst;
}

std::vector<CheckResult> run_oracle_suite(std::uint64_t seed)
{
  Rng                      rng(seed);
  std::vector<CheckResult> out;
  Rng                      a = rng.fork(1), b = rng.fork(2), c = rng.fork(3), d = rng.fork(4),
      e = rng.fork(5), f = rng.fork(6);
  out.push_back(check_recall_optimality(a));
  out.push_back(check_recall_identity(b));
  out.push_back(check_submodularity(c));
  out.push_back(check_set_cover(d));
  out.push_back(check_plackett_luce());
  out.push_back(check_gsp(e));
  out.push_back(check_gdy_at_m_equals_k(f));
  out.push_back(check_example1());
  return out;
}

}  // namespace preauction
