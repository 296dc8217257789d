#include "preauction/selection.hpp"

#include "../support/oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace preauction;

namespace {

SimpaInstance two_ad_instance()
{
  SimpaInstance inst;
  inst.bids  = {1.0, 1.0};
  inst.dists = {CtrDistribution::deterministic(0.5), CtrDistribution({{0.9, 0.4}, {0.1, 0.6}})};
  inst.m     = 1;
  inst.k     = 1;
  return inst;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> s)
{
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

TEST(SelectByScores, Examples)
{
  const std::vector<double> s{0.2, 0.9, 0.5, 0.9};
  const auto                r = select_by_scores(s, 2);
  EXPECT_EQ(r.selected, (std::vector<std::size_t>{1, 3}));
  EXPECT_TRUE(r.contains(3));
  EXPECT_FALSE(r.contains(0));
  EXPECT_EQ(select_by_scores(s, 10).selected.size(), 4u);
}

TEST(SelectGdy, UsesBidTimesCoarse)
{
  const std::vector<double> b{3, 2, 1};
  const std::vector<double> c{0.5, 0.4, 0.6};
  const auto                r = select_gdy(b, c, 2);
  EXPECT_EQ(r.selected, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(r.scores[0], 1.5, 1e-15);
  EXPECT_THROW(select_gdy(b, std::vector<double>{0.5}, 1), std::invalid_argument);
}

TEST(PasExact, TwoAdExample)
{
  const auto p = pas_exact(two_ad_instance()).probs;
  EXPECT_NEAR(p[0], 0.6, 1e-15);
  EXPECT_NEAR(p[1], 0.4, 1e-15);
}

TEST(PasExact, AllOnesWhenKCoversEveryAd)
{
  Rng  rng(1);
  auto inst = oracle::random_instance(rng, 5, 5, 5, 3);
  for (double p : pas_exact(inst).probs) {
    EXPECT_NEAR(p, 1.0, 1e-12);
  }
}

TEST(PasExact, RefusesHugeOutcomeSpaces)
{
  SimpaInstance inst;
  for (int i = 0; i < 21; ++i) {
    inst.bids.push_back(1.0);
    inst.dists.emplace_back(std::vector<CtrAtom>{{0.1, 0.5}, {0.2, 0.5}});
  }
  inst.m = 5;
  inst.k = 2;
  EXPECT_THROW(pas_exact(inst), TooLargeError);
}

TEST(PasMonteCarlo, CloseToExact)
{
  Rng        rng(5);
  const auto inst  = oracle::random_instance(rng, 6, 3, 2, 3);
  const auto exact = pas_exact(inst).probs;
  Rng        draw(17);
  const auto mc = pas_monte_carlo(inst, 100000, draw).probs;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    EXPECT_NEAR(mc[i], exact[i], 0.01);
  }
}

TEST(SimpaObjective, Example1Values)
{
  const auto inst = generate_example1({});
  EXPECT_NEAR(simpa_objective(std::vector<std::size_t>{0, 2}, inst).value, 1.9, 1e-12);
  EXPECT_NEAR(simpa_objective(std::vector<std::size_t>{0, 1}, inst).value, 1.0, 1e-12);
  EXPECT_EQ(simpa_objective(std::vector<std::size_t>{}, inst).value, 0.0);
  EXPECT_TRUE(simpa_objective(std::vector<std::size_t>{0, 2}, inst).exact);
}

TEST(SimpaObjective, FallsBackToMonteCarlo)
{
  SimpaInstance inst;
  for (int i = 0; i < 21; ++i) {
    inst.bids.push_back(1.0);
    inst.dists.emplace_back(std::vector<CtrAtom>{{0.1, 0.9}, {0.3, 0.1}});
  }
  inst.m = 21;
  inst.k = 1;
  std::vector<std::size_t> all(21);
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i] = i;
  }
  const auto v = simpa_objective(all, inst, 20000, 3);
  EXPECT_FALSE(v.exact);
  // The max is 0.3 unless all 21 ads draw 0.1.
  EXPECT_GT(v.std_error, 0.0);
  EXPECT_NEAR(v.value, 0.3 - 0.2 * std::pow(0.9, 21), 4 * v.std_error);
}

TEST(BruteForce, Example1FindsTheStochasticAd)
{
  const auto best = brute_force_optimal_subset(generate_example1({}));
  EXPECT_EQ(best.subset, (std::vector<std::size_t>{0, 2}));
  EXPECT_NEAR(best.objective, 1.9, 1e-12);
}

TEST(BruteForce, RefusesTooManySubsets)
{
  Rng  rng(2);
  auto inst = oracle::random_instance(rng, 30, 10, 1, 1);
  EXPECT_THROW(brute_force_optimal_subset(inst), TooLargeError);
}

TEST(LazyGreedy, Example1)
{
  const auto inst = generate_example1({});
  const auto g    = lazy_greedy_subset(inst);
  EXPECT_EQ(sorted(g.subset), (std::vector<std::size_t>{0, 2}));
  EXPECT_NEAR(g.objective, 1.9, 1e-12);
}

TEST(SelectionProperties, PasMatchesEnumeration)
{
  Rng rng(31);
  for (int t = 0; t < 150; ++t) {
    const std::size_t n    = oracle::pick(rng, 1, 6);
    const std::size_t k    = oracle::pick(rng, 1, n);
    const auto        inst = oracle::random_instance(rng, n, n, k, 3);
    const auto        got  = pas_exact(inst).probs;
    const auto        want = oracle::pas(inst);
    double            sum  = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(got[i], want[i], 1e-12);
      EXPECT_GE(got[i], 0.0);
      EXPECT_LE(got[i], 1.0 + 1e-12);
      sum += got[i];
    }
    EXPECT_NEAR(sum, static_cast<double>(std::min(k, n)), 1e-9);
  }
}

TEST(SelectionProperties, ObjectiveAndRecallMatchEnumeration)
{
  Rng rng(32);
  for (int t = 0; t < 150; ++t) {
    const std::size_t n    = oracle::pick(rng, 2, 6);
    const std::size_t m    = oracle::pick(rng, 1, n);
    const std::size_t k    = oracle::pick(rng, 1, m);
    const auto        inst = oracle::random_instance(rng, n, m, k, 3);
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() < 0.5) {
        s.push_back(i);
      }
    }
    EXPECT_NEAR(simpa_objective(s, inst).value, oracle::objective(inst, s), 1e-12);
    EXPECT_NEAR(expected_recall(s, inst), oracle::recall(inst, s), 1e-12);
  }
}

TEST(SelectionProperties, TopMByPasMaximizesRecall)
{
  Rng rng(33);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n    = oracle::pick(rng, 2, 7);
    const std::size_t m    = oracle::pick(rng, 1, n);
    const std::size_t k    = oracle::pick(rng, 1, m);
    const auto        inst = oracle::random_instance(rng, n, m, k, 3);
    const auto        sel  = select_by_scores(pas_exact(inst).probs, m).selected;
    EXPECT_NEAR(oracle::recall(inst, sel), oracle::best_recall(inst), 1e-12);
  }
}

TEST(SelectionProperties, BruteForceIsOptimal)
{
  Rng rng(34);
  for (int t = 0; t < 80; ++t) {
    const std::size_t n    = oracle::pick(rng, 2, 7);
    const std::size_t m    = oracle::pick(rng, 1, n);
    const std::size_t k    = oracle::pick(rng, 1, m);
    const auto        inst = oracle::random_instance(rng, n, m, k, 2);
    const auto        best = brute_force_optimal_subset(inst);
    EXPECT_EQ(best.subset.size(), m);
    EXPECT_NEAR(best.objective, oracle::best_objective(inst), 1e-12);
    EXPECT_NEAR(best.objective, oracle::objective(inst, best.subset), 1e-12);
  }
}

TEST(SelectionProperties, ObjectiveIsMonotoneSubmodular)
{
  Rng rng(35);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n    = oracle::pick(rng, 3, 7);
    const std::size_t k    = oracle::pick(rng, 1, 3);
    const auto        inst = oracle::random_instance(rng, n, n, k, 3);
    std::vector<std::size_t> a, b;
    const std::size_t        x = rng.below(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == x) {
        continue;
      }
      const double u = rng.uniform();
      if (u < 0.3) {
        a.push_back(i);
        b.push_back(i);
      } else if (u < 0.6) {
        b.push_back(i);
      }
    }
    auto ax = a;
    auto bx = b;
    ax.push_back(x);
    bx.push_back(x);
    const double fa = oracle::objective(inst, a), fb = oracle::objective(inst, b);
    const double fax = simpa_objective(ax, inst).value, fbx = simpa_objective(bx, inst).value;
    EXPECT_GE(fb, fa - 1e-12);
    EXPECT_GE(fax - fa, fbx - fb - 1e-12);
  }
}

TEST(SelectionProperties, GreedyWithinOneMinusInverseE)
{
  Rng          rng(36);
  const double ratio = 1.0 - std::exp(-1.0);
  for (int t = 0; t < 80; ++t) {
    const std::size_t n    = oracle::pick(rng, 2, 7);
    const std::size_t m    = oracle::pick(rng, 1, n);
    const std::size_t k    = oracle::pick(rng, 1, m);
    const auto        inst = oracle::random_instance(rng, n, m, k, 3);
    const auto        g    = lazy_greedy_subset(inst);
    EXPECT_EQ(g.subset.size(), m);
    EXPECT_NEAR(g.objective, oracle::objective(inst, g.subset), 1e-12);
    EXPECT_GE(g.objective, ratio * oracle::best_objective(inst) - 1e-12);
  }
}

TEST(SelectionProperties, GdyOptimalWhenMEqualsK)
{
  Rng rng(37);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = oracle::pick(rng, 2, 7);
    const std::size_t m = oracle::pick(rng, 1, n);
    SimpaInstance     inst;
    inst.m = m;
    inst.k = m;
    for (std::size_t i = 0; i < n; ++i) {
      inst.bids.push_back(0.5 + rng.uniform());
      const double lo = 0.05 + 0.4 * rng.uniform();
      inst.dists.emplace_back(std::vector<CtrAtom>{{lo, 0.5}, {lo + 0.3, 0.5}});
    }
    const auto gdy = select_gdy(inst.bids, inst.coarse_ctrs(), m).selected;
    EXPECT_NEAR(oracle::objective(inst, gdy), oracle::best_objective(inst), 1e-12);
  }
}

TEST(SelectionProperties, SetCoverDecisionMatches)
{
  Rng rng(38);
  for (int t = 0; t < 60; ++t) {
    const std::size_t                  l = oracle::pick(rng, 1, 5);
    const std::size_t                  s = oracle::pick(rng, 1, 5);
    std::vector<std::set<std::size_t>> sets(s);
    for (auto &set : sets) {
      set.insert(1 + rng.below(l));
      for (std::size_t e = 1; e <= l; ++e) {
        if (rng.uniform() < 0.3) {
          set.insert(e);
        }
      }
    }
    const std::size_t m    = oracle::pick(rng, 1, s);
    const auto        inst = set_cover_to_simpa(l, sets, m);
    const bool        hit  = brute_force_optimal_subset(inst).objective >= 1.0 - 1e-12;
    EXPECT_EQ(hit, oracle::has_cover(l, sets, m));
  }
}
