#include "preauction/scorer.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace preauction;

namespace {

ScorerArchitecture small_arch(std::size_t d, const std::string &activation = "relu")
{
  ScorerArchitecture a;
  a.input_dim      = d;
  a.encoder_widths = {6, 5};
  a.head_widths    = {4};
  a.activation     = activation;
  return a;
}

FeatureMatrix random_features(Rng &rng, std::size_t n, std::size_t d)
{
  FeatureMatrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      x(i, j) = rng.normal();
    }
  }
  return x;
}

std::filesystem::path temp_path(const std::string &name)
{
  return std::filesystem::temp_directory_path() / ("preauction_test_" + name);
}

}  // namespace

TEST(ScorerArchitecture, WeightCount)
{
  ScorerArchitecture a;
  a.input_dim      = 3;
  a.encoder_widths = {4};
  a.head_widths    = {2};
  // Encoder 3->4, head (3 + 8)->2, output 2->1.
  EXPECT_EQ(a.pooled_dim(), 8u);
  EXPECT_EQ(a.weight_count(), (4 * 3 + 4) + (2 * 11 + 2) + (1 * 2 + 1));
}

TEST(ScorerArchitecture, RejectsUnknownNames)
{
  auto a       = small_arch(3);
  a.activation = "gelu";
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a              = small_arch(3);
  a.aggregations = {"sum"};
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a                = small_arch(3);
  a.encoder_widths = {0};
  EXPECT_THROW(a.validate(), std::invalid_argument);
  EXPECT_THROW(scorer_kind_from_string("svm"), std::invalid_argument);
  EXPECT_EQ(scorer_kind_from_string(to_string(ScorerKind::regctr)), ScorerKind::regctr);
}

TEST(Scorer, PermutationEquivariant)
{
  Rng        rng(1);
  const auto p = ScorerParams::initialize(small_arch(5), ScorerKind::pas, 1.0, rng);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(12);
    const auto        x = random_features(rng, n, 5);
    Eigen::VectorXi   perm(n);
    for (std::size_t i = 0; i < n; ++i) {
      perm[i] = static_cast<int>(i);
    }
    for (std::size_t i = n; i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.below(i)]);
    }
    FeatureMatrix xp(n, 5);
    for (std::size_t i = 0; i < n; ++i) {
      xp.row(i) = x.row(perm[i]);
    }
    const auto f  = scorer_forward(p, x);
    const auto fp = scorer_forward(p, xp);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(fp[i], f[perm[i]], 1e-12);
    }
  }
}

TEST(Scorer, DuplicateRowsScoreEqually)
{
  Rng           rng(2);
  const auto    p = ScorerParams::initialize(small_arch(4), ScorerKind::pas, 1.0, rng);
  FeatureMatrix x = random_features(rng, 5, 4);
  x.row(3)        = x.row(1);
  const auto f    = scorer_forward(p, x);
  EXPECT_EQ(f[1], f[3]);
}

TEST(Scorer, ZeroWeightsGiveZeroScores)
{
  Rng        rng(3);
  const auto p = ScorerParams::zeros(small_arch(4), ScorerKind::reg);
  const auto f = scorer_forward(p, random_features(rng, 7, 4));
  EXPECT_TRUE(f.isZero(0.0));
}

TEST(Scorer, RejectsDimensionMismatch)
{
  Rng        rng(4);
  const auto p = ScorerParams::initialize(small_arch(4), ScorerKind::pas, 1.0, rng);
  EXPECT_THROW(scorer_forward(p, random_features(rng, 3, 5)), std::invalid_argument);
  auto bad = p;
  bad.weights.pop_back();
  EXPECT_THROW(scorer_forward(bad, random_features(rng, 3, 4)), std::invalid_argument);
}

TEST(Scorer, OutputScaleMultipliesScores)
{
  Rng        rng(5);
  auto       p = ScorerParams::initialize(small_arch(3), ScorerKind::reg, 1.0, rng);
  const auto x = random_features(rng, 4, 3);
  const auto f = scorer_forward(p, x);
  p.output_scale = 2.5;
  EXPECT_TRUE(scorer_forward(p, x).isApprox(2.5 * f, 1e-15));
}

TEST(Scorer, GradientMatchesFiniteDifferences)
{
  for (const std::string act : {"tanh", "relu"}) {
    Rng        rng(6);
    auto       p = ScorerParams::initialize(small_arch(4, act), ScorerKind::pas, 1.0, rng);
    const auto x = random_features(rng, 6, 4);
    Eigen::VectorXd c(6);
    for (int i = 0; i < 6; ++i) {
      c[i] = rng.normal();
    }
    std::vector<double> grad(p.weights.size(), 0.0);
    scorer_backward(p, x, [&](const Eigen::VectorXd &) { return c; }, grad);

    const double h          = 1e-6;
    std::size_t  mismatches = 0;
    for (std::size_t w = 0; w < p.weights.size(); ++w) {
      const double orig = p.weights[w];
      p.weights[w]      = orig + h;
      const double up   = c.dot(scorer_forward(p, x));
      p.weights[w]      = orig - h;
      const double down = c.dot(scorer_forward(p, x));
      p.weights[w]      = orig;
      const double fd   = (up - down) / (2 * h);
      if (std::abs(fd - grad[w]) > 1e-5 * (1.0 + std::abs(fd))) {
        ++mismatches;
      }
    }
    // ReLU kinks can sit within h of a weight; tanh is smooth everywhere.
    if (act == "tanh") {
      EXPECT_EQ(mismatches, 0u);
    } else {
      EXPECT_LE(mismatches, p.weights.size() / 100);
    }
  }
}

TEST(Scorer, BackwardAccumulatesIntoBuffer)
{
  Rng                 rng(7);
  const auto          p = ScorerParams::initialize(small_arch(3, "tanh"), ScorerKind::pas, 1.0, rng);
  const auto          x = random_features(rng, 4, 3);
  const auto          ones = [](const Eigen::VectorXd &f) { return Eigen::VectorXd::Ones(f.size()); };
  std::vector<double> once(p.weights.size(), 0.0), twice(p.weights.size(), 0.0);
  scorer_backward(p, x, ones, once);
  scorer_backward(p, x, ones, twice);
  scorer_backward(p, x, ones, twice);
  for (std::size_t w = 0; w < once.size(); ++w) {
    EXPECT_NEAR(twice[w], 2 * once[w], 1e-12);
  }
  std::vector<double> wrong(3);
  EXPECT_THROW(scorer_backward(p, x, ones, wrong), std::invalid_argument);
}

TEST(ScorerFile, RoundTrip)
{
  Rng  rng(8);
  auto p         = ScorerParams::initialize(small_arch(5), ScorerKind::regctr, 1.0, rng);
  p.output_scale = 0.0123;
  p.architecture.bid_input = false;
  const auto path = temp_path("roundtrip.model");
  save_scorer(p, path);
  const auto q = load_scorer(path);
  EXPECT_EQ(p, q);
  const auto x = random_features(rng, 6, 5);
  EXPECT_EQ(scorer_forward(p, x), scorer_forward(q, x));
  std::filesystem::remove(path);
}

TEST(ScorerFile, RejectsCorruptFiles)
{
  Rng        rng(9);
  const auto p    = ScorerParams::initialize(small_arch(3), ScorerKind::pas, 1.0, rng);
  const auto path = temp_path("corrupt.model");
  save_scorer(p, path);
  const auto size = std::filesystem::file_size(path);

  std::filesystem::resize_file(path, size - 8);
  EXPECT_THROW(load_scorer(path), std::runtime_error);

  save_scorer(p, path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << "x";
  }
  EXPECT_THROW(load_scorer(path), std::runtime_error);

  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "not a model\n";
  }
  EXPECT_THROW(load_scorer(path), std::runtime_error);
  std::filesystem::remove(path);

  EXPECT_THROW(load_scorer(temp_path("missing.model")), std::runtime_error);
}
