#include "preauction/strategy.hpp"

#include "preauction/training.hpp"

#include <random>
#include <stdexcept>

namespace preauction {

namespace {

SelectionResult indicator_result(const std::vector<std::size_t> &subset, std::size_t n,
                                 std::string name)
{
  std::vector<double> scores(n, 0.0);
  for (std::size_t i : subset) {
    scores[i] = 1.0;
  }
  return select_by_scores(scores, subset.size(), std::move(name));
}

class GdyStrategy : public Strategy
{
public:
  std::string     name() const override { return "gdy"; }
  SelectionResult select(const AuctionInstance &instance) const override
  {
    return select_gdy(instance.bids(), instance.coarse_ctrs(), instance.subset_size);
  }
};

class PasExactStrategy : public Strategy
{
public:
  std::string     name() const override { return "pas-exact"; }
  SelectionResult select(const AuctionInstance &instance) const override
  {
    const auto pas = pas_exact(to_simpa(instance));
    return select_by_scores(pas.probs, instance.subset_size, name());
  }
};

class PasMonteCarloStrategy : public Strategy
{
public:
  PasMonteCarloStrategy(std::size_t samples, std::optional<std::uint64_t> seed)
    : samples_(samples)
    , seed_(seed)
  {
    if (samples_ == 0) {
      throw std::invalid_argument("pas-mc: sample count must be positive");
    }
  }

  std::string name() const override { return "pas-mc"; }
  bool        deterministic() const override { return seed_.has_value(); }

  SelectionResult select(const AuctionInstance &instance) const override
  {
    // Keyed on the auction, not on bids, so bid perturbations reuse the
    // same realizations.
    Rng        rng(seed_ ? derive_seed(*seed_, static_cast<std::uint64_t>(instance.auction_id))
                         : std::random_device{}());
    const auto pas = pas_monte_carlo(to_simpa(instance), samples_, rng);
    return select_by_scores(pas.probs, instance.subset_size, name());
  }

private:
  std::size_t                  samples_;
  std::optional<std::uint64_t> seed_;
};

class LearnedStrategy : public Strategy
{
public:
  LearnedStrategy(std::string name, ScorerParams params)
    : name_(std::move(name))
    , params_(std::move(params))
  {
    params_.validate();
  }

  std::string     name() const override { return name_; }
  SelectionResult select(const AuctionInstance &instance) const override
  {
    const Eigen::VectorXd s = selection_scores(params_, build_features(instance, true));
    return select_by_scores(std::span(s.data(), s.size()), instance.subset_size, name_);
  }

private:
  std::string  name_;
  ScorerParams params_;
};

class GreedySubmodularStrategy : public Strategy
{
public:
  GreedySubmodularStrategy(std::size_t panel, std::uint64_t seed)
    : panel_(panel)
    , seed_(seed)
  {}

  std::string     name() const override { return "greedy-submodular"; }
  SelectionResult select(const AuctionInstance &instance) const override
  {
    const auto best = lazy_greedy_subset(to_simpa(instance), panel_, seed_);
    return indicator_result(best.subset, instance.size(), name());
  }

private:
  std::size_t   panel_;
  std::uint64_t seed_;
};

class OracleStrategy : public Strategy
{
public:
  std::string     name() const override { return "oracle"; }
  SelectionResult select(const AuctionInstance &instance) const override
  {
    const auto best = brute_force_optimal_subset(to_simpa(instance));
    return indicator_result(best.subset, instance.size(), name());
  }
};

ScorerParams require_model(const std::string &name, const StrategyOptions &options,
                           ScorerKind kind)
{
  if (!options.model) {
    throw std::invalid_argument("strategy '" + name + "' needs a trained model");
  }
  if (options.model->kind != kind) {
    throw std::invalid_argument("strategy '" + name + "' needs a " + to_string(kind) +
                                " model, got " + to_string(options.model->kind));
  }
  return *options.model;
}

}  // namespace

SelectionResult ScoreStrategy::select(const AuctionInstance &instance) const
{
  const auto scores = fn_(instance);
  if (scores.size() != instance.size()) {
    throw std::invalid_argument("score strategy '" + name_ + "': one score per ad required");
  }
  return select_by_scores(scores, instance.subset_size, name_);
}

const std::vector<std::string> &strategy_names()
{
  static const std::vector<std::string> names{"gdy", "pas-exact", "pas-mc", "pas-learned",
                                              "reg", "regctr", "greedy-submodular", "oracle"};
  return names;
}

std::unique_ptr<Strategy> make_strategy(const std::string &name, const StrategyOptions &options)
{
  if (name == "gdy") {
    return std::make_unique<GdyStrategy>();
  }
  if (name == "pas-exact") {
    return std::make_unique<PasExactStrategy>();
  }
  if (name == "pas-mc") {
    return std::make_unique<PasMonteCarloStrategy>(options.mc_samples, options.mc_seed);
  }
  if (name == "pas-learned") {
    return std::make_unique<LearnedStrategy>(name, require_model(name, options, ScorerKind::pas));
  }
  if (name == "reg") {
    return std::make_unique<LearnedStrategy>(name, require_model(name, options, ScorerKind::reg));
  }
  if (name == "regctr") {
    return std::make_unique<LearnedStrategy>(name,
                                             require_model(name, options, ScorerKind::regctr));
  }
  if (name == "greedy-submodular") {
    return std::make_unique<GreedySubmodularStrategy>(options.greedy_panel_samples,
                                                      options.greedy_seed);
  }
  if (name == "oracle") {
    return std::make_unique<OracleStrategy>();
  }
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

}  // namespace preauction
