#pragma once

#include "preauction/auction.hpp"
#include "preauction/scorer.hpp"
#include "preauction/selection.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace preauction {

/// A pre-auction allocation rule: picks M of the N candidates of an auction.
class Strategy
{
public:
  virtual ~Strategy() = default;

  virtual std::string     name() const                                = 0;
  virtual SelectionResult select(const AuctionInstance &instance) const = 0;
  /// True when select() is a pure function of the instance.
  virtual bool deterministic() const { return true; }
};

/// Settings consumed by the named strategies; unused fields are ignored.
struct StrategyOptions
{
  std::size_t   mc_samples{2000};
  /// Seed of pas-mc; the draw panel is also keyed by the auction id so
  /// different auctions get independent panels.
  std::optional<std::uint64_t> mc_seed{0};
  std::size_t   greedy_panel_samples{4000};
  std::uint64_t greedy_seed{0};
  /// Trained scorer for pas-learned, reg and regctr.
  std::optional<ScorerParams> model;
};

/// Registered names, in report order.
const std::vector<std::string> &strategy_names();

/// Builds a strategy by name. Throws std::invalid_argument for unknown names
/// or a learned strategy whose model is missing or of the wrong kind.
std::unique_ptr<Strategy> make_strategy(const std::string &name,
                                        const StrategyOptions &options = {});

/// A strategy driven by a fixed per-ad score function (used for tests and
/// ad-hoc rules).
class ScoreStrategy : public Strategy
{
public:
  using ScoreFn = std::function<std::vector<double>(const AuctionInstance &)>;

  ScoreStrategy(std::string name, ScoreFn fn)
    : name_(std::move(name))
    , fn_(std::move(fn))
  {}

  std::string     name() const override { return name_; }
  SelectionResult select(const AuctionInstance &instance) const override;

private:
  std::string name_;
  ScoreFn     fn_;
};

}  // namespace preauction
