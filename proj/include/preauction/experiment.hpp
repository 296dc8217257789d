#pragma once

#include "preauction/config.hpp"
#include "preauction/ctr_env.hpp"
#include "preauction/strategy.hpp"
#include "preauction/training.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace preauction {

/// Everything an evaluation run depends on. Built from a flat config file;
/// see experiment_config_keys() for the key list.
struct ExperimentConfig
{
  EnvConfig                            env;
  std::optional<std::filesystem::path> dataset;  // auction log used instead of `env`
  std::vector<std::string>             strategies{"gdy", "pas-learned", "reg", "regctr"};
  /// Total auctions, split 3:1:1 into train/validation/test unless the
  /// explicit split sizes below are nonzero.
  std::size_t              n_auctions{500};
  std::size_t              n_train{0};
  std::size_t              n_val{0};
  std::size_t              n_test{0};
  std::size_t              n_repetitions{1};
  std::vector<std::size_t> metrics_k{5};
  std::uint64_t            master_seed{0};
  TrainConfig              train;
  StrategyOptions          strategy_options;
  std::size_t              ic_ads_per_auction{0};
  std::vector<double>      ic_factors;
  /// Pre-trained model files by kind ("pas", "reg", "regctr"); missing kinds
  /// are trained per repetition.
  std::map<std::string, std::filesystem::path> model_paths;
  std::size_t                                  n_threads{1};

  struct Split
  {
    std::size_t train, val, test;
  };
  /// Split sizes, given a dataset of `available` auctions (ignored when the
  /// environment generates the data).
  Split split(std::size_t available = 0) const;
  void  validate() const;
};

/// Documented keys with a one-line description each.
const std::vector<std::pair<std::string, std::string>> &experiment_config_keys();

/// Applies `preset` first (if present), then every other key. Throws
/// std::invalid_argument on unknown keys or bad values.
ExperimentConfig experiment_config_from_map(const ConfigMap &map);

/// Train/validation/test auctions of one repetition. Every ad carries a
/// refined_ctr realization used for labels and metrics.
struct ExperimentData
{
  std::vector<AuctionInstance> train;
  std::vector<AuctionInstance> val;
  std::vector<AuctionInstance> test;
};

/// Seed of repetition r: derive_seed(master_seed, r).
std::uint64_t repetition_seed(const ExperimentConfig &config, std::size_t repetition);

/// `n` synthetic auctions with ids 0..n-1 and one refined-ctr realization per
/// ad; auction i uses the stream derive_seed(seed, i).
std::vector<AuctionInstance> generate_auctions(const EnvConfig &env, std::size_t n,
                                               std::uint64_t seed, std::size_t threads = 1);

/// Generates (or loads and splits) the auctions of one repetition. Missing
/// refined ctrs are drawn from each ad's distribution.
ExperimentData prepare_data(const ExperimentConfig &config, std::size_t repetition);

/// Labeled samples built from the logged refined ctrs.
std::vector<TrainingSample> to_samples(std::span<const AuctionInstance> auctions);

/// Realized refined ctrs of an auction. Throws when an ad has none.
std::vector<double> realized_ctrs(const AuctionInstance &instance);

/// Trains (or loads) the models that `strategies` need, keyed by kind name.
std::map<std::string, ScorerParams> train_models(const ExperimentConfig &config,
                                                 const ExperimentData &data,
                                                 std::size_t repetition,
                                                 const std::vector<std::string> &strategies);

/// Strategy options with the model of the strategy's kind filled in.
StrategyOptions options_for(const ExperimentConfig &config, const std::string &strategy,
                            const std::map<std::string, ScorerParams> &models);

struct MetricRow
{
  std::string strategy;
  std::size_t k{0};
  std::string metric;  // "swr", "recall", "revr"
  double      mean{0.0};
  double      std{0.0};  // sample standard deviation over repetitions
  double      improvement_pct{0.0};
  std::size_t failed_auctions{0};
};

struct ExperimentResult
{
  std::vector<MetricRow> rows;
  /// Mean metric per repetition: values[strategy][metric@k][repetition].
  std::map<std::string, std::map<std::string, std::vector<double>>> per_repetition;
  /// Strategy failures, one message per failed auction.
  std::vector<std::string> failures;

  /// Header plus one row per (strategy, K, metric).
  std::string to_csv() const;
  std::string to_table() const;
};

/// Runs every strategy on every test auction of every repetition. Results are
/// a pure function of the config. A strategy that throws on an auction has
/// that auction excluded from its means and counted in failed_auctions.
ExperimentResult run_experiment(const ExperimentConfig &config);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once; callers write results by index so the output does
/// not depend on scheduling.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)> &fn);

}  // namespace preauction
