#include "preauction/experiment.hpp"

#include "preauction/auction_log.hpp"
#include "preauction/ic_test.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace preauction {

namespace {

constexpr const char *kMetricNames[] = {"swr", "recall", "revr"};

std::string format_number(double v)
{
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Kind of model a strategy needs, or empty.
std::string model_kind(const std::string &strategy)
{
  if (strategy == "pas-learned") {
    return "pas";
  }
  if (strategy == "reg" || strategy == "regctr") {
    return strategy;
  }
  return {};
}

void fill_realizations(AuctionInstance &inst, Rng &rng)
{
  for (std::size_t i = 0; i < inst.size(); ++i) {
    auto &ad = inst.ads[i];
    if (!ad.refined_ctr) {
      ad.refined_ctr = inst.distribution(i).quantile(rng.uniform());
    }
  }
}

double mean_of(const std::vector<double> &v)
{
  if (v.empty()) {
    return std::nan("");
  }
  double s = 0.0;
  for (double x : v) {
    s += x;
  }
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double> &v)
{
  if (v.size() < 2) {
    return v.empty() ? std::nan("") : 0.0;
  }
  const double m  = mean_of(v);
  double       ss = 0.0;
  for (double x : v) {
    ss += (x - m) * (x - m);
  }
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

using Setter = void (*)(ExperimentConfig &, const std::string &, const std::string &);

struct KeySpec
{
  const char *key;
  const char *doc;
  Setter      set;
};

const std::vector<KeySpec> &key_specs()
{
  static const std::vector<KeySpec> specs{
      {"preset", "environment preset: public1-like or public5-like (applied before other keys)",
       [](ExperimentConfig &c, const std::string &, const std::string &v) {
         const auto seed = c.env.seed;
         c.env           = preset_config(v);
         c.env.seed      = seed;
       }},
      {"n_ads", "candidate ads per auction (N)",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.n_ads = parse_size(k, v); }},
      {"subset_size", "ads passed to the auction stage (M)",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.subset_size = parse_size(k, v); }},
      {"n_slots", "auction slots (K)",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.n_slots = parse_size(k, v); }},
      {"support_size", "refined-ctr outcomes per ad",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.support_size = parse_size(k, v); }},
      {"bid_low", "lower end of the uniform bid range",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.bid_low = parse_double(k, v); }},
      {"bid_high", "upper end of the uniform bid range",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.bid_high = parse_double(k, v); }},
      {"gap_factor", "spread of the refined ctr around its mean",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.gap_factor = parse_double(k, v); }},
      {"eta", "negative down-sampling rate of the calibration",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.eta = parse_double(k, v); }},
      {"light_model_weight", "weight of the light additive model in the coarse ctr",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.light_model_weight = parse_double(k, v); }},
      {"base_logit", "intercept of the ctr logit",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.base_logit = parse_double(k, v); }},
      {"popularity", "weight of the ad popularity feature",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.popularity = parse_double(k, v); }},
      {"activity", "weight of the user activity feature",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.activity = parse_double(k, v); }},
      {"cross_strength", "weight of the user x ad interaction",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.cross_strength = parse_double(k, v); }},
      {"n_ad_features", "ad feature dimension",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.n_ad_features = parse_size(k, v); }},
      {"n_user_features", "user feature dimension",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.env.n_user_features = parse_size(k, v); }},
      {"dataset", "auction log to use instead of the synthetic environment",
       [](ExperimentConfig &c, const std::string &, const std::string &v) { c.dataset = v; }},
      {"strategies", "comma-separated strategy names",
       [](ExperimentConfig &c, const std::string &, const std::string &v) { c.strategies = parse_list(v); }},
      {"n_auctions", "total auctions, split 3:1:1",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.n_auctions = parse_size(k, v); }},
      {"n_train", "explicit training split size",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.n_train = parse_size(k, v); }},
      {"n_val", "explicit validation split size",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.n_val = parse_size(k, v); }},
      {"n_test", "explicit test split size",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.n_test = parse_size(k, v); }},
      {"n_repetitions", "independent repetitions (derived seeds)",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.n_repetitions = parse_size(k, v); }},
      {"metrics_k", "comma-separated K values for SWr/Recall/REVr",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.metrics_k = parse_size_list(k, v); }},
      {"seed", "master seed",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.master_seed = parse_u64(k, v); }},
      {"threads", "worker threads for evaluation and training",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.n_threads = parse_size(k, v); }},
      {"train.learning_rate", "SGD step size",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.train.learning_rate = parse_double(k, v); }},
      {"train.momentum", "SGD momentum in [0, 1)",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.train.momentum = parse_double(k, v); }},
      {"train.epochs", "training epochs",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.train.n_epochs = parse_size(k, v); }},
      {"train.batch_size", "auctions per mini-batch",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.train.batch_size = parse_size(k, v); }},
      {"train.patience", "early-stopping patience in epochs (0 = off)",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.train.patience = parse_size(k, v); }},
      {"train.init_scale", "weight initialization scale",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.train.weight_init_scale = parse_double(k, v); }},
      {"train.encoder_widths", "comma-separated encoder layer widths",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.train.encoder_widths = parse_size_list(k, v); }},
      {"train.head_widths", "comma-separated head hidden widths",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.train.head_widths = parse_size_list(k, v); }},
      {"train.activation", "relu or tanh",
       [](ExperimentConfig &c, const std::string &, const std::string &v) { c.train.activation = v; }},
      {"mc_samples", "draws per auction for pas-mc",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.strategy_options.mc_samples = parse_size(k, v); }},
      {"mc_seed", "seed of the pas-mc draw panels",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.strategy_options.mc_seed = parse_u64(k, v); }},
      {"greedy_panel_samples", "realization panel size for greedy-submodular",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.strategy_options.greedy_panel_samples = parse_size(k, v); }},
      {"ic.ads_per_auction", "ads tested per auction (0 = all)",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.ic_ads_per_auction = parse_size(k, v); }},
      {"ic.factors", "comma-separated bid factors",
       [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.ic_factors = parse_double_list(k, v); }},
      {"model.pas", "pre-trained pas model file",
       [](ExperimentConfig &c, const std::string &, const std::string &v) { c.model_paths["pas"] = v; }},
      {"model.reg", "pre-trained reg model file",
       [](ExperimentConfig &c, const std::string &, const std::string &v) { c.model_paths["reg"] = v; }},
      {"model.regctr", "pre-trained regctr model file",
       [](ExperimentConfig &c, const std::string &, const std::string &v) { c.model_paths["regctr"] = v; }},
  };
  return specs;
}

}  // namespace

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)> &fn)
{
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr       error;
  std::mutex               error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto &t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

ExperimentConfig::Split ExperimentConfig::split(std::size_t available) const
{
  if (n_train + n_val + n_test > 0) {
    return {n_train, n_val, n_test};
  }
  const std::size_t total = dataset ? available : n_auctions;
  const std::size_t train = total * 3 / 5;
  const std::size_t val   = total / 5;
  return {train, val, total - train - val};
}

void ExperimentConfig::validate() const
{
  if (!dataset) {
    env.validate();
  }
  if (n_repetitions == 0) {
    throw std::invalid_argument("experiment config: n_repetitions must be >= 1");
  }
  if (strategies.empty()) {
    throw std::invalid_argument("experiment config: no strategies");
  }
  const auto &known = strategy_names();
  for (const auto &s : strategies) {
    if (std::find(known.begin(), known.end(), s) == known.end()) {
      throw std::invalid_argument("experiment config: unknown strategy '" + s + "'");
    }
  }
  if (metrics_k.empty()) {
    throw std::invalid_argument("experiment config: metrics_k is empty");
  }
  for (std::size_t k : metrics_k) {
    if (k == 0) {
      throw std::invalid_argument("experiment config: metrics_k entries must be positive");
    }
  }
  train.validate();
}

const std::vector<std::pair<std::string, std::string>> &experiment_config_keys()
{
  static const auto keys = [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &s : key_specs()) {
      out.emplace_back(s.key, s.doc);
    }
    return out;
  }();
  return keys;
}

ExperimentConfig experiment_config_from_map(const ConfigMap &map)
{
  ExperimentConfig c;
  c.ic_factors = default_factors();
  const auto &specs = key_specs();
  if (const auto it = map.find("preset"); it != map.end()) {
    specs.front().set(c, it->first, it->second);
  }
  for (const auto &[key, value] : map) {
    if (key == "preset") {
      continue;
    }
    const auto spec = std::find_if(specs.begin(), specs.end(),
                                   [&](const KeySpec &s) { return key == s.key; });
    if (spec == specs.end()) {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
    spec->set(c, key, value);
  }
  return c;
}

std::uint64_t repetition_seed(const ExperimentConfig &config, std::size_t repetition)
{
  return derive_seed(config.master_seed, repetition);
}

std::vector<AuctionInstance> generate_auctions(const EnvConfig &env, std::size_t n,
                                               std::uint64_t seed, std::size_t threads)
{
  std::vector<AuctionInstance> all(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    all[i]            = generate_auction(env, rng);
    all[i].auction_id = static_cast<std::int64_t>(i);
    fill_realizations(all[i], rng);
  });
  return all;
}

ExperimentData prepare_data(const ExperimentConfig &config, std::size_t repetition)
{
  const std::uint64_t seed = repetition_seed(config, repetition);
  std::vector<AuctionInstance> all;
  ExperimentConfig::Split      split{};
  if (config.dataset) {
    all   = load_auction_log(*config.dataset, true).instances;
    split = config.split(all.size());
    if (split.train + split.val + split.test > all.size()) {
      throw std::invalid_argument("dataset has " + std::to_string(all.size()) +
                                  " auctions, fewer than the requested split");
    }
    all.resize(split.train + split.val + split.test);
    const std::uint64_t draw_seed = derive_seed(seed, 2);
    parallel_for(all.size(), config.n_threads, [&](std::size_t i) {
      Rng rng(derive_seed(draw_seed, i));
      fill_realizations(all[i], rng);
    });
  } else {
    split = config.split();
    all   = generate_auctions(config.env, split.train + split.val + split.test,
                              derive_seed(seed, 1), config.n_threads);
  }
  ExperimentData data;
  auto           it = std::make_move_iterator(all.begin());
  data.train.assign(it, it + static_cast<std::ptrdiff_t>(split.train));
  it += static_cast<std::ptrdiff_t>(split.train);
  data.val.assign(it, it + static_cast<std::ptrdiff_t>(split.val));
  it += static_cast<std::ptrdiff_t>(split.val);
  data.test.assign(it, std::make_move_iterator(all.end()));
  return data;
}

std::vector<double> realized_ctrs(const AuctionInstance &instance)
{
  std::vector<double> out;
  out.reserve(instance.size());
  for (const auto &ad : instance.ads) {
    if (!ad.refined_ctr) {
      throw std::invalid_argument("auction " + std::to_string(instance.auction_id) + ": ad " +
                                  std::to_string(ad.ad_id) + " has no refined ctr");
    }
    out.push_back(*ad.refined_ctr);
  }
  return out;
}

std::vector<TrainingSample> to_samples(std::span<const AuctionInstance> auctions)
{
  std::vector<TrainingSample> out;
  out.reserve(auctions.size());
  for (const auto &inst : auctions) {
    out.push_back(make_training_sample(inst, realized_ctrs(inst)));
  }
  return out;
}

std::map<std::string, ScorerParams> train_models(const ExperimentConfig &config,
                                                 const ExperimentData &data,
                                                 std::size_t repetition,
                                                 const std::vector<std::string> &strategies)
{
  std::vector<std::string> kinds;
  for (const auto &s : strategies) {
    const auto kind = model_kind(s);
    if (!kind.empty() && std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
      kinds.push_back(kind);
    }
  }
  std::map<std::string, ScorerParams> models;
  std::vector<std::string>            to_train;
  for (const auto &kind : kinds) {
    if (const auto it = config.model_paths.find(kind); it != config.model_paths.end()) {
      auto params = load_scorer(it->second);
      if (to_string(params.kind) != kind) {
        throw std::invalid_argument("model file " + it->second.string() + " holds a " +
                                    to_string(params.kind) + " model, expected " + kind);
      }
      models.emplace(kind, std::move(params));
    } else {
      to_train.push_back(kind);
    }
  }
  if (to_train.empty()) {
    return models;
  }
  if (data.train.empty()) {
    throw std::invalid_argument("training split is empty");
  }
  const auto train_samples = to_samples(data.train);
  const auto val_samples   = to_samples(data.val);
  const auto &first        = data.train.front();

  std::vector<ScorerParams> trained(to_train.size());
  parallel_for(to_train.size(), config.n_threads, [&](std::size_t i) {
    TrainConfig tc = config.train;
    tc.seed        = derive_seed(repetition_seed(config, repetition), 10 + i);
    tc.metric_k    = first.n_slots;
    tc.metric_m    = first.subset_size;
    const auto &kind = to_train[i];
    if (kind == "pas") {
      trained[i] = train_pas(train_samples, val_samples, tc).params;
    } else {
      trained[i] = train_regression(train_samples, val_samples,
                                    kind == "reg" ? RegressionTarget::b_times_ctr
                                                  : RegressionTarget::ctr_only,
                                    tc)
                       .params;
    }
  });
  for (std::size_t i = 0; i < to_train.size(); ++i) {
    models.emplace(to_train[i], std::move(trained[i]));
  }
  return models;
}

StrategyOptions options_for(const ExperimentConfig &config, const std::string &strategy,
                            const std::map<std::string, ScorerParams> &models)
{
  StrategyOptions opts = config.strategy_options;
  const auto      kind = model_kind(strategy);
  if (!kind.empty()) {
    if (const auto it = models.find(kind); it != models.end()) {
      opts.model = it->second;
    }
  }
  return opts;
}

ExperimentResult run_experiment(const ExperimentConfig &config)
{
  config.validate();
  std::vector<std::string> evaluated = config.strategies;
  if (std::find(evaluated.begin(), evaluated.end(), "gdy") == evaluated.end()) {
    evaluated.insert(evaluated.begin(), "gdy");
  }
  const std::size_t n_metrics = config.metrics_k.size() * 3;

  ExperimentResult result;
  std::map<std::string, std::size_t> failed;
  for (std::size_t rep = 0; rep < config.n_repetitions; ++rep) {
    const auto data   = prepare_data(config, rep);
    if (data.test.empty()) {
      throw std::invalid_argument("test split is empty");
    }
    for (const auto &inst : data.test) {
      for (std::size_t k : config.metrics_k) {
        if (k > inst.subset_size) {
          throw std::invalid_argument("metrics_k value " + std::to_string(k) +
                                      " exceeds the subset size M");
        }
      }
    }
    const auto models = train_models(config, data, rep, evaluated);

    for (const auto &name : evaluated) {
      const auto strategy = make_strategy(name, options_for(config, name, models));
      std::vector<std::vector<double>> per_auction(data.test.size());
      std::vector<std::string>         errors(data.test.size());
      parallel_for(data.test.size(), config.n_threads, [&](std::size_t a) {
        const auto &inst = data.test[a];
        try {
          const auto sel  = strategy->select(inst);
          const auto ctrs = realized_ctrs(inst);
          std::vector<double> values;
          values.reserve(n_metrics);
          for (std::size_t k : config.metrics_k) {
            const auto m = compute_metrics(sel.selected, inst, ctrs, k);
            values.insert(values.end(), {m.swr, m.recall, m.revr});
          }
          per_auction[a] = std::move(values);
        } catch (const std::exception &e) {
          errors[a] = e.what();
        }
      });

      std::vector<double> sums(n_metrics, 0.0);
      std::size_t         ok = 0;
      for (std::size_t a = 0; a < data.test.size(); ++a) {
        if (!errors[a].empty()) {
          ++failed[name];
          result.failures.push_back(name + ": repetition " + std::to_string(rep) + ", auction " +
                                    std::to_string(data.test[a].auction_id) + ": " + errors[a]);
          continue;
        }
        ++ok;
        for (std::size_t j = 0; j < n_metrics; ++j) {
          sums[j] += per_auction[a][j];
        }
      }
      for (std::size_t ki = 0; ki < config.metrics_k.size(); ++ki) {
        for (std::size_t mi = 0; mi < 3; ++mi) {
          const std::string key =
              std::string(kMetricNames[mi]) + "@" + std::to_string(config.metrics_k[ki]);
          result.per_repetition[name][key].push_back(
              ok > 0 ? sums[ki * 3 + mi] / static_cast<double>(ok) : std::nan(""));
        }
      }
    }
  }

  for (const auto &name : config.strategies) {
    for (std::size_t k : config.metrics_k) {
      for (const char *metric : kMetricNames) {
        const std::string key = std::string(metric) + "@" + std::to_string(k);
        const auto       &v   = result.per_repetition.at(name).at(key);
        MetricRow         row;
        row.strategy        = name;
        row.k               = k;
        row.metric          = metric;
        row.mean            = mean_of(v);
        row.std             = sample_std(v);
        const double base   = mean_of(result.per_repetition.at("gdy").at(key));
        row.improvement_pct = base != 0.0 ? 100.0 * (row.mean - base) / base : std::nan("");
        row.failed_auctions = failed.count(name) ? failed.at(name) : 0;
        result.rows.push_back(row);
      }
    }
  }
  return result;
}

std::string ExperimentResult::to_csv() const
{
  std::ostringstream os;
  os << "strategy,k,metric,mean,std,improvement_pct,failed_auctions\n";
  for (const auto &r : rows) {
    os << r.strategy << ',' << r.k << ',' << r.metric << ',' << format_number(r.mean) << ','
       << format_number(r.std) << ',' << format_number(r.improvement_pct) << ','
       << r.failed_auctions << '\n';
  }
  return os.str();
}

std::string ExperimentResult::to_table() const
{
  std::ostringstream os;
  char               line[160];
  std::snprintf(line, sizeof line, "%-18s %3s %-7s %10s %10s %10s %7s\n", "strategy", "K",
                "metric", "mean", "std", "vs gdy %", "failed");
  os << line;
  for (const auto &r : rows) {
    std::snprintf(line, sizeof line, "%-18s %3zu %-7s %10.5f %10.5f %+10.3f %7zu\n",
                  r.strategy.c_str(), r.k, r.metric.c_str(), r.mean, r.std, r.improvement_pct,
                  r.failed_auctions);
    os << line;
  }
  if (!failures.empty()) {
    os << "\n" << failures.size() << " strategy failures; first: " << failures.front() << "\n";
  }
  return os.str();
}

}  // namespace preauction
