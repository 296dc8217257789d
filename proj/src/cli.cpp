#include "preauction/cli.hpp"

#include "preauction/auction_log.hpp"
#include "preauction/experiment.hpp"
#include "preauction/ic_test.hpp"
#include "preauction/verify.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace preauction {

namespace {

struct CommonOptions
{
  std::optional<std::uint64_t> seed;
  std::string                  config;
  std::string                  out;
};

void add_common(CLI::App *cmd, CommonOptions &opts, bool out_required)
{
  cmd->add_option("--seed", opts.seed, "master seed (overrides the config file)");
  cmd->add_option("--config", opts.config, "flat key = value config file");
  auto *out = cmd->add_option("--out", opts.out, "output path");
  if (out_required) {
    out->required();
  }
}

ExperimentConfig load_config(const CommonOptions &opts)
{
  ExperimentConfig config =
      opts.config.empty() ? experiment_config_from_map({}) : experiment_config_from_map(read_config_file(opts.config));
  if (opts.seed) {
    config.master_seed = *opts.seed;
  }
  return config;
}

void write_file(const std::string &path, const std::string &content)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << content;
  if (!out) {
    throw std::runtime_error("failed writing " + path);
  }
}

/// Writes to `path`, or to stdout when it is empty.
void emit(const std::string &path, const std::string &content)
{
  if (path.empty()) {
    std::cout << content;
  } else {
    write_file(path, content);
  }
}

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

int cmd_generate(const CommonOptions &opts, std::optional<std::size_t> n_auctions,
                 const std::string &preset)
{
  auto config = load_config(opts);
  if (!preset.empty()) {
    config.env = preset_config(preset);
  }
  config.env.validate();
  const std::size_t n    = n_auctions.value_or(config.n_auctions);
  const auto        auctions =
      generate_auctions(config.env, n, derive_seed(config.master_seed, 1), config.n_threads);
  save_auction_log(opts.out, auctions);
  std::cout << "wrote " << auctions.size() << " auctions to " << opts.out << "\n";
  return 0;
}

int cmd_train(const CommonOptions &opts, const std::string &kind_name)
{
  const auto config = load_config(opts);
  config.validate();
  const auto kind = scorer_kind_from_string(kind_name);
  const auto data = prepare_data(config, 0);
  if (data.train.empty()) {
    throw std::invalid_argument("training split is empty");
  }
  const auto train = to_samples(data.train);
  const auto val   = to_samples(data.val);

  TrainConfig tc = config.train;
  tc.seed        = derive_seed(repetition_seed(config, 0), 10);
  tc.metric_k    = data.train.front().n_slots;
  tc.metric_m    = data.train.front().subset_size;
  const auto result =
      kind == ScorerKind::pas
          ? train_pas(train, val, tc)
          : train_regression(train, val,
                             kind == ScorerKind::reg ? RegressionTarget::b_times_ctr
                                                     : RegressionTarget::ctr_only,
                             tc);
  save_scorer(result.params, opts.out);
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    std::cout << "epoch " << e + 1 << " loss " << fmt(result.epoch_losses[e]);
    if (e < result.val_swr.size()) {
      std::cout << " val_swr " << fmt(result.val_swr[e]);
    }
    std::cout << "\n";
  }
  std::cout << "kept epoch " << result.best_epoch + 1 << "; wrote " << to_string(kind)
            << " model to " << opts.out << "\n";
  return 0;
}

int cmd_evaluate(const CommonOptions &opts)
{
  const auto config = load_config(opts);
  const auto result = run_experiment(config);
  emit(opts.out, result.to_csv());
  if (!opts.out.empty()) {
    std::cout << result.to_table();
  }
  return result.failures.empty() ? 0 : 2;
}

int cmd_ic_test(const CommonOptions &opts)
{
  const auto config = load_config(opts);
  config.validate();
  const auto data   = prepare_data(config, 0);
  const auto models = train_models(config, data, 0, config.strategies);

  std::ostringstream csv;
  csv << IcReport::csv_header() << "\n";
  int status = 0;
  for (const auto &name : config.strategies) {
    try {
      const auto strategy = make_strategy(name, options_for(config, name, models));
      const auto report   = ic_failure_rate(*strategy, data.test, config.ic_ads_per_auction,
                                            config.ic_factors, config.master_seed);
      csv << report.csv_row() << "\n";
    } catch (const std::exception &e) {
      std::cerr << "ic-test: strategy " << name << " failed: " << e.what() << "\n";
      status = 2;
    }
  }
  emit(opts.out, csv.str());
  return status;
}

int cmd_oracle_check(const CommonOptions &opts)
{
  const auto config  = load_config(opts);
  const auto results = run_oracle_suite(config.master_seed);

  std::ostringstream csv;
  csv << "check,passed,detail\n";
  bool ok = true;
  for (const auto &r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (!r.detail.empty()) {
      std::cout << " (" << r.detail << ")";
    }
    std::cout << "\n";
    csv << r.name << ',' << (r.passed ? 1 : 0) << ",\"" << r.detail << "\"\n";
    ok = ok && r.passed;
  }
  if (!opts.out.empty()) {
    write_file(opts.out, csv.str());
  }
  return ok ? 0 : 1;
}

int cmd_report(const CommonOptions &opts, std::size_t n_auctions)
{
  const auto config = load_config(opts);
  config.validate();
  const auto data   = prepare_data(config, 0);
  const auto models = train_models(config, data, 0, config.strategies);

  std::ostringstream csv;
  csv << "auction_id,strategy,ad_id,rank,score,selected,bid,coarse_ctr,refined_ctr,click_value\n";
  const std::size_t shown = std::min(n_auctions, data.test.size());
  for (const auto &name : config.strategies) {
    const auto strategy = make_strategy(name, options_for(config, name, models));
    for (std::size_t a = 0; a < shown; ++a) {
      const auto &inst = data.test[a];
      const auto  sel  = strategy->select(inst);
      const auto  rank = rank_by_score(sel.scores);
      for (std::size_t r = 0; r < rank.size(); ++r) {
        const std::size_t i  = rank[r];
        const auto       &ad = inst.ads[i];
        csv << inst.auction_id << ',' << name << ',' << ad.ad_id << ',' << r + 1 << ','
            << fmt(sel.scores[i]) << ',' << (sel.contains(i) ? 1 : 0) << ',' << fmt(ad.bid) << ','
            << fmt(ad.coarse_ctr) << ',' << fmt(ad.refined_ctr.value_or(0.0)) << ','
            << fmt(ad.bid * ad.refined_ctr.value_or(0.0)) << "\n";
      }
    }
  }
  emit(opts.out, csv.str());
  return 0;
}

}  // namespace

int run_cli(int argc, const char *const *argv)
{
  CLI::App app{"Two-stage ad auction toolkit: pre-auction selection, GSP, PAS learning"};
  app.require_subcommand(1);

  CommonOptions              gen_opts, train_opts, eval_opts, ic_opts, oracle_opts, report_opts;
  std::optional<std::size_t> gen_n;
  std::string                gen_preset;
  std::string                train_kind = "pas";
  std::size_t                report_n   = 3;

  auto *gen = app.add_subcommand("generate", "write a synthetic auction log");
  add_common(gen, gen_opts, true);
  gen->add_option("--n-auctions", gen_n, "number of auctions (default: config n_auctions)");
  gen->add_option("--preset", gen_preset, "public1-like or public5-like");

  auto *train = app.add_subcommand("train", "fit a PAS, REG or REGCTR scorer and write the model");
  add_common(train, train_opts, true);
  train->add_option("--kind", train_kind, "pas, reg or regctr")
      ->check(CLI::IsMember({"pas", "reg", "regctr"}));

  auto *eval = app.add_subcommand("evaluate", "run the experiment and write the metrics CSV");
  add_common(eval, eval_opts, false);

  auto *ic = app.add_subcommand("ic-test", "bid perturbation tests, one CSV row per strategy");
  add_common(ic, ic_opts, false);

  auto *oracle = app.add_subcommand("oracle-check", "small-instance brute-force verification suite");
  add_common(oracle, oracle_opts, false);

  auto *report = app.add_subcommand("report", "per-auction score and rank traces for plotting");
  add_common(report, report_opts, false);
  report->add_option("--n-auctions", report_n, "test auctions to trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      return cmd_generate(gen_opts, gen_n, gen_preset);
    }
    if (train->parsed()) {
      return cmd_train(train_opts, train_kind);
    }
    if (eval->parsed()) {
      return cmd_evaluate(eval_opts);
    }
    if (ic->parsed()) {
      return cmd_ic_test(ic_opts);
    }
    if (oracle->parsed()) {
      return cmd_oracle_check(oracle_opts);
    }
    if (report->parsed()) {
      return cmd_report(report_opts, report_n);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace preauction
