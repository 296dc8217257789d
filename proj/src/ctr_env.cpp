#include "preauction/ctr_env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace preauction {

void EnvConfig::validate() const
{
  if (n_slots == 0 || n_slots > subset_size || subset_size > n_ads) {
    throw std::invalid_argument("env config: require 1 <= K <= M <= N");
  }
  if (!(bid_low >= 0.0) || !(bid_high >= bid_low) || !std::isfinite(bid_high)) {
    throw std::invalid_argument("env config: require 0 <= bid_low <= bid_high");
  }
  if (support_size == 0) {
    throw std::invalid_argument("env config: support_size must be >= 1");
  }
  if (!(gap_factor >= 0.0) || !std::isfinite(gap_factor)) {
    throw std::invalid_argument("env config: gap_factor must be finite and >= 0");
  }
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("env config: eta must lie in (0, 1]");
  }
  if (!(light_model_weight >= 0.0 && light_model_weight <= 1.0)) {
    throw std::invalid_argument("env config: light_model_weight must lie in [0, 1]");
  }
  if (n_ad_features == 0 || n_user_features == 0) {
    throw std::invalid_argument("env config: feature dimensions must be positive");
  }
}

EnvConfig public1_like()
{
  EnvConfig c;
  c.eta                = 0.01;
  c.gap_factor         = 2.0;
  c.light_model_weight = 0.6;
  return c;
}

EnvConfig public5_like()
{
  EnvConfig c;
  c.eta                = 0.05;
  c.gap_factor         = 1.0;
  c.light_model_weight = 0.4;
  return c;
}

EnvConfig preset_config(const std::string &name)
{
  if (name == "public1-like") {
    return public1_like();
  }
  if (name == "public5-like") {
    return public5_like();
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

std::vector<double> SimpaInstance::coarse_ctrs() const
{
  std::vector<double> out(bids.size(), 0.0);
  if (joint) {
    for (std::size_t r = 0; r < joint->outcomes.size(); ++r) {
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += joint->probabilities[r] * joint->outcomes[r][i];
      }
    }
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = dists[i].mean();
  }
  return out;
}

void SimpaInstance::validate() const
{
  if (k == 0) {
    throw std::invalid_argument("simpa instance: K must be positive");
  }
  for (double b : bids) {
    if (!(b >= 0.0) || !std::isfinite(b)) {
      throw std::invalid_argument("simpa instance: bids must be finite and nonnegative");
    }
  }
  if (joint) {
    if (joint->outcomes.size() != joint->probabilities.size() || joint->outcomes.empty()) {
      throw std::invalid_argument("simpa instance: malformed joint table");
    }
    // Compensated sum: a table of 2^20 equal rows must still total 1 within 1e-12.
    double total = 0.0;
    double carry = 0.0;
    for (std::size_t r = 0; r < joint->outcomes.size(); ++r) {
      if (joint->outcomes[r].size() != bids.size()) {
        throw std::invalid_argument("simpa instance: joint row width differs from N");
      }
      for (double c : joint->outcomes[r]) {
        if (!(c >= 0.0 && c <= 1.0)) {
          throw std::invalid_argument("simpa instance: joint ctr outside [0, 1]");
        }
      }
      const double y = joint->probabilities[r] - carry;
      const double t = total + y;
      carry          = (t - total) - y;
      total          = t;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("simpa instance: joint probabilities do not sum to 1");
    }
  } else if (dists.size() != bids.size()) {
    throw std::invalid_argument("simpa instance: need one distribution per bid");
  }
}

double coarse_ctr(const CtrDistribution &dist)
{
  return dist.mean();
}

double calibrate_downsampled(double p, double eta)
{
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("calibrate_downsampled: p must lie in (0, 1)");
  }
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("calibrate_downsampled: eta must lie in (0, 1]");
  }
  return p / (p + (1.0 - p) / eta);
}

std::vector<double> sample_realization(std::span<const CtrDistribution> dists, Rng &rng)
{
  std::vector<double> out;
  out.reserve(dists.size());
  for (const auto &d : dists) {
    // Always consume one draw per ad so streams stay aligned across ads.
    out.push_back(d.quantile(rng.uniform()));
  }
  return out;
}

std::vector<double> sample_joint(const SimpaInstance &instance, Rng &rng)
{
  if (!instance.joint) {
    return sample_realization(instance.dists, rng);
  }
  const double u          = rng.uniform();
  double       cumulative = 0.0;
  const auto  &table      = *instance.joint;
  for (std::size_t r = 0; r < table.outcomes.size(); ++r) {
    cumulative += table.probabilities[r];
    if (u < cumulative) {
      return table.outcomes[r];
    }
  }
  return table.outcomes.back();
}

namespace {

double sigmoid(double x)
{
  return 1.0 / (1.0 + std::exp(-x));
}

// Calibration over the whole real line of logits; keeps p strictly inside
// (0, 1) so the calibration formula's preconditions hold.
double calibrated_ctr(double logit, double eta)
{
  const double p = std::clamp(sigmoid(logit), 1e-12, 1.0 - 1e-12);
  return calibrate_downsampled(p, eta);
}

}  // namespace

AuctionInstance generate_auction(const EnvConfig &config, Rng &rng)
{
  config.validate();
  const std::size_t da    = config.n_ad_features;
  const std::size_t du    = config.n_user_features;
  const std::size_t cross = std::min(da, du) - 1;

  AuctionInstance inst;
  inst.n_slots     = config.n_slots;
  inst.subset_size = config.subset_size;
  inst.user_features.resize(du);
  for (auto &u : inst.user_features) {
    u = rng.normal();
  }
  const double activity = config.activity * inst.user_features[0];

  inst.ads.reserve(config.n_ads);
  inst.ctr_table.reserve(config.n_ads);
  std::vector<double> values(config.support_size);
  std::vector<double> weights(config.support_size);
  for (std::size_t i = 0; i < config.n_ads; ++i) {
    AdRecord ad;
    ad.ad_id = static_cast<std::int64_t>(i);
    ad.bid   = rng.uniform(config.bid_low, config.bid_high);
    ad.partial_features.resize(da + 1);
    for (std::size_t f = 0; f < da; ++f) {
      ad.partial_features[f] = rng.normal();
    }
    ad.partial_features[da] = rng.normal();  // auxiliary noise
    const auto &a           = ad.partial_features;

    double cross_term = 0.0;
    for (std::size_t f = 1; f <= cross; ++f) {
      cross_term += a[f] * inst.user_features[f];
    }
    if (cross > 0) {
      cross_term /= std::sqrt(static_cast<double>(cross));
    }
    const double light_logit = config.base_logit + config.popularity * a[0] + activity;
    const double logit       = light_logit + config.cross_strength * cross_term;
    const double spread      = config.gap_factor * 0.5 * (1.0 + std::tanh(a[da - 1]));

    for (std::size_t s = 0; s < config.support_size; ++s) {
      const double jitter = config.support_size == 1 ? 0.0 : rng.uniform(-1.0, 1.0);
      values[s]           = calibrated_ctr(logit + spread * jitter, config.eta);
      weights[s]          = rng.uniform(0.2, 1.0);
    }
    auto dist = CtrDistribution::from_weighted(values, weights);

    const double mean = dist.mean();
    if (config.light_model_weight == 0.0) {
      ad.coarse_ctr = mean;
    } else {
      const double light = calibrated_ctr(light_logit, config.eta);
      const double w     = config.light_model_weight;
      ad.coarse_ctr      = std::exp((1.0 - w) * std::log(mean) + w * std::log(light));
    }
    ad.ctr_dist_id = inst.ctr_table.size();
    inst.ctr_table.push_back(std::move(dist));
    inst.ads.push_back(std::move(ad));
  }
  return inst;
}

SimpaInstance to_simpa(const AuctionInstance &instance)
{
  SimpaInstance s;
  s.bids = instance.bids();
  s.dists.reserve(instance.size());
  for (std::size_t i = 0; i < instance.size(); ++i) {
    s.dists.push_back(instance.distribution(i));
  }
  s.m = instance.subset_size;
  s.k = instance.n_slots;
  return s;
}

SimpaInstance generate_example1(const Example1Params &params)
{
  const std::size_t m = params.m;
  if (m == 0 || params.k == 0 || params.k > m || params.n < m + 1) {
    throw std::invalid_argument("example1: require 1 <= K <= M < N");
  }
  if (!(params.t >= 1.0) || !std::isfinite(params.t)) {
    throw std::invalid_argument("example1: t must be >= 1");
  }
  std::vector<double> det = params.deterministic_values;
  if (det.empty()) {
    for (std::size_t i = 0; i < m; ++i) {
      det.push_back(m <= 24 ? 1.0 - 0.04 * static_cast<double>(i)
                            : std::pow(0.96, static_cast<double>(i)));
    }
  }
  if (det.size() != m) {
    throw std::invalid_argument("example1: need M deterministic values");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(det[i] > 0.0) || (i > 0 && !(det[i] < det[i - 1]))) {
      throw std::invalid_argument("example1: deterministic values must be positive and descending");
    }
  }
  const double coarse =
    params.coarse_value.value_or(det.back() > 0.01 ? det.back() - 0.01 : det.back() / 2);
  if (!(coarse > 0.0 && coarse < det.back())) {
    throw std::invalid_argument("example1: coarse value must lie in (0, value of ad M)");
  }
  if (!(params.epsilon >= 0.0 && params.epsilon < coarse)) {
    throw std::invalid_argument("example1: epsilon must lie in [0, coarse value)");
  }
  if (params.enforce_gap && !(params.t * coarse > det[params.k - 1])) {
    throw std::invalid_argument("example1: t too small; need t * coarse > value of ad K");
  }

  // Common bid large enough that every click value maps to a ctr in [0, 1].
  const double bid = std::max({1.0, det.front(), params.t * coarse});

  SimpaInstance s;
  s.m = m;
  s.k = params.k;
  for (double v : det) {
    s.bids.push_back(bid);
    s.dists.push_back(CtrDistribution::deterministic(v / bid));
  }
  const double high[2] = {params.t * coarse / bid, params.epsilon / bid};
  const double prob[2] = {1.0 / params.t, 1.0 - 1.0 / params.t};
  s.bids.push_back(bid);
  s.dists.push_back(CtrDistribution::from_weighted(high, prob));
  double tail = coarse;
  for (std::size_t i = m + 1; i < params.n; ++i) {
    tail *= 0.9;
    s.bids.push_back(bid);
    s.dists.push_back(CtrDistribution::deterministic(tail / bid));
  }
  return s;
}

SimpaInstance set_cover_to_simpa(std::size_t universe_size,
                                 const std::vector<std::set<std::size_t>> &subsets,
                                 std::size_t m)
{
  if (universe_size == 0) {
    throw std::invalid_argument("set cover: empty universe");
  }
  if (universe_size > 20) {
    throw std::invalid_argument("set cover: universe larger than 20 elements (joint table 2^L - 1 rows)");
  }
  std::vector<std::uint32_t> masks;
  for (const auto &s : subsets) {
    if (s.empty()) {
      throw std::invalid_argument("set cover: subsets must be nonempty");
    }
    std::uint32_t mask = 0;
    for (std::size_t e : s) {
      if (e < 1 || e > universe_size) {
        throw std::invalid_argument("set cover: element outside {1..L}");
      }
      mask |= 1u << (e - 1);
    }
    masks.push_back(mask);
  }

  const std::uint32_t rows = (1u << universe_size) - 1;
  SimpaInstance       inst;
  inst.bids.assign(subsets.size(), 1.0);
  inst.m = m;
  inst.k = 1;
  JointTable table;
  table.outcomes.reserve(rows);
  table.probabilities.assign(rows, 1.0 / static_cast<double>(rows));
  for (std::uint32_t sample = 1; sample <= rows; ++sample) {
    std::vector<double> row(masks.size());
    for (std::size_t i = 0; i < masks.size(); ++i) {
      row[i] = (masks[i] & sample) != 0 ? 1.0 : 0.0;
    }
    table.outcomes.push_back(std::move(row));
  }
  inst.joint = std::move(table);
  return inst;
}

}  // namespace preauction
