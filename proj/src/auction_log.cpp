#include "preauction/auction_log.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>

namespace preauction {

namespace {

using Json = nlohmann::ordered_json;

double finite_number(const Json &j, const char *field)
{
  if (!j.is_number()) {
    throw std::invalid_argument(std::string("field '") + field + "' must be a number");
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string("field '") + field + "' is not finite");
  }
  return v;
}

std::vector<double> number_array(const Json &j, const char *field)
{
  if (!j.is_array()) {
    throw std::invalid_argument(std::string("field '") + field + "' must be an array");
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto &v : j) {
    out.push_back(finite_number(v, field));
  }
  return out;
}

std::size_t count_field(const Json &j, const char *field)
{
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw std::invalid_argument(std::string("field '") + field +
                                "' must be a nonnegative integer");
  }
  return j.get<std::size_t>();
}

const Json &required(const Json &obj, const char *field)
{
  const auto it = obj.find(field);
  if (it == obj.end()) {
    throw std::invalid_argument(std::string("missing field '") + field + "'");
  }
  return *it;
}

}  // namespace

std::string auction_to_json_line(const AuctionInstance &instance)
{
  Json j;
  j["schema"]        = kAuctionLogSchema;
  j["auction_id"]    = instance.auction_id;
  j["k"]             = instance.n_slots;
  j["m"]             = instance.subset_size;
  j["user_features"] = instance.user_features;
  Json table         = Json::array();
  for (const auto &dist : instance.ctr_table) {
    Json atoms = Json::array();
    for (const auto &atom : dist.support()) {
      atoms.push_back(Json::array({atom.value, atom.probability}));
    }
    table.push_back(std::move(atoms));
  }
  j["ctr_table"] = std::move(table);
  Json ads       = Json::array();
  for (const auto &ad : instance.ads) {
    Json a;
    a["ad_id"]            = ad.ad_id;
    a["bid"]              = ad.bid;
    a["partial_features"] = ad.partial_features;
    a["coarse_ctr"]       = ad.coarse_ctr;
    a["ctr_dist_id"]      = ad.ctr_dist_id ? Json(*ad.ctr_dist_id) : Json(nullptr);
    a["refined_ctr"]      = ad.refined_ctr ? Json(*ad.refined_ctr) : Json(nullptr);
    ads.push_back(std::move(a));
  }
  j["ads"] = std::move(ads);
  return j.dump();
}

AuctionInstance auction_from_json_line(const std::string &line)
{
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::parse_error &e) {
    throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw std::invalid_argument("record must be a JSON object");
  }
  const auto &schema = required(j, "schema");
  if (!schema.is_string() || schema.get<std::string>() != kAuctionLogSchema) {
    throw std::invalid_argument(std::string("unsupported schema (expected ") + kAuctionLogSchema +
                                ")");
  }

  AuctionInstance inst;
  const auto &id = required(j, "auction_id");
  if (!id.is_number_integer()) {
    throw std::invalid_argument("field 'auction_id' must be an integer");
  }
  inst.auction_id    = id.get<std::int64_t>();
  inst.n_slots       = count_field(required(j, "k"), "k");
  inst.subset_size   = count_field(required(j, "m"), "m");
  inst.user_features = number_array(required(j, "user_features"), "user_features");

  const auto &table = required(j, "ctr_table");
  if (!table.is_array()) {
    throw std::invalid_argument("field 'ctr_table' must be an array");
  }
  for (const auto &atoms : table) {
    if (!atoms.is_array()) {
      throw std::invalid_argument("ctr_table entries must be arrays of [value, probability]");
    }
    std::vector<CtrAtom> support;
    for (const auto &pair : atoms) {
      if (!pair.is_array() || pair.size() != 2) {
        throw std::invalid_argument("ctr_table atoms must be [value, probability] pairs");
      }
      support.push_back({finite_number(pair[0], "ctr_table"), finite_number(pair[1], "ctr_table")});
    }
    inst.ctr_table.emplace_back(std::move(support));
  }

  const auto &ads = required(j, "ads");
  if (!ads.is_array()) {
    throw std::invalid_argument("field 'ads' must be an array");
  }
  for (const auto &a : ads) {
    if (!a.is_object()) {
      throw std::invalid_argument("ads entries must be objects");
    }
    AdRecord ad;
    const auto &ad_id = required(a, "ad_id");
    if (!ad_id.is_number_integer()) {
      throw std::invalid_argument("field 'ad_id' must be an integer");
    }
    ad.ad_id            = ad_id.get<std::int64_t>();
    ad.bid              = finite_number(required(a, "bid"), "bid");
    ad.partial_features = number_array(required(a, "partial_features"), "partial_features");
    ad.coarse_ctr       = finite_number(required(a, "coarse_ctr"), "coarse_ctr");
    const auto &dist_id = required(a, "ctr_dist_id");
    if (!dist_id.is_null()) {
      ad.ctr_dist_id = count_field(dist_id, "ctr_dist_id");
    }
    const auto &refined = required(a, "refined_ctr");
    if (!refined.is_null()) {
      ad.refined_ctr = finite_number(refined, "refined_ctr");
    }
    inst.ads.push_back(std::move(ad));
  }
  inst.validate();
  return inst;
}

LogLoadResult load_auction_log(const std::filesystem::path &path, bool strict)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open auction log " + path.string());
  }
  LogLoadResult result;
  std::string   line;
  std::size_t   number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      result.instances.push_back(auction_from_json_line(line));
    } catch (const std::invalid_argument &e) {
      AuctionLogError err(number, e.what());
      if (strict) {
        throw err;
      }
      result.errors.push_back(std::move(err));
    }
  }
  return result;
}

void save_auction_log(const std::filesystem::path &path, std::span<const AuctionInstance> instances)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write auction log " + path.string());
  }
  for (const auto &inst : instances) {
    out << auction_to_json_line(inst) << '\n';
  }
  if (!out) {
    throw std::runtime_error("failed writing auction log " + path.string());
  }
}

}  // namespace preauction
