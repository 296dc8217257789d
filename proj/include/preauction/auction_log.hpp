#pragma once

#include "preauction/auction.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace preauction {

/// Value of the "schema" field on every log line.
inline constexpr const char *kAuctionLogSchema = "preauction.auction/1";

/// One auction per line:
///
///   {"schema": "preauction.auction/1", "auction_id": 7, "k": 5, "m": 10,
///    "user_features": [...],
///    "ctr_table": [[[value, prob], ...], ...],
///    "ads": [{"ad_id": 0, "bid": 1.2, "partial_features": [...],
///             "coarse_ctr": 0.01, "ctr_dist_id": 0, "refined_ctr": null}, ...]}
///
/// Unknown optional fields are written as null rather than dropped.
std::string auction_to_json_line(const AuctionInstance &instance);

/// Parses and validates one line. Throws std::invalid_argument with the
/// reason.
AuctionInstance auction_from_json_line(const std::string &line);

class AuctionLogError : public std::runtime_error
{
public:
  AuctionLogError(std::size_t line, const std::string &message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message)
    , line_(line)
  {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

struct LogLoadResult
{
  std::vector<AuctionInstance> instances;
  std::vector<AuctionLogError> errors;  // skipped lines, 1-based numbers
};

/// Reads a log; blank lines are ignored. In strict mode the first bad line
/// throws AuctionLogError, otherwise it is skipped and reported.
LogLoadResult load_auction_log(const std::filesystem::path &path, bool strict = false);

void save_auction_log(const std::filesystem::path &path, std::span<const AuctionInstance> instances);

}  // namespace preauction
