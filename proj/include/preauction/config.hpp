#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace preauction {

/// Flat `key = value` settings. Lines starting with '#' and blank lines are
/// ignored; later keys override earlier ones.
using ConfigMap = std::map<std::string, std::string>;

/// Throws std::runtime_error naming the path (missing file) or the line
/// number (no '=' or empty key).
ConfigMap read_config_file(const std::filesystem::path &path);
ConfigMap parse_config_text(const std::string &text);

/// Typed accessors; throw std::invalid_argument naming the key on bad values.
double                   parse_double(const std::string &key, const std::string &value);
std::size_t              parse_size(const std::string &key, const std::string &value);
std::uint64_t            parse_u64(const std::string &key, const std::string &value);
std::vector<std::string> parse_list(const std::string &value);  // comma separated
std::vector<std::size_t> parse_size_list(const std::string &key, const std::string &value);
std::vector<double>      parse_double_list(const std::string &key, const std::string &value);

}  // namespace preauction
