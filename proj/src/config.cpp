#include "preauction/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace preauction {

namespace {

std::string trim(const std::string &s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string &key, const std::string &value, const char *expected)
{
  throw std::invalid_argument("config key '" + key + "': expected " + expected + ", got '" +
                              value + "'");
}

}  // namespace

ConfigMap parse_config_text(const std::string &text)
{
  ConfigMap          out;
  std::istringstream in(text);
  std::string        line;
  std::size_t        number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') {
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(number) + ": empty key");
    }
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const std::runtime_error &e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

double parse_double(const std::string &key, const std::string &value)
{
  char *end = nullptr;
  errno     = 0;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    bad_value(key, value, "a finite number");
  }
  return v;
}

std::uint64_t parse_u64(const std::string &key, const std::string &value)
{
  char *end = nullptr;
  errno     = 0;
  if (value.empty() || value.front() == '-') {
    bad_value(key, value, "a nonnegative integer");
  }
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) {
    bad_value(key, value, "a nonnegative integer");
  }
  return static_cast<std::uint64_t>(v);
}

std::size_t parse_size(const std::string &key, const std::string &value)
{
  return static_cast<std::size_t>(parse_u64(key, value));
}

std::vector<std::string> parse_list(const std::string &value)
{
  std::vector<std::string> out;
  std::istringstream       in(value);
  std::string              item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string &key, const std::string &value)
{
  std::vector<std::size_t> out;
  for (const auto &item : parse_list(value)) {
    out.push_back(parse_size(key, item));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string &key, const std::string &value)
{
  std::vector<double> out;
  for (const auto &item : parse_list(value)) {
    out.push_back(parse_double(key, item));
  }
  return out;
}

}  // namespace preauction
