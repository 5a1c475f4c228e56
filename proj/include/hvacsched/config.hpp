#pragma once

#include <map>
#include <string>
#include <string_view>

namespace hvacsched {

// Flat key=value configuration. Every tunable has a default; file and
// environment overrides must name existing keys, so typos fail loudly.
struct Config {
  std::map<std::string, std::string> kv;

  bool has(std::string_view key) const;
  const std::string& str(std::string_view key) const;
  double num(std::string_view key) const;
  int integer(std::string_view key) const;

  void set(std::string_view key, std::string_view value);
  void set_num(std::string_view key, double value);

  // `key = value` lines, '#' comments. Keys must already exist.
  void merge_file(const std::string& path);
  // PREFIX_LAMBDA_H=7.5 overrides lambda_h. Keys must already exist.
  void merge_env(const std::string& prefix = "HVACSCHED_");
};

Config default_config();

std::string dump_config(const Config& cfg);

}  // namespace hvacsched
