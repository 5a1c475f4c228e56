#include "hvacsched/manifest.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include "hvacsched/kernels.hpp"

namespace hvacsched {

nlohmann::json config_json(const Config& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : cfg.kv) {
    double num = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), num);
    if (ec == std::errc{} && ptr == v.data() + v.size()) {
      j[k] = num;
    } else {
      j[k] = v;
    }
  }
  return j;
}

nlohmann::json make_manifest(const std::string& command,
                             std::uint64_t master_seed, const Config& cfg) {
  nlohmann::json j;
  j["tool"] = "hvacsched";
  j["command"] = command;
  j["master_seed"] = master_seed;
  j["kernel_backend"] = std::string(kern::backend_name());
  j["config"] = config_json(cfg);
  return j;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write json: " + path);
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("write failed: " + path);
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open json: " + path);
  nlohmann::json j;
  f >> j;
  return j;
}

}  // namespace hvacsched
