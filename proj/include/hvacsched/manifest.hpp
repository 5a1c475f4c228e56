#pragma once

#include <cstdint>
#include <string>

#include "hvacsched/config.hpp"
#include "json.hpp"

namespace hvacsched {

// Effective configuration as JSON (numbers stay numeric).
nlohmann::json config_json(const Config& cfg);

// Standard run manifest: command, master seed, kernel backend, config.
nlohmann::json make_manifest(const std::string& command,
                             std::uint64_t master_seed, const Config& cfg);

void write_json(const std::string& path, const nlohmann::json& j);

nlohmann::json read_json(const std::string& path);

}  // namespace hvacsched
