#include "hvacsched/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

extern char** environ;

namespace hvacsched {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

bool Config::has(std::string_view key) const {
  return kv.find(std::string(key)) != kv.end();
}

const std::string& Config::str(std::string_view key) const {
  const auto it = kv.find(std::string(key));
  if (it == kv.end()) {
    throw std::runtime_error("unknown config key: " + std::string(key));
  }
  return it->second;
}

double Config::num(std::string_view key) const {
  const std::string& s = str(key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("config key " + std::string(key) +
                             " is not numeric: '" + s + "'");
  }
  return v;
}

int Config::integer(std::string_view key) const {
  const double v = num(key);
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9) {
    throw std::runtime_error("config key " + std::string(key) +
                             " is not an integer: " + str(key));
  }
  return static_cast<int>(r);
}

void Config::set(std::string_view key, std::string_view value) {
  kv[std::string(key)] = std::string(value);
}

void Config::set_num(std::string_view key, double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  set(key, os.str());
}

void Config::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (!has(key)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": unknown config key: " + key);
    }
    set(key, value);
  }
}

void Config::merge_env(const std::string& prefix) {
  for (char** e = environ; *e != nullptr; ++e) {
    const std::string_view entry(*e);
    if (entry.substr(0, prefix.size()) != prefix) continue;
    const std::size_t eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    std::string key(entry.substr(prefix.size(), eq - prefix.size()));
    for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!has(key)) {
      throw std::runtime_error("environment override names unknown config key: " +
                               std::string(entry.substr(0, eq)));
    }
    set(key, std::string(entry.substr(eq + 1)));
  }
}

Config default_config() {
  Config c;
  // Power and ramp limits (kW, kW/h).
  c.set("p_min", "0");
  c.set("p_max", "50");
  c.set("r_l", "-40");
  c.set("r_h", "30");
  // Horizon and comfort window (hours, occupied t_s..t_e inclusive).
  c.set("l_p", "24");
  c.set("t_s", "7");
  c.set("t_e", "19");
  c.set("t_i_min", "22");
  c.set("t_i_max", "24");
  c.set("t_set_min", "15");
  c.set("t_set_max", "35");
  c.set("d_t", "1");
  // Dataset and training schedule.
  c.set("n_d", "200");
  c.set("n_s", "4");
  c.set("n_id", "1200");
  c.set("n_hl_l1", "3");
  c.set("n_hl_l2", "4");
  c.set("n_hl_l3", "3");
  c.set("n_hn_l1", "15");
  c.set("n_hn_l2", "20");
  c.set("n_hn_l3", "20");
  c.set("n_et", "5000");
  c.set("n_eo", "1000");
  c.set("r_t", "0.004");
  c.set("r_o_init", "0.001");
  c.set("r_o_final", "0.0001");
  // Penalty weights and objective form (quadratic or signed).
  c.set("lambda_y", "2.0");
  c.set("lambda_k", "0.5");
  c.set("lambda_h", "7.5");
  c.set("objective_form", "quadratic");
  // Plant: envelope, heat pump, thermostat.
  c.set("c_air", "1.5");
  c.set("c_mass", "12");
  c.set("r_ax", "1.2");
  c.set("r_ma", "0.35");
  c.set("r_xm", "2.5");
  c.set("cop0", "3.5");
  c.set("k_lift", "0.06");
  c.set("plf_c0", "1");
  c.set("plf_c1", "0");
  c.set("plf_c2", "0");
  c.set("k_p", "8");
  c.set("k_i", "0.8");
  c.set("p_o", "0");
  c.set("anti_windup", "50");
  return c;
}

std::string dump_config(const Config& cfg) {
  std::ostringstream os;
  for (const auto& [k, v] : cfg.kv) os << k << " = " << v << '\n';
  return os.str();
}

}  // namespace hvacsched
