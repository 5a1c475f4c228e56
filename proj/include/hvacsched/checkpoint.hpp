#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hvacsched/netcore.hpp"

// Versioned binary checkpoints. Doubles are stored as their IEEE-754 bit
// patterns in little-endian order, so save -> load round-trips bit-exact.

namespace hvacsched::ckpt {

inline constexpr char kMagic[8] = {'H', 'V', 'S', 'C', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint32_t kKindNetwork = 1;
inline constexpr std::uint32_t kKindComposite = 2;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void raw(const char* p, std::size_t n);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void vec(const std::vector<double>& v);
  void str(const std::string& s);

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  void raw(char* dst, std::size_t n);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::vector<double> vec();
  std::string str();
  void expect_u32(std::uint32_t want, const char* what);

 private:
  std::istream& in_;
};

// File header: magic, format version, payload kind.
void write_header(Writer& w, std::uint32_t kind);
void read_header(Reader& r, std::uint32_t kind);

// Network record (no header), usable standalone or embedded.
void save_network(Writer& w, const NetworkModel& m);
NetworkModel load_network(Reader& r);

void save_network_file(const std::string& path, const NetworkModel& m);
NetworkModel load_network_file(const std::string& path);

}  // namespace hvacsched::ckpt
