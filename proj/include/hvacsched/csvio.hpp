#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hvacsched {

// Shortest representation that round-trips the exact double.
std::string format_double(double v);

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Column index by header name; throws if absent.
  std::size_t col(std::string_view name) const;
};

// Strict numeric CSV: every cell must parse as a finite-or-not double via
// from_chars, every row must match the header width.
Csv read_csv(const std::string& path);

void write_csv(const std::string& path, const Csv& table);

}  // namespace hvacsched
