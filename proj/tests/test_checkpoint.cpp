#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "hvacsched/checkpoint.hpp"
#include "hvacsched/netcore.hpp"
#include "hvacsched/rng.hpp"

using namespace hvacsched;

namespace {

NetworkModel sample_model() {
  NetworkSpec spec;
  spec.n_features = 4;
  spec.n_layers = 2;
  spec.n_hidden = 5;
  spec.seq_len = 7;
  NetworkModel m = make_network(spec, 77);
  m.in_norm.lo = {-3.0, 0.0, 15.0, -1.5};
  m.in_norm.hi = {2.0, 50.0, 35.0, 0.25};
  m.out_norm.lo = {18.0};
  m.out_norm.hi = {31.0};
  return m;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("network checkpoints round-trip bit-exact") {
  const NetworkModel m = sample_model();
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  ckpt::Writer w(buf);
  ckpt::write_header(w, ckpt::kKindNetwork);
  ckpt::save_network(w, m);

  ckpt::Reader r(buf);
  ckpt::read_header(r, ckpt::kKindNetwork);
  const NetworkModel back = ckpt::load_network(r);

  CHECK(back.spec.n_features == m.spec.n_features);
  CHECK(back.spec.n_layers == m.spec.n_layers);
  CHECK(back.spec.n_hidden == m.spec.n_hidden);
  CHECK(back.spec.seq_len == m.spec.seq_len);
  CHECK(back.spec.n_outputs == m.spec.n_outputs);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    CHECK(back.layers[l].w == m.layers[l].w);
    CHECK(back.layers[l].b == m.layers[l].b);
  }
  CHECK(back.head_w == m.head_w);
  CHECK(back.head_b == m.head_b);
  CHECK(back.in_norm.lo == m.in_norm.lo);
  CHECK(back.in_norm.hi == m.in_norm.hi);
  CHECK(back.out_norm.lo == m.out_norm.lo);
  CHECK(back.out_norm.hi == m.out_norm.hi);

  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> win(4 * 7);
    for (std::size_t k = 0; k < win.size(); ++k) {
      const int j = static_cast<int>(k % 4);
      win[k] = rng.uniform(m.in_norm.lo[j], m.in_norm.hi[j]);
    }
    CHECK(forward(back, win)[0] == forward(m, win)[0]);
  }
}

TEST_CASE("special double values survive the byte encoding") {
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  ckpt::Writer w(buf);
  const std::vector<double> vals = {0.0,      -0.0,   1.0 / 3.0, 1e-308,
                                    -2.5e307, 0.1,    6.02e23,   -1e-12,
                                    3.14159,  5e-324};
  w.vec(vals);
  ckpt::Reader r(buf);
  const std::vector<double> back = r.vec();
  REQUIRE(back.size() == vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    CHECK(back[i] == vals[i]);
    CHECK(std::signbit(back[i]) == std::signbit(vals[i]));
  }
}

TEST_CASE("file checkpoints round-trip through disk") {
  const NetworkModel m = sample_model();
  const auto path = temp_file("hvacsched_ckpt_test.bin");
  ckpt::save_network_file(path.string(), m);
  const NetworkModel back = ckpt::load_network_file(path.string());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    CHECK(back.layers[l].w == m.layers[l].w);
  }
  CHECK(back.head_w == m.head_w);
  std::filesystem::remove(path);
}

TEST_CASE("corrupted and mismatched checkpoints are rejected") {
  const NetworkModel m = sample_model();
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  ckpt::Writer w(buf);
  ckpt::write_header(w, ckpt::kKindNetwork);
  ckpt::save_network(w, m);
  const std::string bytes = buf.str();

  {
    std::stringstream bad(std::ios::in | std::ios::out | std::ios::binary);
    std::string s = bytes;
    s[0] = 'X';
    bad.str(s);
    ckpt::Reader r(bad);
    CHECK_THROWS_WITH_AS(ckpt::read_header(r, ckpt::kKindNetwork),
                         doctest::Contains("bad magic"), std::runtime_error);
  }
  {
    std::stringstream bad(std::ios::in | std::ios::out | std::ios::binary);
    bad.str(bytes.substr(0, bytes.size() / 2));
    ckpt::Reader r(bad);
    ckpt::read_header(r, ckpt::kKindNetwork);
    CHECK_THROWS_WITH_AS(ckpt::load_network(r),
                         doctest::Contains("truncated"), std::runtime_error);
  }
  {
    std::stringstream bad(std::ios::in | std::ios::out | std::ios::binary);
    ckpt::Writer wb(bad);
    ckpt::write_header(wb, ckpt::kKindComposite);
    ckpt::Reader r(bad);
    CHECK_THROWS_WITH_AS(ckpt::read_header(r, ckpt::kKindNetwork),
                         doctest::Contains("payload kind"),
                         std::runtime_error);
  }
  {
    CHECK_THROWS_WITH_AS(ckpt::load_network_file("/nonexistent/path.bin"),
                         doctest::Contains("cannot open"), std::runtime_error);
  }
}

TEST_CASE("scalar encodings are little-endian and length-prefixed") {
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  ckpt::Writer w(buf);
  w.u32(0x01020304u);
  w.u64(0x1122334455667788ull);
  w.str("abc");
  const std::string s = buf.str();
  REQUIRE(s.size() == 4 + 8 + 8 + 3);
  CHECK(static_cast<unsigned char>(s[0]) == 0x04);
  CHECK(static_cast<unsigned char>(s[3]) == 0x01);
  CHECK(static_cast<unsigned char>(s[4]) == 0x88);
  CHECK(static_cast<unsigned char>(s[11]) == 0x11);
  CHECK(s.substr(20) == "abc");

  ckpt::Reader r(buf);
  CHECK(r.u32() == 0x01020304u);
  CHECK(r.u64() == 0x1122334455667788ull);
  CHECK(r.str() == "abc");
}
