#include "hvacsched/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace hvacsched::ckpt {

static_assert(std::numeric_limits<double>::is_iec559 && sizeof(double) == 8,
              "checkpoints require IEEE-754 binary64");

void Writer::raw(const char* p, std::size_t n) {
  out_.write(p, static_cast<std::streamsize>(n));
}

void Writer::u32(std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  raw(b, 4);
}

void Writer::u64(std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  raw(b, 8);
}

void Writer::f64(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  u64(bits);
}

void Writer::vec(const std::vector<double>& v) {
  u64(v.size());
  for (double x : v) f64(x);
}

void Writer::str(const std::string& s) {
  u64(s.size());
  raw(s.data(), s.size());
}

void Reader::raw(char* dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) {
    throw std::runtime_error("checkpoint truncated");
  }
}

std::uint32_t Reader::u32() {
  unsigned char b[4];
  raw(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t Reader::u64() {
  unsigned char b[8];
  raw(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double Reader::f64() {
  const std::uint64_t bits = u64();
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::vector<double> Reader::vec() {
  const std::uint64_t n = u64();
  if (n > (1u << 28)) throw std::runtime_error("checkpoint tensor too large");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = f64();
  return v;
}

std::string Reader::str() {
  const std::uint64_t n = u64();
  if (n > (1u << 20)) throw std::runtime_error("checkpoint string too large");
  std::string s(static_cast<std::size_t>(n), '\0');
  if (n > 0) raw(s.data(), static_cast<std::size_t>(n));
  return s;
}

void Reader::expect_u32(std::uint32_t want, const char* what) {
  const std::uint32_t got = u32();
  if (got != want) {
    throw std::runtime_error("checkpoint " + std::string(what) +
                             " mismatch: expected " + std::to_string(want) +
                             ", got " + std::to_string(got));
  }
}

void write_header(Writer& w, std::uint32_t kind) {
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  w.u32(kind);
}

void read_header(Reader& r, std::uint32_t kind) {
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic)");
  }
  r.expect_u32(kVersion, "format version");
  r.expect_u32(kind, "payload kind");
}

void save_network(Writer& w, const NetworkModel& m) {
  w.u32(static_cast<std::uint32_t>(m.spec.n_features));
  w.u32(static_cast<std::uint32_t>(m.spec.n_layers));
  w.u32(static_cast<std::uint32_t>(m.spec.n_hidden));
  w.u32(static_cast<std::uint32_t>(m.spec.seq_len));
  w.u32(static_cast<std::uint32_t>(m.spec.n_outputs));
  for (const auto& l : m.layers) {
    w.u32(static_cast<std::uint32_t>(l.in_dim));
    w.u32(static_cast<std::uint32_t>(l.hidden));
    w.vec(l.w);
    w.vec(l.b);
  }
  w.vec(m.head_w);
  w.vec(m.head_b);
  w.vec(m.in_norm.lo);
  w.vec(m.in_norm.hi);
  w.vec(m.out_norm.lo);
  w.vec(m.out_norm.hi);
}

NetworkModel load_network(Reader& r) {
  NetworkModel m;
  m.spec.n_features = static_cast<int>(r.u32());
  m.spec.n_layers = static_cast<int>(r.u32());
  m.spec.n_hidden = static_cast<int>(r.u32());
  m.spec.seq_len = static_cast<int>(r.u32());
  m.spec.n_outputs = static_cast<int>(r.u32());
  m.spec.validate();
  m.layers.resize(static_cast<std::size_t>(m.spec.n_layers));
  for (auto& l : m.layers) {
    l.in_dim = static_cast<int>(r.u32());
    l.hidden = static_cast<int>(r.u32());
    l.w = r.vec();
    l.b = r.vec();
    const std::size_t want_w = static_cast<std::size_t>(4 * l.hidden) *
                               static_cast<std::size_t>(l.in_dim + l.hidden);
    if (l.hidden != m.spec.n_hidden || l.w.size() != want_w ||
        l.b.size() != static_cast<std::size_t>(4 * l.hidden)) {
      throw std::runtime_error("checkpoint layer shape inconsistent");
    }
  }
  m.head_w = r.vec();
  m.head_b = r.vec();
  m.in_norm.lo = r.vec();
  m.in_norm.hi = r.vec();
  m.out_norm.lo = r.vec();
  m.out_norm.hi = r.vec();
  const std::size_t o = static_cast<std::size_t>(m.spec.n_outputs);
  const std::size_t f = static_cast<std::size_t>(m.spec.n_features);
  if (m.head_w.size() != o * static_cast<std::size_t>(m.spec.n_hidden) ||
      m.head_b.size() != o || m.in_norm.lo.size() != f ||
      m.in_norm.hi.size() != f || m.out_norm.lo.size() != o ||
      m.out_norm.hi.size() != o) {
    throw std::runtime_error("checkpoint head or normalizer shape inconsistent");
  }
  return m;
}

void save_network_file(const std::string& path, const NetworkModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  Writer w(out);
  write_header(w, kKindNetwork);
  save_network(w, m);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

NetworkModel load_network_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  Reader r(in);
  read_header(r, kKindNetwork);
  return load_network(r);
}

}  // namespace hvacsched::ckpt
