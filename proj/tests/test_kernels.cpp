#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "hvacsched/kernels.hpp"

namespace kern = hvacsched::kern;

namespace {

struct BackendGuard {
  kern::Backend saved = kern::active_backend();
  ~BackendGuard() { kern::set_backend(saved); }
};

// Self-contained xorshift so kernel tests do not depend on the project RNG.
struct Rand {
  std::uint64_t s;
  explicit Rand(std::uint64_t seed) : s(seed ^ 0x9e3779b97f4a7c15ull) {}
  std::uint64_t next() {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return s;
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double signed_unit() { return 2.0 * uniform() - 1.0; }
  std::vector<double> vec(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = signed_unit();
    return v;
  }
};

bool close(double a, double b, double tol = 1e-12) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

bool close_vec(const std::vector<double>& a, const std::vector<double>& b,
               double tol = 1e-12) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!close(a[i], b[i], tol)) return false;
  }
  return true;
}

const std::vector<std::size_t> kSizes{1, 2, 3, 4, 5, 7, 8, 13, 31, 32, 33, 67};

}  // namespace

TEST_CASE("scalar matvec matches a hand-computed product") {
  BackendGuard g;
  kern::set_backend(kern::Backend::scalar);
  // A = [1 2 3; 4 5 6], x = (1, -1, 2)
  const std::vector<double> a{1, 2, 3, 4, 5, 6};
  const std::vector<double> x{1, -1, 2};
  std::vector<double> y(2, 100.0);
  kern::matvec(a.data(), 2, 3, x.data(), y.data());
  CHECK(y[0] == 5.0);
  CHECK(y[1] == 11.0);
  kern::matvec(a.data(), 2, 3, x.data(), y.data(), true);
  CHECK(y[0] == 10.0);
  CHECK(y[1] == 22.0);

  std::vector<double> yt(3, 0.0);
  const std::vector<double> w{1, 2};
  kern::matvec_t(a.data(), 2, 3, w.data(), yt.data());
  CHECK(yt[0] == 9.0);
  CHECK(yt[1] == 12.0);
  CHECK(yt[2] == 15.0);

  std::vector<double> m(6, 1.0);
  kern::ger(m.data(), 2, 3, 2.0, w.data(), x.data());
  CHECK(m == std::vector<double>{3, -1, 5, 5, -3, 9});

  CHECK(kern::dot(x.data(), yt.data(), 3) == 27.0);
  CHECK(kern::norm2_sq(x.data(), 3) == 6.0);

  std::vector<double> z{1, 2, 3};
  kern::axpy(0.5, x.data(), z.data(), 3);
  CHECK(z == std::vector<double>{1.5, 1.5, 4});
  kern::scale(2.0, z.data(), 3);
  CHECK(z == std::vector<double>{3, 3, 8});
}

TEST_CASE("avx2 lane matches the scalar lane") {
  if (!kern::backend_available(kern::Backend::avx2)) {
    MESSAGE("avx2 lane not available; skipping equivalence checks");
    return;
  }
  BackendGuard g;
  Rand rng(42);

  for (std::size_t rows : kSizes) {
    for (std::size_t cols : kSizes) {
      const auto a = rng.vec(rows * cols);
      const auto x = rng.vec(cols);
      const auto xr = rng.vec(rows);
      const auto y0r = rng.vec(rows);
      const auto y0c = rng.vec(cols);
      const double alpha = rng.signed_unit();

      for (bool acc : {false, true}) {
        auto ys = y0r;
        auto yv = y0r;
        kern::set_backend(kern::Backend::scalar);
        kern::matvec(a.data(), rows, cols, x.data(), ys.data(), acc);
        kern::set_backend(kern::Backend::avx2);
        kern::matvec(a.data(), rows, cols, x.data(), yv.data(), acc);
        CHECK(close_vec(ys, yv));

        auto ts = y0c;
        auto tv = y0c;
        kern::set_backend(kern::Backend::scalar);
        kern::matvec_t(a.data(), rows, cols, xr.data(), ts.data(), acc);
        kern::set_backend(kern::Backend::avx2);
        kern::matvec_t(a.data(), rows, cols, xr.data(), tv.data(), acc);
        CHECK(close_vec(ts, tv));
      }

      auto as = a;
      auto av = a;
      kern::set_backend(kern::Backend::scalar);
      kern::ger(as.data(), rows, cols, alpha, xr.data(), y0c.data());
      kern::set_backend(kern::Backend::avx2);
      kern::ger(av.data(), rows, cols, alpha, xr.data(), y0c.data());
      CHECK(close_vec(as, av));
    }
  }

  for (std::size_t n : kSizes) {
    const auto x = rng.vec(n);
    const auto y = rng.vec(n);
    const double alpha = rng.signed_unit();

    kern::set_backend(kern::Backend::scalar);
    const double ds = kern::dot(x.data(), y.data(), n);
    const double ns = kern::norm2_sq(x.data(), n);
    auto zs = y;
    kern::axpy(alpha, x.data(), zs.data(), n);
    auto ws = x;
    kern::scale(alpha, ws.data(), n);

    kern::set_backend(kern::Backend::avx2);
    CHECK(close(ds, kern::dot(x.data(), y.data(), n)));
    CHECK(close(ns, kern::norm2_sq(x.data(), n)));
    auto zv = y;
    kern::axpy(alpha, x.data(), zv.data(), n);
    CHECK(close_vec(zs, zv));
    auto wv = x;
    kern::scale(alpha, wv.data(), n);
    CHECK(close_vec(ws, wv));
  }
}

TEST_CASE("backend selection reports and enforces availability") {
  BackendGuard g;
  kern::set_backend(kern::Backend::scalar);
  CHECK(kern::active_backend() == kern::Backend::scalar);
  CHECK(kern::backend_name() == "scalar");
  CHECK(kern::backend_available(kern::Backend::scalar));
  if (kern::backend_available(kern::Backend::avx2)) {
    kern::set_backend(kern::Backend::avx2);
    CHECK(kern::backend_name() == "avx2");
  } else {
    CHECK_THROWS(kern::set_backend(kern::Backend::avx2));
  }
}
