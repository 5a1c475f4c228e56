#if defined(HVACSCHED_HAVE_AVX2)

#include <immintrin.h>

#include "kernels_impl.hpp"

// AVX2+FMA lane. Matrices here are tiny (4H x (F+H) LSTM gate blocks,
// simplex tableau rows), so unaligned loads and simple tail handling are
// the right trade.

namespace hvacsched::kern {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swap = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

inline double dot_row(const double* row, const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + i), _mm256_loadu_pd(x + i),
                          acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += row[i] * x[i];
  return s;
}

void matvec_avx2(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y, bool accumulate) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* r0 = a + (r + 0) * cols;
    const double* r1 = a + (r + 1) * cols;
    const double* r2 = a + (r + 2) * cols;
    const double* r3 = a + (r + 3) * cols;
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d xv = _mm256_loadu_pd(x + c);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + c), xv, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + c), xv, a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + c), xv, a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + c), xv, a3);
    }
    double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
    for (; c < cols; ++c) {
      const double xc = x[c];
      s0 += r0[c] * xc;
      s1 += r1[c] * xc;
      s2 += r2[c] * xc;
      s3 += r3[c] * xc;
    }
    if (accumulate) {
      y[r + 0] += s0;
      y[r + 1] += s1;
      y[r + 2] += s2;
      y[r + 3] += s3;
    } else {
      y[r + 0] = s0;
      y[r + 1] = s1;
      y[r + 2] = s2;
      y[r + 3] = s3;
    }
  }
  for (; r < rows; ++r) {
    const double s = dot_row(a + r * cols, x, cols);
    y[r] = accumulate ? y[r] + s : s;
  }
}

inline void axpy_avx2_raw(double alpha, const double* x, double* y,
                          std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_t_avx2(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y, bool accumulate) {
  if (!accumulate) {
    for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_avx2_raw(x[r], a + r * cols, y, cols);
  }
}

void ger_avx2(double* a, std::size_t rows, std::size_t cols, double alpha,
              const double* x, const double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_avx2_raw(alpha * x[r], y, a + r * cols, cols);
  }
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  return dot_row(x, y, n);
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  axpy_avx2_raw(alpha, x, y, n);
}

double norm2_sq_avx2(const double* x, std::size_t n) {
  return dot_row(x, x, n);
}

void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{matvec_avx2, matvec_t_avx2, ger_avx2,
                             dot_avx2,    axpy_avx2,     norm2_sq_avx2,
                             scale_avx2};
  return t;
}

}  // namespace hvacsched::kern

#endif  // HVACSCHED_HAVE_AVX2
