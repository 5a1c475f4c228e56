#include "kernels_impl.hpp"

// Reference lane. Plain loops, sequential accumulation order; the AVX2 lane
// is checked against these results in tests.

namespace hvacsched::kern {
namespace {

void matvec_scalar(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y, bool accumulate) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = accumulate ? y[r] + acc : acc;
  }
}

void matvec_t_scalar(const double* a, std::size_t rows, std::size_t cols,
                     const double* x, double* y, bool accumulate) {
  if (!accumulate) {
    for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a + r * cols;
    const double xr = x[r];
    for (std::size_t c = 0; c < cols; ++c) y[c] += xr * row[c];
  }
}

void ger_scalar(double* a, std::size_t rows, std::size_t cols, double alpha,
                const double* x, const double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = a + r * cols;
    const double ax = alpha * x[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += ax * y[c];
  }
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double norm2_sq_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{matvec_scalar, matvec_t_scalar, ger_scalar,
                             dot_scalar,    axpy_scalar,     norm2_sq_scalar,
                             scale_scalar};
  return t;
}

}  // namespace hvacsched::kern
