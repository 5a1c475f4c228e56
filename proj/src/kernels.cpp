#include "hvacsched/kernels.hpp"

#include <stdexcept>

#include "kernels_impl.hpp"

namespace hvacsched::kern {
namespace {

bool cpu_has_avx2_fma() {
#if defined(HVACSCHED_HAVE_AVX2) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct Dispatch {
  const KernelTable* table;
  Backend backend;
};

std::string_view name_of(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "?";
}

Dispatch& dispatch() {
  static Dispatch d = [] {
    Dispatch init{&scalar_table(), Backend::scalar};
#if defined(HVACSCHED_HAVE_AVX2)
    if (cpu_has_avx2_fma()) {
      init = {&avx2_table(), Backend::avx2};
    }
#endif
    return init;
  }();
  return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2_fma();
  }
  return false;
}

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw std::runtime_error("kernel backend not available on this cpu: " +
                             std::string(name_of(b)));
  }
  switch (b) {
    case Backend::scalar:
      dispatch() = {&scalar_table(), Backend::scalar};
      break;
    case Backend::avx2:
#if defined(HVACSCHED_HAVE_AVX2)
      dispatch() = {&avx2_table(), Backend::avx2};
#endif
      break;
  }
}

std::string_view backend_name() { return name_of(dispatch().backend); }

void matvec(const double* a, std::size_t rows, std::size_t cols,
            const double* x, double* y, bool accumulate) {
  dispatch().table->matvec(a, rows, cols, x, y, accumulate);
}

void matvec_t(const double* a, std::size_t rows, std::size_t cols,
              const double* x, double* y, bool accumulate) {
  dispatch().table->matvec_t(a, rows, cols, x, y, accumulate);
}

void ger(double* a, std::size_t rows, std::size_t cols, double alpha,
         const double* x, const double* y) {
  dispatch().table->ger(a, rows, cols, alpha, x, y);
}

double dot(const double* x, const double* y, std::size_t n) {
  return dispatch().table->dot(x, y, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  dispatch().table->axpy(alpha, x, y, n);
}

double norm2_sq(const double* x, std::size_t n) {
  return dispatch().table->norm2_sq(x, n);
}

void scale(double alpha, double* x, std::size_t n) {
  dispatch().table->scale(alpha, x, n);
}

}  // namespace hvacsched::kern
