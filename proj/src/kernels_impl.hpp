#pragma once

#include <cstddef>

// Per-lane entry points. Each lane provides the same table of functions;
// kernels.cpp wires the active lane into the public API.

namespace hvacsched::kern {

struct KernelTable {
  void (*matvec)(const double*, std::size_t, std::size_t, const double*,
                 double*, bool);
  void (*matvec_t)(const double*, std::size_t, std::size_t, const double*,
                   double*, bool);
  void (*ger)(double*, std::size_t, std::size_t, double, const double*,
              const double*);
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*norm2_sq)(const double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
};

const KernelTable& scalar_table();

#if defined(HVACSCHED_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace hvacsched::kern
