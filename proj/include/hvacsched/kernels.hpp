#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision kernels behind the LSTM and solver inner loops.
// A scalar reference lane always exists; an AVX2+FMA lane is selected at
// runtime when the CPU supports it. Lanes are equivalence-tested against
// each other (FMA reassociation gives ~1e-15 relative differences).

namespace hvacsched::kern {

enum class Backend { scalar, avx2 };

Backend active_backend();
bool backend_available(Backend b);
// Force a lane (tests, reproducing results across machines). Throws if the
// requested lane is not available on this CPU/build.
void set_backend(Backend b);
std::string_view backend_name();

// y = A*x (accumulate ? y += A*x), A row-major rows x cols.
void matvec(const double* a, std::size_t rows, std::size_t cols,
            const double* x, double* y, bool accumulate = false);

// y = A^T*x (accumulate ? y += A^T*x); x has rows entries, y has cols.
void matvec_t(const double* a, std::size_t rows, std::size_t cols,
              const double* x, double* y, bool accumulate = false);

// A += alpha * x * y^T (rank-1 update), x rows-long, y cols-long.
void ger(double* a, std::size_t rows, std::size_t cols, double alpha,
         const double* x, const double* y);

double dot(const double* x, const double* y, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

double norm2_sq(const double* x, std::size_t n);

void scale(double alpha, double* x, std::size_t n);

}  // namespace hvacsched::kern
