#pragma once

// Dense real-valued inner loops used by the barrier solver and the link
// evaluators. Each kernel has a portable scalar reference and an AVX2/FMA
// variant; the active table is chosen once at startup from CPUID and can be
// pinned with set_backend() (tests use this to compare the two paths).

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace nafd::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[r] = sum_c A[r * ld + c] * x[c] + offset[r]   (offset may be null)
  void (*gemv_rows)(const double* A, std::size_t rows, std::size_t cols,
                    std::size_t ld, const double* x, const double* offset,
                    double* out);
  // H[i * n + j] += w * a[i] * a[j]   (full square, row-major)
  void (*syr)(double* H, std::size_t n, const double* a, double w);
  // y[i] += w * a[i]
  void (*axpy)(double* y, const double* a, double w, std::size_t n);
  // sum_i |z[i]|^2 over interleaved complex doubles
  double (*sum_abs2)(const std::complex<double>* z, std::size_t n);
};

const KernelTable& scalar_table();
// Null when the binary was built without AVX2 support.
const KernelTable* avx2_table();

bool cpu_has_avx2();
Backend active_backend();
// Returns false (and leaves the backend unchanged) if the request is
// unavailable on this machine.
bool set_backend(Backend b);
std::string_view backend_name(Backend b);

const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(std::span<double> y, std::span<const double> a, double w) {
  active().axpy(y.data(), a.data(), w, y.size());
}

inline double sum_abs2(std::span<const std::complex<double>> z) {
  return active().sum_abs2(z.data(), z.size());
}

}  // namespace nafd::kernels
