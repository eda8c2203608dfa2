#include "nafd/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define NAFD_HAVE_AVX2 1
#include <immintrin.h>
#else
#define NAFD_HAVE_AVX2 0
#endif

namespace nafd::kernels {

#if NAFD_HAVE_AVX2
namespace {

#define NAFD_AVX2 __attribute__((target("avx2,fma")))

NAFD_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

NAFD_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

NAFD_AVX2 void gemv_rows_avx2(const double* A, std::size_t rows,
                              std::size_t cols, std::size_t ld,
                              const double* x, const double* offset,
                              double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = A + r * ld;
    __m256d acc = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4)
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + c), _mm256_loadu_pd(x + c), acc);
    double s = hsum(acc);
    for (; c < cols; ++c) s += row[c] * x[c];
    out[r] = s + (offset ? offset[r] : 0.0);
  }
}

NAFD_AVX2 void syr_avx2(double* H, std::size_t n, const double* a, double w) {
  for (std::size_t i = 0; i < n; ++i) {
    const __m256d wa = _mm256_set1_pd(w * a[i]);
    double* row = H + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4)
      _mm256_storeu_pd(row + j, _mm256_fmadd_pd(wa, _mm256_loadu_pd(a + j),
                                                _mm256_loadu_pd(row + j)));
    const double s = w * a[i];
    for (; j < n; ++j) row[j] += s * a[j];
  }
}

NAFD_AVX2 void axpy_avx2(double* y, const double* a, double w, std::size_t n) {
  const __m256d wv = _mm256_set1_pd(w);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(wv, _mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += w * a[i];
}

NAFD_AVX2 double sum_abs2_avx2(const std::complex<double>* z, std::size_t n) {
  // Interleaved (re, im) pairs: |z|^2 summed is the squared norm of the
  // underlying 2n-length real array.
  const double* p = reinterpret_cast<const double*>(z);
  const std::size_t m = 2 * n;
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= m; i += 8) {
    const __m256d u = _mm256_loadu_pd(p + i);
    const __m256d v = _mm256_loadu_pd(p + i + 4);
    acc0 = _mm256_fmadd_pd(u, u, acc0);
    acc1 = _mm256_fmadd_pd(v, v, acc1);
  }
  for (; i + 4 <= m; i += 4) {
    const __m256d u = _mm256_loadu_pd(p + i);
    acc0 = _mm256_fmadd_pd(u, u, acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < m; ++i) s += p[i] * p[i];
  return s;
}

#undef NAFD_AVX2

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{dot_avx2, gemv_rows_avx2, syr_avx2, axpy_avx2,
                                 sum_abs2_avx2};
  return &table;
}

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

#else

const KernelTable* avx2_table() { return nullptr; }
bool cpu_has_avx2() { return false; }

#endif

}  // namespace nafd::kernels
