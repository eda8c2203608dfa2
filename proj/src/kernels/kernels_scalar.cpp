#include "nafd/kernels/kernels.hpp"

namespace nafd::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_rows_scalar(const double* A, std::size_t rows, std::size_t cols,
                      std::size_t ld, const double* x, const double* offset,
                      double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = A + r * ld;
    double s = offset ? offset[r] : 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

void syr_scalar(double* H, std::size_t n, const double* a, double w) {
  for (std::size_t i = 0; i < n; ++i) {
    const double wa = w * a[i];
    double* row = H + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += wa * a[j];
  }
}

void axpy_scalar(double* y, const double* a, double w, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += w * a[i];
}

double sum_abs2_scalar(const std::complex<double>* z, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::norm(z[i]);
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{dot_scalar, gemv_rows_scalar, syr_scalar,
                                 axpy_scalar, sum_abs2_scalar};
  return table;
}

}  // namespace nafd::kernels
