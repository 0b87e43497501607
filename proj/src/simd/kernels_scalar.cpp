#include "cwm/simd/kernels.hpp"

#include <vector>

namespace cwm::simd {
namespace {

void mahalanobis_sq_scalar(const double* x, std::size_t n, std::size_t d, std::size_t ld, const double* mu,
                           const double* L, double* out) {
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      double s = x[i + r * ld] - mu[r];
      for (std::size_t c = 0; c < r; ++c) s -= L[r + c * d] * z[c];
      z[r] = s / L[r + r * d];
      acc += z[r] * z[r];
    }
    out[i] = acc;
  }
}

void linear_residual_scalar(const double* y, const double* x, std::size_t n, std::size_t d, std::size_t ld,
                            double beta0, const double* beta1, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double fit = beta0;
    for (std::size_t j = 0; j < d; ++j) fit += beta1[j] * x[i + j * ld];
    out[i] = y[i] - fit;
  }
}

double weighted_dot_scalar(const double* w, const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

double dot_scalar(const double* w, const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i];
  return s;
}

double sum_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

void multiply_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar,        mahalanobis_sq_scalar, linear_residual_scalar,
                                 weighted_dot_scalar, dot_scalar,            sum_scalar,
                                 multiply_scalar};
  return table;
}

}  // namespace cwm::simd
