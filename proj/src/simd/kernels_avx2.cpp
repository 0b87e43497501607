// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <vector>

#include "cwm/simd/kernels.hpp"

namespace cwm::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Four points per lane group; forward substitution runs in lockstep across lanes.
void mahalanobis_sq_avx2(const double* x, std::size_t n, std::size_t d, std::size_t ld, const double* mu,
                         const double* L, double* out) {
  std::vector<double> z(4 * d);  // lane-interleaved solve buffer
  std::vector<double> inv_diag(d);
  for (std::size_t r = 0; r < d; ++r) inv_diag[r] = 1.0 / L[r + r * d];

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t r = 0; r < d; ++r) {
      __m256d s = _mm256_sub_pd(_mm256_loadu_pd(x + i + r * ld), _mm256_set1_pd(mu[r]));
      for (std::size_t c = 0; c < r; ++c) {
        s = _mm256_fnmadd_pd(_mm256_set1_pd(L[r + c * d]), _mm256_loadu_pd(z.data() + 4 * c), s);
      }
      const __m256d zr = _mm256_mul_pd(s, _mm256_set1_pd(inv_diag[r]));
      _mm256_storeu_pd(z.data() + 4 * r, zr);
      acc = _mm256_fmadd_pd(zr, zr, acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  std::vector<double> zs(d);
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      double s = x[i + r * ld] - mu[r];
      for (std::size_t c = 0; c < r; ++c) s -= L[r + c * d] * zs[c];
      zs[r] = s * inv_diag[r];
      acc += zs[r] * zs[r];
    }
    out[i] = acc;
  }
}

void linear_residual_avx2(const double* y, const double* x, std::size_t n, std::size_t d, std::size_t ld,
                          double beta0, const double* beta1, double* out) {
  std::size_t i = 0;
  const __m256d b0 = _mm256_set1_pd(beta0);
  for (; i + 4 <= n; i += 4) {
    __m256d fit = b0;
    for (std::size_t j = 0; j < d; ++j) {
      fit = _mm256_fmadd_pd(_mm256_set1_pd(beta1[j]), _mm256_loadu_pd(x + i + j * ld), fit);
    }
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(y + i), fit));
  }
  for (; i < n; ++i) {
    double fit = beta0;
    for (std::size_t j = 0; j < d; ++j) fit += beta1[j] * x[i + j * ld];
    out[i] = y[i] - fit;
  }
}

double weighted_dot_avx2(const double* w, const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d wa0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    const __m256d wa1 = _mm256_mul_pd(_mm256_loadu_pd(w + i + 4), _mm256_loadu_pd(a + i + 4));
    acc0 = _mm256_fmadd_pd(wa0, _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(wa1, _mm256_loadu_pd(b + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

double dot_avx2(const double* w, const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w + i + 4), _mm256_loadu_pd(a + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += w[i] * a[i];
  return s;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(_mm256_loadu_pd(a + i), acc0);
    acc1 = _mm256_add_pd(_mm256_loadu_pd(a + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i];
  return s;
}

void multiply_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{Isa::Avx2,        mahalanobis_sq_avx2, linear_residual_avx2,
                                 weighted_dot_avx2, dot_avx2,            sum_avx2,
                                 multiply_avx2};
  return table;
}

}  // namespace cwm::simd
