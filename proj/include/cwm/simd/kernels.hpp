#pragma once

#include <cstddef>
#include <string_view>

namespace cwm::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

// Batched inner loops of the E- and M-steps. Covariates are passed as a
// column-major block: column j of an n-row block starts at x + j * ld.
// All implementations must agree with the scalar reference up to summation
// order (see tests/test_kernels.cpp).
struct KernelTable {
  Isa isa;

  // out[i] = |L^{-1} (x_i - mu)|^2 with L lower-triangular, column-major d x d.
  void (*mahalanobis_sq)(const double* x, std::size_t n, std::size_t d, std::size_t ld, const double* mu,
                         const double* L, double* out);

  // out[i] = y[i] - beta0 - sum_j beta1[j] * x_ij
  void (*linear_residual)(const double* y, const double* x, std::size_t n, std::size_t d, std::size_t ld,
                          double beta0, const double* beta1, double* out);

  // sum_i w[i] * a[i] * b[i]
  double (*weighted_dot)(const double* w, const double* a, const double* b, std::size_t n);

  // sum_i w[i] * a[i]
  double (*dot)(const double* w, const double* a, std::size_t n);

  // sum_i a[i]
  double (*sum)(const double* a, std::size_t n);

  // out[i] = a[i] * b[i]
  void (*multiply)(const double* a, const double* b, double* out, std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the library was built without AVX2 kernels or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

/// Kernels used by the library. Chosen once: the best ISA the CPU supports,
/// unless the CWM_SIMD environment variable is set to "scalar".
const KernelTable& kernels();

}  // namespace cwm::simd
