#pragma once

#include <Eigen/Core>

#include "cwm/types.hpp"

namespace cwm {

/// Lower Cholesky factor of a covariance matrix plus its log-determinant.
class CholeskyCache {
 public:
  /// Factors Sigma. On failure adds ridge * trace(Sigma) / d to the diagonal and
  /// retries once; a second failure raises SingularCovariance.
  static CholeskyCache factor(const Matrix& Sigma, double ridge = 1e-8);

  const Matrix& L() const { return L_; }
  double log_det() const { return log_det_; }
  Eigen::Index dim() const { return L_.rows(); }
  bool regularized() const { return regularized_; }

 private:
  Matrix L_;
  double log_det_ = 0.0;
  bool regularized_ = false;
};

/// psi(s) for s > 0: recurrence up to s >= 6, then the asymptotic series.
double digamma(double s);

/// (x - mu)' Sigma^{-1} (x - mu) through one triangular solve.
double mahalanobis_sq(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu,
                      const CholeskyCache& chol);

double log_mvt(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu, const CholeskyCache& chol,
               double nu);

double log_mvn(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu, const CholeskyCache& chol);

/// Univariate t with location beta0 + beta1'x, scale sigma2 and df zeta.
double log_t_reg(double y, const Eigen::Ref<const Vector>& x, double beta0, const Eigen::Ref<const Vector>& beta1,
                 double sigma2, double zeta);

double log_normal_reg(double y, const Eigen::Ref<const Vector>& x, double beta0,
                      const Eigen::Ref<const Vector>& beta1, double sigma2);

/// log sum_g pi_g * cond_g(y | x) * marg_g(x).
double cwm_log_density(double y, const Eigen::Ref<const Vector>& x, const ModelSpec& spec,
                       const ParameterSet& params);

// Log-density from a precomputed squared distance. Shared by the point and batch paths.
double log_t_from_distance(double delta, double nu, Eigen::Index dim, double log_det);
double log_normal_from_distance(double delta, Eigen::Index dim, double log_det);

/// Per-observation quantities for one component's marginal block.
struct MarginalEval {
  Vector delta;    // squared Mahalanobis distances
  Vector log_pdf;  // log marginal density
};

/// Per-observation quantities for one component's regression block.
struct ConditionalEval {
  Vector delta;    // squared standardized residuals
  Vector log_pdf;  // log conditional density
};

/// Batched evaluation over all rows of X (uses the SIMD kernel table).
MarginalEval eval_marginal(const Matrix& X, const MarginalParams& block, double ridge = 1e-8);
ConditionalEval eval_conditional(const Vector& y, const Matrix& X, const RegressionParams& block);

}  // namespace cwm
