#include "cwm/densities.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Cholesky>
#include <boost/math/special_functions/gamma.hpp>

#include "cwm/simd/kernels.hpp"

namespace cwm {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2 pi)

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, std::string(what) + " is not finite");
}

void require_finite(const Eigen::Ref<const Vector>& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorCode::NonFiniteInput, std::string(what) + " has non-finite entries");
}

bool try_llt(const Matrix& A, Matrix& L) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) return false;
  L = llt.matrixL();
  return (L.diagonal().array() > 0.0).all() && L.allFinite();
}

// ln Gamma((nu + dim) / 2) - ln Gamma(nu / 2), stable for very large nu.
double log_gamma_ratio(double nu, Eigen::Index dim) {
  const double a = 0.5 * nu;
  const double h = 0.5 * static_cast<double>(dim);
  if (a > 1e4) return -std::log(boost::math::tgamma_delta_ratio(a, h));
  return std::lgamma(a + h) - std::lgamma(a);
}

}  // namespace

CholeskyCache CholeskyCache::factor(const Matrix& Sigma, double ridge) {
  if (Sigma.rows() != Sigma.cols() || Sigma.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "covariance must be square and non-empty");
  }
  if (!Sigma.allFinite()) throw Error(ErrorCode::NonFiniteInput, "covariance has non-finite entries");
  CholeskyCache out;
  if (!try_llt(Sigma, out.L_)) {
    const double bump = ridge * Sigma.trace() / static_cast<double>(Sigma.rows());
    Matrix reg = Sigma;
    reg.diagonal().array() += bump;
    if (!(bump > 0.0) || !try_llt(reg, out.L_)) {
      throw Error(ErrorCode::SingularCovariance, "Cholesky factorization failed after ridge");
    }
    out.regularized_ = true;
  }
  out.log_det_ = 2.0 * out.L_.diagonal().array().log().sum();
  return out;
}

double digamma(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw Error(ErrorCode::DomainError, "digamma needs a positive finite argument");
  }
  double shift = 0.0;
  while (s < 6.0) {
    shift -= 1.0 / s;
    s += 1.0;
  }
  const double inv = 1.0 / s;
  const double inv2 = inv * inv;
  // Bernoulli-number tail: B_2k / (2k s^2k), k = 1..7
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12))))));
  return shift + std::log(s) - 0.5 * inv - series;
}

double mahalanobis_sq(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu,
                      const CholeskyCache& chol) {
  if (x.size() != mu.size() || x.size() != chol.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "x, mu and Sigma dimensions disagree");
  }
  const Vector z = chol.L().triangularView<Eigen::Lower>().solve(x - mu);
  return z.squaredNorm();
}

double log_t_from_distance(double delta, double nu, Eigen::Index dim, double log_det) {
  const double p = static_cast<double>(dim);
  return log_gamma_ratio(nu, dim) - 0.5 * p * std::log(std::numbers::pi * nu) - 0.5 * log_det -
         0.5 * (nu + p) * std::log1p(delta / nu);
}

double log_normal_from_distance(double delta, Eigen::Index dim, double log_det) {
  return -0.5 * static_cast<double>(dim) * kLog2Pi - 0.5 * log_det - 0.5 * delta;
}

double log_mvt(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu, const CholeskyCache& chol,
               double nu) {
  require_finite(x, "x");
  require_finite(mu, "mu");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw Error(ErrorCode::NonFiniteInput, "nu must be positive and finite");
  return log_t_from_distance(mahalanobis_sq(x, mu, chol), nu, chol.dim(), chol.log_det());
}

double log_mvn(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu, const CholeskyCache& chol) {
  require_finite(x, "x");
  require_finite(mu, "mu");
  return log_normal_from_distance(mahalanobis_sq(x, mu, chol), chol.dim(), chol.log_det());
}

double log_t_reg(double y, const Eigen::Ref<const Vector>& x, double beta0, const Eigen::Ref<const Vector>& beta1,
                 double sigma2, double zeta) {
  require_finite(y, "y");
  require_finite(x, "x");
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::DomainError, "sigma2 must be positive");
  if (x.size() != beta1.size()) throw Error(ErrorCode::DimensionMismatch, "x and beta1 dimensions disagree");
  const Vector loc = Vector::Constant(1, beta0 + beta1.dot(x));
  const auto chol = CholeskyCache::factor(Matrix::Constant(1, 1, sigma2));
  return log_mvt(Vector::Constant(1, y), loc, chol, zeta);
}

double log_normal_reg(double y, const Eigen::Ref<const Vector>& x, double beta0,
                      const Eigen::Ref<const Vector>& beta1, double sigma2) {
  require_finite(y, "y");
  require_finite(x, "x");
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::DomainError, "sigma2 must be positive");
  if (x.size() != beta1.size()) throw Error(ErrorCode::DimensionMismatch, "x and beta1 dimensions disagree");
  const double r = y - beta0 - beta1.dot(x);
  return log_normal_from_distance(r * r / sigma2, 1, std::log(sigma2));
}

double cwm_log_density(double y, const Eigen::Ref<const Vector>& x, const ModelSpec& spec,
                       const ParameterSet& params) {
  validate(spec, params, x.size());
  std::vector<double> terms(static_cast<std::size_t>(params.G));
  double top = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < params.G; ++g) {
    const auto& mb = params.marginal(g);
    const auto& rb = params.regression(g);
    const auto chol = CholeskyCache::factor(mb.Sigma);
    const double marg = mb.nu ? log_mvt(x, mb.mu, chol, *mb.nu) : log_mvn(x, mb.mu, chol);
    const double cond = rb.zeta ? log_t_reg(y, x, rb.beta0, rb.beta1, rb.sigma2, *rb.zeta)
                                : log_normal_reg(y, x, rb.beta0, rb.beta1, rb.sigma2);
    terms[g] = std::log(params.pi[g]) + cond + marg;
    top = std::max(top, terms[g]);
  }
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  return top + std::log(acc);
}

MarginalEval eval_marginal(const Matrix& X, const MarginalParams& block, double ridge) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<std::size_t>(X.cols());
  if (block.mu.size() != X.cols()) throw Error(ErrorCode::DimensionMismatch, "mu dimension");
  const auto chol = CholeskyCache::factor(block.Sigma, ridge);
  MarginalEval out{Vector(X.rows()), Vector(X.rows())};
  simd::kernels().mahalanobis_sq(X.data(), n, d, static_cast<std::size_t>(X.outerStride()), block.mu.data(),
                                 chol.L().data(), out.delta.data());
  const double log_det = chol.log_det();
  if (block.nu) {
    const double nu = *block.nu;
    const double p = static_cast<double>(d);
    const double constant = log_gamma_ratio(nu, X.cols()) - 0.5 * p * std::log(std::numbers::pi * nu) - 0.5 * log_det;
    const double power = 0.5 * (nu + p);
    for (Eigen::Index i = 0; i < X.rows(); ++i) out.log_pdf[i] = constant - power * std::log1p(out.delta[i] / nu);
  } else {
    const double constant = -0.5 * static_cast<double>(d) * kLog2Pi - 0.5 * log_det;
    out.log_pdf = (constant - 0.5 * out.delta.array()).matrix();
  }
  return out;
}

ConditionalEval eval_conditional(const Vector& y, const Matrix& X, const RegressionParams& block) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (block.beta1.size() != X.cols()) throw Error(ErrorCode::DimensionMismatch, "beta1 dimension");
  if (!(block.sigma2 > 0.0)) throw Error(ErrorCode::DomainError, "sigma2 must be positive");
  ConditionalEval out{Vector(X.rows()), Vector(X.rows())};
  simd::kernels().linear_residual(y.data(), X.data(), n, static_cast<std::size_t>(X.cols()),
                                  static_cast<std::size_t>(X.outerStride()), block.beta0, block.beta1.data(),
                                  out.delta.data());
  out.delta = (out.delta.array().square() / block.sigma2).matrix();
  const double log_det = std::log(block.sigma2);
  if (block.zeta) {
    const double zeta = *block.zeta;
    const double constant = log_gamma_ratio(zeta, 1) - 0.5 * std::log(std::numbers::pi * zeta) - 0.5 * log_det;
    const double power = 0.5 * (zeta + 1.0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) out.log_pdf[i] = constant - power * std::log1p(out.delta[i] / zeta);
  } else {
    out.log_pdf = ((-0.5 * kLog2Pi - 0.5 * log_det) - 0.5 * out.delta.array()).matrix();
  }
  return out;
}

}  // namespace cwm
