#pragma once

#include <optional>
#include <vector>

#include "cwm/types.hpp"

namespace cwm {

struct EmConfig {
  double epsilon = 0.05;  // Aitken threshold
  int max_iter = 1000;
  double df_lo = 2.0;  // df search interval is (df_lo, df_hi]
  double df_hi = 200.0;
  std::optional<double> min_component_mass;  // defaults to d + 2
  double ridge = 1e-8;
  double initial_df = 50.0;

  /// Test hook: hold every df at this value for the whole fit, bypassing
  /// the (df_lo, df_hi] clamp. Used to check the Gaussian limit.
  std::optional<double> frozen_df;

  void validate() const;
  double component_mass_floor(Eigen::Index d) const {
    return min_component_mass.value_or(static_cast<double>(d) + 2.0);
  }
};

/// tau_ng proportional to pi_g * cond_g(y_n | x_n) * marg_g(x_n), normalized in log space.
Matrix posterior_tau(const Dataset& data, const ModelSpec& spec, const ParameterSet& params,
                     double ridge = 1e-8);

/// Full E-step. When loglik is non-null it receives the observed-data log-likelihood
/// of params, which falls out of the same log-sum-exp pass.
LatentState e_step(const Dataset& data, const ModelSpec& spec, const ParameterSet& params, double* loglik = nullptr,
                   double ridge = 1e-8);

Vector m_step_weights(const Matrix& tau);

/// Location/scatter update for the covariate block. Returns G blocks (Variable)
/// or a single shared block (Equal); nu is left unset.
std::vector<MarginalParams> m_step_marginal(const Dataset& data, const Matrix& tau, const Matrix& u,
                                            Constraint constraint, const EmConfig& cfg = {});

struct WeightedFit {
  double beta0 = 0.0;
  Vector beta1;
  double sigma2 = 0.0;
};

/// Weighted least squares of y on x with residual variance sum(w r^2) / sum(w).
/// Throws SingularDesign when the weighted covariate scatter is not invertible.
WeightedFit weighted_regression(const Vector& y, const Matrix& X, const Vector& w);

/// Regression update. Variable uses weights tau_g * v_g per component, Equal uses v
/// (tau drops out). Throws DegenerateVariance when a fitted sigma2 < 1e-12.
std::vector<RegressionParams> m_step_regression(const Dataset& data, const Matrix& tau, const Matrix& v,
                                                Constraint constraint, const EmConfig& cfg = {});

/// Score of the df update: -psi(df/2) + ln(df/2) + 1 + A + psi((df_old+dim)/2) - ln((df_old+dim)/2).
double df_score(double df, double A, double df_old, Eigen::Index dim);

/// A = (1/n_g) sum_n tau_ng (ln w_ng - w_ng) for Variable, (1/N) sum_n (ln w_n - w_n) for Equal.
double df_score_offset(Constraint constraint, const Matrix& tau, const Matrix& w, int component);

/// Root of df_score in (df_lo + 1e-6, df_hi], clamped to the nearer end when the
/// score does not change sign. `component` is ignored for Equal.
double update_df(Constraint constraint, const Matrix& tau, const Matrix& w, int component, double df_old,
                 Eigen::Index dim, const EmConfig& cfg = {});

double observed_loglik(const Dataset& data, const ModelSpec& spec, const ParameterSet& params,
                       double ridge = 1e-8);

bool aitken_converged(double l_prev2, double l_prev, double l_curr, double epsilon);

/// EM from a row-stochastic starting partition. The first action is an M-step
/// with u = v = 1; dfs start at cfg.initial_df and are only re-estimated once
/// E-step expectations exist.
FitResult em_fit(const Dataset& data, const ModelSpec& spec, int G, const Matrix& init_tau,
                 const EmConfig& cfg = {});

}  // namespace cwm
