#include "cwm/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <boost/math/tools/toms748_solve.hpp>

#include "cwm/densities.hpp"
#include "cwm/selection.hpp"
#include "cwm/simd/kernels.hpp"

namespace cwm {

void EmConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidConfig, "epsilon must be positive");
  if (!(df_lo < df_hi)) throw Error(ErrorCode::InvalidConfig, "df_lo must be below df_hi");
  if (max_iter < 3) throw Error(ErrorCode::InvalidConfig, "max_iter must be at least 3");
  if (!(ridge >= 0.0)) throw Error(ErrorCode::InvalidConfig, "ridge must be non-negative");
  if (frozen_df && !(*frozen_df > 0.0)) throw Error(ErrorCode::InvalidConfig, "frozen df must be positive");
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t usize(Eigen::Index i) { return static_cast<std::size_t>(i); }

// Per-component log terms plus the block evaluations needed for u and v.
struct ComponentTerms {
  Matrix log_terms;                         // N x G: log pi_g + cond + marg
  std::vector<MarginalEval> marginal;       // one per distinct block
  std::vector<ConditionalEval> conditional; // one per distinct block
};

ComponentTerms component_terms(const Dataset& data, const ModelSpec& spec, const ParameterSet& params,
                               double ridge) {
  validate(spec, params, data.dim());
  ComponentTerms out;
  for (const auto& mb : params.marginals) out.marginal.push_back(eval_marginal(data.X, mb, ridge));
  for (const auto& rb : params.regressions) out.conditional.push_back(eval_conditional(data.y, data.X, rb));
  out.log_terms.resize(data.size(), params.G);
  for (int g = 0; g < params.G; ++g) {
    const auto& m = out.marginal[out.marginal.size() == 1 ? 0 : usize(g)];
    const auto& c = out.conditional[out.conditional.size() == 1 ? 0 : usize(g)];
    out.log_terms.col(g) = (std::log(params.pi[g]) + m.log_pdf.array() + c.log_pdf.array()).matrix();
  }
  return out;
}

// Normalizes log_terms row-wise into tau; returns the summed row log-normalizers.
double normalize_rows(const Matrix& log_terms, Matrix& tau) {
  tau.resize(log_terms.rows(), log_terms.cols());
  double total = 0.0;
  for (Eigen::Index n = 0; n < log_terms.rows(); ++n) {
    const double top = log_terms.row(n).maxCoeff();
    if (top == kNegInf || std::isnan(top)) {
      throw Error(ErrorCode::AllComponentsUnderflow, "every component density underflows at row " + std::to_string(n));
    }
    double acc = 0.0;
    for (Eigen::Index g = 0; g < log_terms.cols(); ++g) {
      tau(n, g) = std::exp(log_terms(n, g) - top);
      acc += tau(n, g);
    }
    tau.row(n) /= acc;
    total += top + std::log(acc);
  }
  return total;
}

// (df + dim) / (df + delta) and its expected log under the gamma posterior.
void precision_weights(const Vector& delta, double df, Eigen::Index dim, Eigen::Ref<Vector> w,
                       Eigen::Ref<Vector> log_w) {
  const double a = df + static_cast<double>(dim);
  const double shift = digamma(0.5 * a) - std::log(0.5 * a);
  for (Eigen::Index n = 0; n < delta.size(); ++n) {
    w[n] = a / (df + delta[n]);
    log_w[n] = std::log(w[n]) + shift;
  }
}

void check_mass(const Matrix& tau, const EmConfig& cfg, Eigen::Index d) {
  const double floor = cfg.component_mass_floor(d);
  for (Eigen::Index g = 0; g < tau.cols(); ++g) {
    const double mass = tau.col(g).sum();
    if (mass < floor) {
      throw Error(ErrorCode::DegenerateComponent, "component " + std::to_string(g) + " has mass " +
                                                      std::to_string(mass) + " below " + std::to_string(floor));
    }
  }
}

MarginalParams weighted_moments(const Matrix& X, const Vector& w, const Eigen::Index d) {
  const auto& k = simd::kernels();
  const auto n = usize(X.rows());
  const double sw = k.sum(w.data(), n);
  MarginalParams out;
  out.mu.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) out.mu[j] = k.dot(w.data(), X.col(j).data(), n) / sw;
  const Matrix centered = X.rowwise() - out.mu.transpose();
  out.Sigma.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      const double s = k.weighted_dot(w.data(), centered.col(a).data(), centered.col(b).data(), n) / sw;
      out.Sigma(a, b) = s;
      out.Sigma(b, a) = s;
    }
  }
  return out;
}

}  // namespace

Matrix posterior_tau(const Dataset& data, const ModelSpec& spec, const ParameterSet& params, double ridge) {
  const auto terms = component_terms(data, spec, params, ridge);
  Matrix tau;
  normalize_rows(terms.log_terms, tau);
  return tau;
}

LatentState e_step(const Dataset& data, const ModelSpec& spec, const ParameterSet& params, double* loglik,
                   double ridge) {
  const auto terms = component_terms(data, spec, params, ridge);
  LatentState s;
  const double ll = normalize_rows(terms.log_terms, s.tau);
  if (loglik != nullptr) *loglik = ll;

  const Eigen::Index N = data.size();
  const int G = params.G;
  s.u = Matrix::Ones(N, G);
  s.log_u = Matrix::Zero(N, G);
  s.v = Matrix::Ones(N, G);
  s.log_v = Matrix::Zero(N, G);

  if (spec.marginal_is_t()) {
    for (std::size_t b = 0; b < params.marginals.size(); ++b) {
      const Eigen::Index col = static_cast<Eigen::Index>(b);
      precision_weights(terms.marginal[b].delta, *params.marginals[b].nu, data.dim(), s.u.col(col), s.log_u.col(col));
    }
    if (params.marginals.size() == 1) {
      for (int g = 1; g < G; ++g) {
        s.u.col(g) = s.u.col(0);
        s.log_u.col(g) = s.log_u.col(0);
      }
    }
  }
  if (spec.conditional_is_t()) {
    for (std::size_t b = 0; b < params.regressions.size(); ++b) {
      const Eigen::Index col = static_cast<Eigen::Index>(b);
      precision_weights(terms.conditional[b].delta, *params.regressions[b].zeta, 1, s.v.col(col), s.log_v.col(col));
    }
    if (params.regressions.size() == 1) {
      for (int g = 1; g < G; ++g) {
        s.v.col(g) = s.v.col(0);
        s.log_v.col(g) = s.log_v.col(0);
      }
    }
  }
  return s;
}

Vector m_step_weights(const Matrix& tau) {
  Vector pi = tau.colwise().sum().transpose() / static_cast<double>(tau.rows());
  return pi;
}

std::vector<MarginalParams> m_step_marginal(const Dataset& data, const Matrix& tau, const Matrix& u,
                                            Constraint constraint, const EmConfig& cfg) {
  const Eigen::Index N = data.size();
  const Eigen::Index d = data.dim();
  if (tau.rows() != N || u.rows() != N || u.cols() != tau.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "tau/u shape does not match the data");
  }
  check_mass(tau, cfg, d);
  std::vector<MarginalParams> out;
  if (constraint == Constraint::Equal) {
    const Vector w = u.col(0);
    out.push_back(weighted_moments(data.X, w, d));
  } else {
    Vector w(N);
    for (Eigen::Index g = 0; g < tau.cols(); ++g) {
      simd::kernels().multiply(tau.col(g).data(), u.col(g).data(), w.data(), usize(N));
      out.push_back(weighted_moments(data.X, w, d));
    }
  }
  for (const auto& block : out) CholeskyCache::factor(block.Sigma, cfg.ridge);  // SingularCovariance
  return out;
}

WeightedFit weighted_regression(const Vector& y, const Matrix& X, const Vector& w) {
  const auto& k = simd::kernels();
  const auto n = usize(X.rows());
  const Eigen::Index d = X.cols();
  if (y.size() != X.rows() || w.size() != X.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "y, X and w lengths disagree");
  }
  const double sw = k.sum(w.data(), n);
  if (!(sw > 0.0)) throw Error(ErrorCode::SingularDesign, "regression weights sum to zero");

  Vector xbar(d);
  for (Eigen::Index j = 0; j < d; ++j) xbar[j] = k.dot(w.data(), X.col(j).data(), n) / sw;
  const double ybar = k.dot(w.data(), y.data(), n) / sw;
  const Matrix xc = X.rowwise() - xbar.transpose();
  const Vector yc = y.array() - ybar;

  Matrix scatter(d, d);
  Vector cross(d);
  for (Eigen::Index a = 0; a < d; ++a) {
    cross[a] = k.weighted_dot(w.data(), xc.col(a).data(), yc.data(), n) / sw;
    for (Eigen::Index b = 0; b <= a; ++b) {
      const double s = k.weighted_dot(w.data(), xc.col(a).data(), xc.col(b).data(), n) / sw;
      scatter(a, b) = s;
      scatter(b, a) = s;
    }
  }
  Eigen::LLT<Matrix> llt(scatter);
  const double scale = scatter.diagonal().maxCoeff();
  if (llt.info() != Eigen::Success || !(scale > 0.0) ||
      Matrix(llt.matrixL()).diagonal().array().square().minCoeff() < 1e-13 * scale) {
    throw Error(ErrorCode::SingularDesign, "weighted covariate scatter is not invertible");
  }
  WeightedFit fit;
  fit.beta1 = llt.solve(cross);
  fit.beta0 = ybar - fit.beta1.dot(xbar);
  Vector resid(X.rows());
  k.linear_residual(y.data(), X.data(), n, usize(d), usize(X.outerStride()), fit.beta0, fit.beta1.data(),
                    resid.data());
  fit.sigma2 = k.weighted_dot(w.data(), resid.data(), resid.data(), n) / sw;
  return fit;
}

std::vector<RegressionParams> m_step_regression(const Dataset& data, const Matrix& tau, const Matrix& v,
                                                Constraint constraint, const EmConfig& cfg) {
  const Eigen::Index N = data.size();
  if (tau.rows() != N || v.rows() != N || v.cols() != tau.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "tau/v shape does not match the data");
  }
  check_mass(tau, cfg, data.dim());
  auto to_block = [](const WeightedFit& f) {
    if (!(f.sigma2 >= 1e-12)) {
      throw Error(ErrorCode::DegenerateVariance, "residual variance " + std::to_string(f.sigma2) + " below 1e-12");
    }
    return RegressionParams{f.beta0, f.beta1, f.sigma2, std::nullopt};
  };
  std::vector<RegressionParams> out;
  if (constraint == Constraint::Equal) {
    out.push_back(to_block(weighted_regression(data.y, data.X, v.col(0))));
  } else {
    Vector w(N);
    for (Eigen::Index g = 0; g < tau.cols(); ++g) {
      simd::kernels().multiply(tau.col(g).data(), v.col(g).data(), w.data(), usize(N));
      out.push_back(to_block(weighted_regression(data.y, data.X, w)));
    }
  }
  return out;
}

double df_score(double df, double A, double df_old, Eigen::Index dim) {
  const double half_old = 0.5 * (df_old + static_cast<double>(dim));
  return -digamma(0.5 * df) + std::log(0.5 * df) + 1.0 + A + digamma(half_old) - std::log(half_old);
}

double df_score_offset(Constraint constraint, const Matrix& tau, const Matrix& w, int component) {
  if (constraint == Constraint::Equal) {
    const Vector col = w.col(0);
    return (col.array().log() - col.array()).sum() / static_cast<double>(w.rows());
  }
  const auto t = tau.col(component).array();
  const auto wc = w.col(component).array();
  return (t * (wc.log() - wc)).sum() / t.sum();
}

double update_df(Constraint constraint, const Matrix& tau, const Matrix& w, int component, double df_old,
                 Eigen::Index dim, const EmConfig& cfg) {
  const double A = df_score_offset(constraint, tau, w, component);
  auto score = [&](double df) { return df_score(df, A, df_old, dim); };
  const double lo = cfg.df_lo + 1e-6;
  const double hi = cfg.df_hi;
  const double s_hi = score(hi);
  if (s_hi >= 0.0) return hi;
  const double s_lo = score(lo);
  if (s_lo <= 0.0) return lo;

  std::uintmax_t max_iter = 200;
  auto stop = [](double a, double b) { return std::abs(b - a) <= 1e-14 * std::max(1.0, std::abs(a)); };
  const auto [a, b] = boost::math::tools::toms748_solve(score, lo, hi, s_lo, s_hi, stop, max_iter);
  return std::abs(score(a)) <= std::abs(score(b)) ? a : b;
}

double observed_loglik(const Dataset& data, const ModelSpec& spec, const ParameterSet& params, double ridge) {
  const auto terms = component_terms(data, spec, params, ridge);
  Matrix tau;
  return normalize_rows(terms.log_terms, tau);
}

bool aitken_converged(double l_prev2, double l_prev, double l_curr, double epsilon) {
  const double denom = l_prev - l_prev2;
  if (std::abs(denom) < 1e-12) return std::abs(l_curr - l_prev) < epsilon;
  const double a = (l_curr - l_prev) / denom;
  if (a >= 1.0) return std::abs(l_curr - l_prev) < epsilon;
  const double l_inf = l_prev + (l_curr - l_prev) / (1.0 - a);
  const double gap = l_inf - l_prev;
  return gap >= 0.0 && gap < epsilon;
}

namespace {

void check_init_tau(const Matrix& tau, Eigen::Index N, int G) {
  if (tau.rows() != N || tau.cols() != G) {
    throw Error(ErrorCode::DimensionMismatch, "initial tau must be N x G");
  }
  if ((tau.array() < 0.0).any() || !tau.allFinite()) {
    throw Error(ErrorCode::InconsistentParameters, "initial tau has negative or non-finite entries");
  }
  const Vector sums = tau.rowwise().sum();
  if (((sums.array() - 1.0).abs() > 1e-8).any()) {
    throw Error(ErrorCode::InconsistentParameters, "initial tau rows must sum to one");
  }
}

ParameterSet m_step(const Dataset& data, const ModelSpec& spec, const LatentState& latent,
                    const ParameterSet* previous, const EmConfig& cfg) {
  ParameterSet p;
  p.G = static_cast<int>(latent.tau.cols());
  p.pi = m_step_weights(latent.tau);
  p.marginals = m_step_marginal(data, latent.tau, latent.u, spec.marginal_constraint(), cfg);
  p.regressions = m_step_regression(data, latent.tau, latent.v, spec.conditional_constraint(), cfg);

  const double start_df = cfg.frozen_df.value_or(cfg.initial_df);
  const bool estimate = previous != nullptr && !cfg.frozen_df;
  if (spec.marginal_is_t()) {
    for (std::size_t b = 0; b < p.marginals.size(); ++b) {
      p.marginals[b].nu = start_df;
      if (estimate) {
        p.marginals[b].nu = update_df(spec.marginal_constraint(), latent.tau, latent.u, static_cast<int>(b),
                                      *previous->marginals[b].nu, data.dim(), cfg);
      }
    }
  }
  if (spec.conditional_is_t()) {
    for (std::size_t b = 0; b < p.regressions.size(); ++b) {
      p.regressions[b].zeta = start_df;
      if (estimate) {
        p.regressions[b].zeta = update_df(spec.conditional_constraint(), latent.tau, latent.v, static_cast<int>(b),
                                          *previous->regressions[b].zeta, 1, cfg);
      }
    }
  }
  return p;
}

}  // namespace

FitResult em_fit(const Dataset& data, const ModelSpec& spec, int G, const Matrix& init_tau, const EmConfig& cfg) {
  cfg.validate();
  if (G < 1) throw Error(ErrorCode::InvalidConfig, "G must be positive");
  check_init_tau(init_tau, data.size(), G);

  LatentState latent = LatentState::from_tau(init_tau);
  ParameterSet params = m_step(data, spec, latent, nullptr, cfg);
  std::vector<double> trace;
  bool converged = false;
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    double ll = 0.0;
    latent = e_step(data, spec, params, &ll, cfg.ridge);
    trace.push_back(ll);
    const std::size_t k = trace.size();
    if (k >= 3 && aitken_converged(trace[k - 3], trace[k - 2], trace[k - 1], cfg.epsilon)) {
      converged = true;
      break;
    }
    if (iter + 1 == cfg.max_iter) break;
    params = m_step(data, spec, latent, &params, cfg);
  }

  FitResult fit{spec, std::move(params), std::move(latent), std::move(trace), 0.0, 0, converged, 0.0, 0.0, 0};
  fit.loglik = fit.loglik_trace.back();
  fit.n_iter = static_cast<int>(fit.loglik_trace.size());
  fit.m = count_parameters(spec, G, data.dim());
  fit.bic = bic(fit.loglik, fit.m, data.size());
  fit.icl = icl(fit.bic, fit.latent.tau);
  return fit;
}

}  // namespace cwm
