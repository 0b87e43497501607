#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cwm/errors.hpp"

namespace cwm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class DistKind { Normal, T };
enum class Constraint { Equal, Variable };

/// N observations of a scalar response and a d-vector of covariates.
/// X is stored N x d column-major so that each covariate is a contiguous column.
struct Dataset {
  Vector y;
  Matrix X;
  std::optional<std::vector<std::string>> labels;

  Dataset() = default;
  Dataset(Vector y_in, Matrix X_in, std::optional<std::vector<std::string>> labels_in = std::nullopt);

  Eigen::Index size() const { return y.size(); }
  Eigen::Index dim() const { return X.cols(); }
};

/// One member of the twelve-model family. Construction rejects the EE pair.
class ModelSpec {
 public:
  ModelSpec(DistKind marginal, DistKind conditional, Constraint marginal_constraint,
            Constraint conditional_constraint);

  /// Parses a canonical name such as "tN-EV".
  static ModelSpec from_name(const std::string& name);

  DistKind marginal() const { return marginal_; }
  DistKind conditional() const { return conditional_; }
  Constraint marginal_constraint() const { return marginal_constraint_; }
  Constraint conditional_constraint() const { return conditional_constraint_; }

  bool marginal_shared() const { return marginal_constraint_ == Constraint::Equal; }
  bool conditional_shared() const { return conditional_constraint_ == Constraint::Equal; }
  bool marginal_is_t() const { return marginal_ == DistKind::T; }
  bool conditional_is_t() const { return conditional_ == DistKind::T; }

  std::string name() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

 private:
  DistKind marginal_;
  DistKind conditional_;
  Constraint marginal_constraint_;
  Constraint conditional_constraint_;
};

ModelSpec make_model_spec(DistKind marginal, DistKind conditional, Constraint marginal_constraint,
                          Constraint conditional_constraint);

/// The twelve models in the canonical order (tt-VV first).
std::vector<ModelSpec> all_model_specs();

/// Parameters of the covariate density of one component (or of all of them when shared).
struct MarginalParams {
  Vector mu;
  Matrix Sigma;
  std::optional<double> nu;  // present only for t marginals
};

/// Parameters of the linear regression of y on x for one component (or shared).
struct RegressionParams {
  double beta0 = 0.0;
  Vector beta1;
  double sigma2 = 1.0;
  std::optional<double> zeta;  // present only for t conditionals
};

/// Mixture weights plus marginal/regression blocks. Shared blocks are stored once;
/// marginal(g) and regression(g) broadcast them across components.
struct ParameterSet {
  int G = 1;
  Vector pi;
  std::vector<MarginalParams> marginals;
  std::vector<RegressionParams> regressions;

  const MarginalParams& marginal(int g) const { return marginals.size() == 1 ? marginals[0] : marginals[g]; }
  const RegressionParams& regression(int g) const {
    return regressions.size() == 1 ? regressions[0] : regressions[g];
  }
};

/// Throws InconsistentParameters (or SingularCovariance) when params do not fit spec/d.
void validate(const ModelSpec& spec, const ParameterSet& params, Eigen::Index d);

/// N x G expectations of the latent variables given the current parameters.
struct LatentState {
  Matrix tau;
  Matrix u;
  Matrix v;
  Matrix log_u;
  Matrix log_v;

  /// tau as given; u, v = 1 and their logs = 0.
  static LatentState from_tau(const Matrix& tau);
};

struct FitResult {
  ModelSpec spec;
  ParameterSet params;
  LatentState latent;
  std::vector<double> loglik_trace;
  double loglik = 0.0;
  int n_iter = 0;
  bool converged = false;
  double bic = 0.0;
  double icl = 0.0;
  int m = 0;
};

}  // namespace cwm
