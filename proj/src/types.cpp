#include "cwm/types.hpp"

#include <cmath>

#include "cwm/densities.hpp"

namespace cwm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EEConstraint: return "EEConstraint";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::InconsistentParameters: return "InconsistentParameters";
    case ErrorCode::AllComponentsUnderflow: return "AllComponentsUnderflow";
    case ErrorCode::DegenerateComponent: return "DegenerateComponent";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::PartitionFailure: return "PartitionFailure";
    case ErrorCode::AllStartsFailed: return "AllStartsFailed";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Dataset::Dataset(Vector y_in, Matrix X_in, std::optional<std::vector<std::string>> labels_in)
    : y(std::move(y_in)), X(std::move(X_in)), labels(std::move(labels_in)) {
  if (y.size() < 1 || X.cols() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "dataset needs N >= 1 and d >= 1");
  }
  if (X.rows() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "X has " + std::to_string(X.rows()) + " rows but y has " +
                                                  std::to_string(y.size()) + " entries");
  }
  if (!y.allFinite() || !X.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "dataset contains non-finite values");
  }
  if (labels && static_cast<Eigen::Index>(labels->size()) != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "labels length differs from N");
  }
}

ModelSpec::ModelSpec(DistKind marginal, DistKind conditional, Constraint marginal_constraint,
                     Constraint conditional_constraint)
    : marginal_(marginal),
      conditional_(conditional),
      marginal_constraint_(marginal_constraint),
      conditional_constraint_(conditional_constraint) {
  if (marginal_constraint == Constraint::Equal && conditional_constraint == Constraint::Equal) {
    throw Error(ErrorCode::EEConstraint, "equal marginal and equal conditional collapse to one cluster");
  }
}

ModelSpec make_model_spec(DistKind marginal, DistKind conditional, Constraint marginal_constraint,
                          Constraint conditional_constraint) {
  return ModelSpec(marginal, conditional, marginal_constraint, conditional_constraint);
}

namespace {
char dist_letter(DistKind k) { return k == DistKind::T ? 't' : 'N'; }
char constraint_letter(Constraint c) { return c == Constraint::Equal ? 'E' : 'V'; }
}  // namespace

std::string ModelSpec::name() const {
  std::string s(5, '-');
  s[0] = dist_letter(marginal_);
  s[1] = dist_letter(conditional_);
  s[3] = constraint_letter(marginal_constraint_);
  s[4] = constraint_letter(conditional_constraint_);
  return s;
}

ModelSpec ModelSpec::from_name(const std::string& name) {
  for (const auto& spec : all_model_specs()) {
    if (spec.name() == name) return spec;
  }
  if (name.size() == 5 && name[3] == 'E' && name[4] == 'E') {
    throw Error(ErrorCode::EEConstraint, "model '" + name + "' is not part of the family");
  }
  throw Error(ErrorCode::InvalidConfig, "unknown model name '" + name + "'");
}

std::vector<ModelSpec> all_model_specs() {
  using enum DistKind;
  using enum Constraint;
  const std::array<std::pair<DistKind, DistKind>, 4> dists{{{T, T}, {Normal, Normal}, {T, Normal}, {Normal, T}}};
  const std::array<std::pair<Constraint, Constraint>, 3> cons{{{Variable, Variable}, {Variable, Equal}, {Equal, Variable}}};
  std::vector<ModelSpec> out;
  out.reserve(12);
  for (const auto& [mk, ck] : dists) {
    for (const auto& [mc, cc] : cons) out.emplace_back(mk, ck, mc, cc);
  }
  return out;
}

void validate(const ModelSpec& spec, const ParameterSet& params, Eigen::Index d) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InconsistentParameters, msg); };
  const int G = params.G;
  if (G < 1) fail("G must be positive");
  if (params.pi.size() != G) fail("pi has wrong length");
  if ((params.pi.array() <= 0.0).any() || !params.pi.allFinite()) fail("mixture weights must be positive");
  if (std::abs(params.pi.sum() - 1.0) > 1e-12) fail("mixture weights must sum to one");

  const std::size_t n_marg = spec.marginal_shared() ? 1 : static_cast<std::size_t>(G);
  const std::size_t n_reg = spec.conditional_shared() ? 1 : static_cast<std::size_t>(G);
  if (params.marginals.size() != n_marg) fail("marginal block multiplicity does not match constraint");
  if (params.regressions.size() != n_reg) fail("regression block multiplicity does not match constraint");

  for (const auto& m : params.marginals) {
    if (m.mu.size() != d || m.Sigma.rows() != d || m.Sigma.cols() != d) fail("marginal dimensions");
    if (m.nu.has_value() != spec.marginal_is_t()) fail("nu presence does not match marginal kind");
    if (m.nu && !(std::isfinite(*m.nu) && *m.nu > 0.0)) fail("nu must be positive");
    CholeskyCache::factor(m.Sigma);  // throws SingularCovariance
  }
  for (const auto& r : params.regressions) {
    if (r.beta1.size() != d) fail("beta1 dimension");
    if (!(r.sigma2 > 0.0) || !std::isfinite(r.sigma2)) fail("sigma2 must be positive");
    if (r.zeta.has_value() != spec.conditional_is_t()) fail("zeta presence does not match conditional kind");
    if (r.zeta && !(std::isfinite(*r.zeta) && *r.zeta > 0.0)) fail("zeta must be positive");
  }
}

LatentState LatentState::from_tau(const Matrix& tau) {
  LatentState s;
  s.tau = tau;
  s.u = Matrix::Ones(tau.rows(), tau.cols());
  s.v = Matrix::Ones(tau.rows(), tau.cols());
  s.log_u = Matrix::Zero(tau.rows(), tau.cols());
  s.log_v = Matrix::Zero(tau.rows(), tau.cols());
  return s;
}

}  // namespace cwm
