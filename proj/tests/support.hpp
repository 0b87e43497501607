#pragma once

// Synthetic data and random-parameter generators shared by the test binaries.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "cwm/types.hpp"

namespace cwm::testing {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ComponentTruth {
  double weight = 1.0;
  Vector mu;
  Matrix Sigma;
  double nu = kInf;  // marginal df; infinity means Normal
  double beta0 = 0.0;
  Vector beta1;
  double sigma2 = 1.0;
  double zeta = kInf;  // conditional df
};

struct Synthetic {
  Dataset data;
  std::vector<int> labels;
};

// Gamma(df/2, rate df/2) precision scale; 1 for the Normal limit.
inline double precision_draw(double df, std::mt19937_64& rng) {
  if (!std::isfinite(df)) return 1.0;
  std::gamma_distribution<double> gamma(0.5 * df, 2.0 / df);
  return gamma(rng);
}

inline Synthetic simulate(const std::vector<ComponentTruth>& comps, Eigen::Index N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> w;
  for (const auto& c : comps) w.push_back(c.weight);
  std::discrete_distribution<int> pick(w.begin(), w.end());
  std::normal_distribution<double> z01(0.0, 1.0);
  const Eigen::Index d = comps.front().mu.size();
  Vector y(N);
  Matrix X(N, d);
  std::vector<int> labels(static_cast<std::size_t>(N));
  for (Eigen::Index n = 0; n < N; ++n) {
    const int g = pick(rng);
    const auto& c = comps[static_cast<std::size_t>(g)];
    labels[static_cast<std::size_t>(n)] = g;
    const Matrix L = c.Sigma.llt().matrixL();
    Vector z(d);
    for (Eigen::Index j = 0; j < d; ++j) z[j] = z01(rng);
    const double u = precision_draw(c.nu, rng);
    const Vector x = c.mu + L * z / std::sqrt(u);
    const double v = precision_draw(c.zeta, rng);
    X.row(n) = x.transpose();
    y[n] = c.beta0 + c.beta1.dot(x) + std::sqrt(c.sigma2 / v) * z01(rng);
  }
  std::vector<std::string> text;
  for (int l : labels) text.push_back(std::to_string(l));
  return {Dataset(std::move(y), std::move(X), std::move(text)), labels};
}

inline Matrix random_spd(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> z01(0.0, 1.0);
  Matrix A(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) A(i, j) = z01(rng);
  }
  return A * A.transpose() + 0.5 * Matrix::Identity(d, d);
}

inline Vector random_vector(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> z01(0.0, scale);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = z01(rng);
  return v;
}

inline MarginalParams random_marginal(const ModelSpec& spec, Eigen::Index d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> df(2.5, 30.0);
  MarginalParams m{random_vector(d, rng, 2.0), random_spd(d, rng), std::nullopt};
  if (spec.marginal_is_t()) m.nu = df(rng);
  return m;
}

inline RegressionParams random_regression(const ModelSpec& spec, Eigen::Index d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> df(2.5, 30.0);
  std::uniform_real_distribution<double> var(0.3, 3.0);
  RegressionParams r{random_vector(1, rng)[0], random_vector(d, rng), var(rng), std::nullopt};
  if (spec.conditional_is_t()) r.zeta = df(rng);
  return r;
}

inline ParameterSet random_params(const ModelSpec& spec, int G, Eigen::Index d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  ParameterSet p;
  p.G = G;
  p.pi.resize(G);
  for (int g = 0; g < G; ++g) p.pi[g] = unif(rng);
  p.pi /= p.pi.sum();
  const int n_marg = spec.marginal_shared() ? 1 : G;
  const int n_reg = spec.conditional_shared() ? 1 : G;
  for (int g = 0; g < n_marg; ++g) p.marginals.push_back(random_marginal(spec, d, rng));
  for (int g = 0; g < n_reg; ++g) p.regressions.push_back(random_regression(spec, d, rng));
  return p;
}

inline Dataset random_dataset(Eigen::Index N, Eigen::Index d, std::mt19937_64& rng) {
  Vector y = random_vector(N, rng, 2.0);
  Matrix X(N, d);
  for (Eigen::Index j = 0; j < d; ++j) X.col(j) = random_vector(N, rng, 2.0);
  return Dataset(std::move(y), std::move(X));
}

// Two well-separated NN-VV clusters in one covariate: mu = -3/+3, unit variances,
// slopes +1 / -1.
inline Synthetic two_line_clusters(Eigen::Index N, std::uint64_t seed) {
  ComponentTruth a;
  a.weight = 0.5;
  a.mu = Vector::Constant(1, -3.0);
  a.Sigma = Matrix::Identity(1, 1);
  a.beta0 = 0.0;
  a.beta1 = Vector::Constant(1, 1.0);
  a.sigma2 = 1.0;
  ComponentTruth b = a;
  b.mu = Vector::Constant(1, 3.0);
  b.beta1 = Vector::Constant(1, -1.0);
  return simulate({a, b}, N, seed);
}

// Three overlapping heavy-tailed clusters in two covariates with random geometry.
inline Synthetic three_t_clusters(Eigen::Index N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ComponentTruth> comps;
  for (int g = 0; g < 3; ++g) {
    ComponentTruth c;
    c.mu = random_vector(2, rng, 3.0);
    c.Sigma = random_spd(2, rng);
    c.nu = 4.0 + 4.0 * g;
    c.beta0 = g;
    c.beta1 = random_vector(2, rng);
    c.sigma2 = 0.5 + g;
    c.zeta = 4.0 + 3.0 * g;
    comps.push_back(c);
  }
  return simulate(comps, N, seed + 1);
}

// Common regression, separated covariate clouds.
inline Synthetic nn_ve_clusters(Eigen::Index N, std::uint64_t seed) {
  ComponentTruth a;
  a.weight = 0.5;
  a.mu = (Vector(2) << -2.0, -2.0).finished();
  a.Sigma = (Matrix(2, 2) << 1.0, 0.3, 0.3, 1.0).finished();
  a.beta0 = 1.0;
  a.beta1 = (Vector(2) << 1.0, -0.5).finished();
  a.sigma2 = 1.0;
  ComponentTruth b = a;
  b.mu = (Vector(2) << 2.0, 1.5).finished();
  b.Sigma = (Matrix(2, 2) << 1.5, -0.4, -0.4, 0.8).finished();
  return simulate({a, b}, N, seed);
}

// Common covariate cloud, distinct regressions.
inline Synthetic nn_ev_clusters(Eigen::Index N, std::uint64_t seed) {
  ComponentTruth a;
  a.weight = 0.5;
  a.mu = Vector::Zero(2);
  a.Sigma = (Matrix(2, 2) << 2.0, 0.5, 0.5, 1.0).finished();
  a.beta0 = 3.0;
  a.beta1 = (Vector(2) << 2.0, 1.0).finished();
  a.sigma2 = 0.5;
  ComponentTruth b = a;
  b.beta0 = -3.0;
  b.beta1 = (Vector(2) << -2.0, 0.5).finished();
  b.sigma2 = 1.0;
  return simulate({a, b}, N, seed);
}

inline Matrix hard_tau(const std::vector<int>& labels, int G) {
  Matrix tau = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), G);
  for (std::size_t n = 0; n < labels.size(); ++n) tau(static_cast<Eigen::Index>(n), labels[n]) = 1.0;
  return tau;
}

// O(N^2) pair counting over all (i, j), i < j.
struct PairOracle {
  double rand = 0.0;
  double adjusted = 0.0;
};

inline PairOracle pair_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  std::int64_t same_a = 0, same_b = 0, same_both = 0, diff_both = 0, total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j];
      const bool sb = b[i] == b[j];
      same_a += sa;
      same_b += sb;
      same_both += sa && sb;
      diff_both += !sa && !sb;
      ++total;
    }
  }
  PairOracle out;
  out.rand = static_cast<double>(same_both + diff_both) / static_cast<double>(total);
  const __int128 prod = static_cast<__int128>(same_a) * same_b;
  const __int128 num = 2 * (static_cast<__int128>(same_both) * total - prod);
  const __int128 den = static_cast<__int128>(same_a + same_b) * total - 2 * prod;
  out.adjusted = den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  return out;
}

}  // namespace cwm::testing
