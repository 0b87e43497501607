#include "cwm/selection.hpp"

#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace cwm {

int count_parameters(const ModelSpec& spec, int G, Eigen::Index d_in) {
  const int d = static_cast<int>(d_in);
  const int t_marg = spec.marginal_is_t() ? 1 : 0;
  const int t_cond = spec.conditional_is_t() ? 1 : 0;
  const int per_marginal = d + d * (d + 1) / 2 + t_marg;
  const int per_regression = d + 2 + t_cond;
  const int x_part = spec.marginal_shared() ? per_marginal : G * per_marginal;
  const int y_part = spec.conditional_shared() ? per_regression : G * per_regression;
  return x_part + y_part + (G - 1);
}

double bic(double loglik, int m, Eigen::Index N) {
  return 2.0 * loglik - static_cast<double>(m) * std::log(static_cast<double>(N));
}

std::vector<int> map_classify(const Matrix& tau) {
  std::vector<int> out(static_cast<std::size_t>(tau.rows()));
  for (Eigen::Index n = 0; n < tau.rows(); ++n) {
    int best = 0;
    for (Eigen::Index g = 1; g < tau.cols(); ++g) {
      if (tau(n, g) > tau(n, best)) best = static_cast<int>(g);
    }
    out[static_cast<std::size_t>(n)] = best;
  }
  return out;
}

double icl(double bic_value, const Matrix& tau) {
  const auto labels = map_classify(tau);
  double entropy = 0.0;
  for (Eigen::Index n = 0; n < tau.rows(); ++n) entropy += std::log(tau(n, labels[static_cast<std::size_t>(n)]));
  return bic_value + entropy;
}

namespace {

struct PairCounts {
  std::int64_t together_both = 0;  // sum_ij C(n_ij, 2)
  std::int64_t together_a = 0;     // sum_i C(a_i, 2)
  std::int64_t together_b = 0;     // sum_j C(b_j, 2)
  std::int64_t total = 0;          // C(N, 2)
};

std::int64_t choose2(std::int64_t k) { return k * (k - 1) / 2; }

std::vector<int> compress(std::span<const int> labels, int& k) {
  std::unordered_map<int, int> ids;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(labels[i], static_cast<int>(ids.size()));
    out[i] = it->second;
  }
  k = static_cast<int>(ids.size());
  return out;
}

PairCounts contingency_pairs(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "partitions have different lengths");
  if (a.size() < 2) throw Error(ErrorCode::LengthMismatch, "at least two observations are needed");
  int ka = 0;
  int kb = 0;
  const auto ca = compress(a, ka);
  const auto cb = compress(b, kb);
  std::vector<std::int64_t> table(static_cast<std::size_t>(ka) * kb, 0);
  std::vector<std::int64_t> rows(static_cast<std::size_t>(ka), 0);
  std::vector<std::int64_t> cols(static_cast<std::size_t>(kb), 0);
  for (std::size_t i = 0; i < ca.size(); ++i) {
    ++table[static_cast<std::size_t>(ca[i]) * kb + cb[i]];
    ++rows[static_cast<std::size_t>(ca[i])];
    ++cols[static_cast<std::size_t>(cb[i])];
  }
  PairCounts pc;
  for (auto c : table) pc.together_both += choose2(c);
  for (auto c : rows) pc.together_a += choose2(c);
  for (auto c : cols) pc.together_b += choose2(c);
  pc.total = choose2(static_cast<std::int64_t>(a.size()));
  return pc;
}

}  // namespace

double rand_index(std::span<const int> a, std::span<const int> b) {
  const auto pc = contingency_pairs(a, b);
  // apart in both = total - together_a - together_b + together_both
  const std::int64_t agree = pc.total - pc.together_a - pc.together_b + 2 * pc.together_both;
  return static_cast<double>(agree) / static_cast<double>(pc.total);
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  const auto pc = contingency_pairs(a, b);
  // (index - expected) / (max - expected), scaled by 2 * total so every term is an integer.
  using wide = __int128;
  const wide total = pc.total;
  const wide prod = static_cast<wide>(pc.together_a) * pc.together_b;
  const wide num = 2 * (static_cast<wide>(pc.together_both) * total - prod);
  const wide den = static_cast<wide>(pc.together_a + pc.together_b) * total - 2 * prod;
  if (den == 0) return 1.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::vector<int> encode_labels(const std::vector<std::string>& labels) {
  std::unordered_map<std::string, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& s : labels) {
    auto [it, inserted] = ids.try_emplace(s, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

SelectionRecord make_selection_record(const FitResult& fit, const std::optional<std::vector<int>>& truth) {
  SelectionRecord rec{fit.spec.name(), fit.params.G, fit.m, fit.loglik, fit.bic, fit.icl, std::nullopt};
  if (truth) {
    const auto pred = map_classify(fit.latent.tau);
    rec.ari = adjusted_rand_index(pred, *truth);
  }
  return rec;
}

}  // namespace cwm
