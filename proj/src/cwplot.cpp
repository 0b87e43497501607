#include <algorithm>
#include <cmath>
#include <fstream>

#include "cwm/selection.hpp"
#include "cwm/sweep.hpp"

namespace cwm {
namespace {

struct Bins {
  std::vector<double> edges;
  double lo = 0.0;
  double width = 1.0;

  std::size_t count() const { return edges.size() - 1; }
  std::size_t index(double x) const {
    const auto k = static_cast<long>(std::floor((x - lo) / width));
    return static_cast<std::size_t>(std::clamp<long>(k, 0, static_cast<long>(count()) - 1));
  }
};

// Sturges: ceil(log2 N) + 1 equal-width bins spanning the data.
Bins sturges_bins(const Vector& x) {
  const auto k = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(x.size())))) + 1;
  Bins b;
  double lo = x.minCoeff();
  double hi = x.maxCoeff();
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  b.lo = lo;
  b.width = (hi - lo) / static_cast<double>(k);
  for (std::size_t i = 0; i <= k; ++i) b.edges.push_back(lo + b.width * static_cast<double>(i));
  b.edges.back() = hi;
  return b;
}

}  // namespace

nlohmann::json cwplot_json(const FitResult& fit, const Dataset& data, Eigen::Index covariate_index,
                           const std::string& covariate_name) {
  if (covariate_index < 0 || covariate_index >= data.dim()) {
    throw Error(ErrorCode::IndexOutOfRange, "covariate index " + std::to_string(covariate_index) + " outside [0, " +
                                                std::to_string(data.dim()) + ")");
  }
  using nlohmann::json;
  const int G = fit.params.G;
  const Vector x = data.X.col(covariate_index);
  const auto labels = map_classify(fit.latent.tau);
  const Bins bins = sturges_bins(x);

  std::vector<std::int64_t> overall(bins.count(), 0);
  std::vector<std::vector<std::int64_t>> per_cluster(static_cast<std::size_t>(G),
                                                     std::vector<std::int64_t>(bins.count(), 0));
  json points = {{"x", json::array()}, {"y", json::array()}, {"cluster", json::array()}, {"max_tau", json::array()}};
  for (Eigen::Index n = 0; n < data.size(); ++n) {
    const auto b = bins.index(x[n]);
    const int c = labels[static_cast<std::size_t>(n)];
    ++overall[b];
    ++per_cluster[static_cast<std::size_t>(c)][b];
    points["x"].push_back(x[n]);
    points["y"].push_back(data.y[n]);
    points["cluster"].push_back(c + 1);
    points["max_tau"].push_back(fit.latent.tau(n, c));
  }

  json clusters = json::array();
  json lines = json::array();
  for (int g = 0; g < G; ++g) {
    clusters.push_back({{"cluster", g + 1}, {"counts", per_cluster[static_cast<std::size_t>(g)]}});
    const auto& r = fit.params.regression(g);
    // Other covariates held at their cluster means (overall means for an empty cluster).
    double mass = 0.0;
    Vector means = Vector::Zero(data.dim());
    for (Eigen::Index n = 0; n < data.size(); ++n) {
      if (labels[static_cast<std::size_t>(n)] == g) {
        means += data.X.row(n).transpose();
        mass += 1.0;
      }
    }
    means = mass > 0.0 ? Vector(means / mass) : Vector(data.X.colwise().mean().transpose());
    double intercept = r.beta0;
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      if (j != covariate_index) intercept += r.beta1[j] * means[j];
    }
    lines.push_back({{"cluster", g + 1},
                     {"beta0", r.beta0},
                     {"beta1", r.beta1[covariate_index]},
                     {"beta1_all", std::vector<double>(r.beta1.data(), r.beta1.data() + r.beta1.size())},
                     {"intercept_at_cluster_means", intercept}});
  }

  json doc;
  doc["header"] = {
      {"format", "cwm-cwplot/1"},
      {"keys",
       {{"histogram.edges", "bin edges of the covariate (covariate units), Sturges rule"},
        {"histogram.counts", "observations per bin over all data"},
        {"histogram.per_cluster", "observations per bin for each MAP cluster (1-based)"},
        {"lines", "per-cluster regression: y = beta0 + beta1_all' x; beta1 is the coefficient of this covariate"},
        {"lines.intercept_at_cluster_means",
         "intercept of the line in this covariate with other covariates at the cluster means (response units)"},
        {"points", "per observation: covariate x, response y, MAP cluster (1-based), max posterior probability"}}}};
  doc["model"] = fit.spec.name();
  doc["G"] = G;
  doc["covariate"] = {{"index", covariate_index}, {"name", covariate_name}};
  doc["histogram"] = {{"edges", bins.edges}, {"counts", overall}, {"per_cluster", clusters}};
  doc["lines"] = lines;
  doc["points"] = points;
  return doc;
}

void export_cwplot(const FitResult& fit, const Dataset& data, Eigen::Index covariate_index,
                   const std::filesystem::path& path, const std::string& covariate_name) {
  const auto doc = cwplot_json(fit, data, covariate_index, covariate_name);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace cwm
