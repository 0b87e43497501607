#include "cwm/initializer.hpp"

#include <algorithm>
#include <random>

namespace cwm {

Matrix random_partition(Eigen::Index N, int G, std::uint64_t seed) {
  if (G < 1 || N < G) throw Error(ErrorCode::InvalidConfig, "random_partition needs N >= G >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, G - 1);
  std::vector<int> labels(static_cast<std::size_t>(N));
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(G));
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::fill(counts.begin(), counts.end(), 0);
    for (auto& l : labels) {
      l = pick(rng);
      ++counts[static_cast<std::size_t>(l)];
    }
    if (std::all_of(counts.begin(), counts.end(), [](Eigen::Index c) { return c > 0; })) {
      Matrix z = Matrix::Zero(N, G);
      for (Eigen::Index n = 0; n < N; ++n) z(n, labels[static_cast<std::size_t>(n)]) = 1.0;
      return z;
    }
  }
  throw Error(ErrorCode::PartitionFailure, "no partition with all components populated after 100 draws");
}

FitResult multistart_fit(const Dataset& data, const ModelSpec& spec, int G, int n_starts, std::uint64_t seed,
                         const EmConfig& cfg) {
  if (n_starts < 1) throw Error(ErrorCode::InvalidConfig, "n_starts must be positive");
  std::optional<FitResult> best;
  std::string last_error = "no starts attempted";
  for (int s = 0; s < n_starts; ++s) {
    try {
      const Matrix z = random_partition(data.size(), G, seed + static_cast<std::uint64_t>(s));
      FitResult fit = em_fit(data, spec, G, z, cfg);
      if (!best || fit.loglik > best->loglik) best = std::move(fit);
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  if (!best) {
    throw Error(ErrorCode::AllStartsFailed, spec.name() + ": every start failed, last error: " + last_error);
  }
  return std::move(*best);
}

const FitResult* HierarchyResult::fit(const std::string& name) const {
  const auto it = fits.find(name);
  if (it == fits.end()) return nullptr;
  return std::get_if<FitResult>(&it->second);
}

std::vector<std::string> hierarchy_sources(const std::string& model) {
  static const std::map<std::string, std::vector<std::string>> sources{
      {"NN-VE", {}},
      {"NN-EV", {}},
      {"tN-VE", {"NN-VE"}},
      {"Nt-VE", {"NN-VE"}},
      {"tN-EV", {"NN-EV"}},
      {"Nt-EV", {"NN-EV"}},
      {"NN-VV", {"NN-VE", "NN-EV"}},
      {"tt-VE", {"tN-VE", "Nt-VE"}},
      {"tt-EV", {"tN-EV", "Nt-EV"}},
      {"tN-VV", {"tN-VE", "tN-EV", "NN-VV"}},
      {"Nt-VV", {"Nt-VE", "Nt-EV", "NN-VV"}},
      {"tt-VV", {"Nt-VV", "tN-VV", "tt-VE", "tt-EV"}},
  };
  const auto it = sources.find(model);
  if (it == sources.end()) throw Error(ErrorCode::InvalidConfig, "unknown model name '" + model + "'");
  return it->second;
}

namespace {

// Dependency order: every model appears after all of its sources.
const std::vector<std::string>& fitting_order() {
  static const std::vector<std::string> order{"NN-VE", "NN-EV", "tN-VE", "Nt-VE", "tN-EV", "Nt-EV",
                                              "NN-VV", "tt-VE", "tt-EV", "tN-VV", "Nt-VV", "tt-VV"};
  return order;
}

std::uint64_t model_seed(std::uint64_t seed, const std::string& model) {
  const auto specs = all_model_specs();
  std::uint64_t index = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].name() == model) index = i;
  }
  return seed + 1000 * index;
}

void add_with_sources(const std::string& model, std::set<std::string>& out) {
  if (!out.insert(model).second) return;
  for (const auto& s : hierarchy_sources(model)) add_with_sources(s, out);
}

}  // namespace

HierarchyResult hierarchical_fit(const Dataset& data, int G, std::uint64_t seed, const EmConfig& cfg, int n_starts,
                                 const std::optional<std::set<std::string>>& wanted) {
  if (G < 1) throw Error(ErrorCode::InvalidConfig, "G must be positive");
  std::set<std::string> needed;
  if (wanted) {
    for (const auto& m : *wanted) add_with_sources(m, needed);
  } else {
    needed.insert(fitting_order().begin(), fitting_order().end());
  }
  // With one component every random partition is the same column of ones.
  const int starts = G == 1 ? 1 : n_starts;

  HierarchyResult result;
  for (const auto& model : fitting_order()) {
    if (!needed.contains(model)) continue;
    const ModelSpec spec = ModelSpec::from_name(model);
    const auto sources = hierarchy_sources(model);

    const FitResult* best_source = nullptr;
    std::string best_name;
    for (const auto& s : sources) {
      const FitResult* f = result.fit(s);
      if (f != nullptr && (best_source == nullptr || f->loglik > best_source->loglik)) {
        best_source = f;
        best_name = s;
      }
    }

    try {
      if (best_source != nullptr) {
        result.edges.emplace_back(best_name, model);
        result.init[model] = InitRecord{best_name, false};
        result.fits.emplace(model, em_fit(data, spec, G, best_source->latent.tau, cfg));
      } else {
        result.init[model] = InitRecord{"random", !sources.empty()};
        result.fits.emplace(model, multistart_fit(data, spec, G, starts, model_seed(seed, model), cfg));
      }
    } catch (const Error& e) {
      result.fits.emplace(model, FitFailure{e.code(), e.what()});
    }
  }
  return result;
}

}  // namespace cwm
