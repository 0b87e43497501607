#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cwm/initializer.hpp"
#include "cwm/selection.hpp"

namespace cwm {

struct RunConfig {
  std::filesystem::path data_path;
  std::string response_column;
  std::vector<std::string> covariate_columns;
  std::optional<std::string> label_column;
  int g_min = 1;
  int g_max = 4;
  std::vector<std::string> models;  // empty means all twelve
  std::uint64_t seed = 1;
  double epsilon = 0.05;
  int max_iter = 1000;
  int n_starts = 10;
  std::filesystem::path output_dir = "cwm_out";

  void validate() const;
  std::vector<std::string> model_names() const;  // requested models in canonical order
  EmConfig em_config() const;
};

struct SweepEntry {
  std::string model;
  int G = 0;
  std::variant<FitResult, FitFailure> outcome;
  InitRecord init;
  std::optional<SelectionRecord> record;  // present for successful fits
};

struct SweepReport {
  std::vector<SweepEntry> entries;  // ordered by G, then canonical order
  std::vector<std::pair<int, std::vector<std::pair<std::string, std::string>>>> edges;  // per G
  int exit_code = 0;

  const SweepEntry* best_bic(std::optional<int> G = std::nullopt) const;
  const SweepEntry* best_icl(std::optional<int> G = std::nullopt) const;
};

/// Runs the hierarchy for every G in [g_min, g_max] on an in-memory dataset.
SweepReport sweep_dataset(const Dataset& data, const RunConfig& cfg);

/// results.json body. `timestamp` is the only field that varies between identical runs.
nlohmann::json results_json(const SweepReport& report, const RunConfig& cfg, const Dataset& data,
                            const std::string& timestamp);

/// Ranked per-G table; numbers are rendered exactly as in results.json.
void print_ranked_table(const SweepReport& report, std::ostream& out);

nlohmann::json params_json(const ParameterSet& params);

/// CW-plot data layer for one covariate: Sturges histograms (overall and per MAP
/// cluster), per-cluster regression lines, and the per-observation scatter.
nlohmann::json cwplot_json(const FitResult& fit, const Dataset& data, Eigen::Index covariate_index,
                           const std::string& covariate_name = "");
void export_cwplot(const FitResult& fit, const Dataset& data, Eigen::Index covariate_index,
                   const std::filesystem::path& path, const std::string& covariate_name = "");

/// Loads the CSV, sweeps, writes results.json, assignments_<model>_<G>.csv and
/// cwplot_<model>_<G>_<covariate>.json (best-BIC fit per G), prints the table.
/// Returns the process exit code: 0 if some model converged for every G, else 2.
int run_sweep(const RunConfig& cfg, std::ostream& table_out);

}  // namespace cwm
