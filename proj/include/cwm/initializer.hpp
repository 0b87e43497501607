#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cwm/em.hpp"
#include "cwm/types.hpp"

namespace cwm {

/// N x G hard assignment drawn uniformly over components; every component gets
/// at least one row (up to 100 redraws, then PartitionFailure).
Matrix random_partition(Eigen::Index N, int G, std::uint64_t seed);

/// Best (highest final loglik) of n_starts em_fit runs from random partitions
/// seeded seed, seed + 1, ... Throws AllStartsFailed if none succeeds.
FitResult multistart_fit(const Dataset& data, const ModelSpec& spec, int G, int n_starts, std::uint64_t seed,
                         const EmConfig& cfg = {});

struct FitFailure {
  ErrorCode code;
  std::string message;
};

/// How a model in the hierarchy was started.
struct InitRecord {
  std::string source;         // model whose tau was used, or "random" for multistart
  bool fallback = false;      // true when every designated source had failed
};

struct HierarchyResult {
  std::map<std::string, std::variant<FitResult, FitFailure>> fits;
  std::vector<std::pair<std::string, std::string>> edges;  // (source, target), in fitting order
  std::map<std::string, InitRecord> init;

  const FitResult* fit(const std::string& name) const;
};

/// Designated initialization sources of a model (empty for the two random-start roots).
std::vector<std::string> hierarchy_sources(const std::string& model);

/// Fits the twelve models in dependency order. When `wanted` is given only those
/// models and the models they are initialized from are fitted.
HierarchyResult hierarchical_fit(const Dataset& data, int G, std::uint64_t seed, const EmConfig& cfg = {},
                                 int n_starts = 10,
                                 const std::optional<std::set<std::string>>& wanted = std::nullopt);

}  // namespace cwm
