#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cwm/types.hpp"

namespace cwm {

/// Reads a UTF-8 CSV with a header row. Response and covariate columns must be
/// numeric; the label column (if any) is kept as text.
Dataset load_csv(const std::filesystem::path& path, const std::string& response,
                 const std::vector<std::string>& covariates, const std::optional<std::string>& label_column);

/// Splits one CSV record. Handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace cwm
