#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include "cwm/io.hpp"

namespace cwm {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& response,
                 const std::vector<std::string>& covariates, const std::optional<std::string>& label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw Error(ErrorCode::EmptyFile, path.string() + " has no header");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  auto header = split_csv_line(line);
  for (auto& h : header) h = std::string(trim(h));

  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found in " + path.string());
  };
  if (covariates.empty()) throw Error(ErrorCode::InvalidConfig, "at least one covariate column is required");
  const std::size_t y_col = column(response);
  std::vector<std::size_t> x_cols;
  for (const auto& c : covariates) x_cols.push_back(column(c));
  const std::optional<std::size_t> label_col =
      label_column ? std::optional<std::size_t>(column(*label_column)) : std::nullopt;

  std::vector<double> ys;
  std::vector<std::vector<double>> xs;
  std::vector<std::string> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    auto numeric = [&](std::size_t col) {
      const std::string cell = col < fields.size() ? fields[col] : std::string();
      const auto v = parse_number(cell);
      if (!v) {
        throw Error(ErrorCode::NonNumericCell, "row " + std::to_string(row) + ", column '" + header[col] +
                                                   "': cannot parse '" + cell + "' as a number");
      }
      return *v;
    };
    ys.push_back(numeric(y_col));
    std::vector<double> x;
    for (auto c : x_cols) x.push_back(numeric(c));
    xs.push_back(std::move(x));
    if (label_col) {
      labels.emplace_back(*label_col < fields.size() ? trim(fields[*label_col]) : std::string_view{});
    }
  }
  if (ys.empty()) throw Error(ErrorCode::EmptyFile, path.string() + " has no data rows");

  const auto N = static_cast<Eigen::Index>(ys.size());
  const auto d = static_cast<Eigen::Index>(x_cols.size());
  Vector y = Eigen::Map<const Vector>(ys.data(), N);
  Matrix X(N, d);
  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index j = 0; j < d; ++j) X(n, j) = xs[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)];
  }
  std::optional<std::vector<std::string>> lab;
  if (label_col) lab = std::move(labels);
  return Dataset(std::move(y), std::move(X), std::move(lab));
}

}  // namespace cwm
