#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cwm/types.hpp"

namespace cwm {

/// Free parameters: covariate part + response part + (G - 1) weights.
int count_parameters(const ModelSpec& spec, int G, Eigen::Index d);

/// 2 loglik - m ln N
double bic(double loglik, int m, Eigen::Index N);

/// BIC plus the log posterior of each observation's MAP component.
double icl(double bic_value, const Matrix& tau);

/// Row-wise argmax of tau (0-based); ties go to the lowest index.
std::vector<int> map_classify(const Matrix& tau);

double rand_index(std::span<const int> a, std::span<const int> b);

/// Hubert-Arabie adjusted Rand index. Two identical trivial partitions give 1.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Integer codes for string labels, numbered by first appearance.
std::vector<int> encode_labels(const std::vector<std::string>& labels);

struct SelectionRecord {
  std::string model;
  int G = 0;
  int m = 0;
  double loglik = 0.0;
  double bic = 0.0;
  double icl = 0.0;
  std::optional<double> ari;
};

SelectionRecord make_selection_record(const FitResult& fit, const std::optional<std::vector<int>>& truth);

}  // namespace cwm
