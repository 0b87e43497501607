// Command-line front end: fits the twelve linear CWMs over a range of G and ranks them.
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cwm/sweep.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Model-based clustering with linear cluster-weighted models"};
  cwm::RunConfig cfg;
  std::string labels;
  std::string models = "all";

  app.add_option("--data", cfg.data_path, "CSV file with a header row")->required();
  app.add_option("--response", cfg.response_column, "response column")->required();
  app.add_option("--covariates", cfg.covariate_columns, "comma-separated covariate columns")
      ->required()
      ->delimiter(',');
  app.add_option("--labels", labels, "optional column of true group labels (used for ARI only)");
  app.add_option("--g-min", cfg.g_min, "smallest number of components")->capture_default_str();
  app.add_option("--g-max", cfg.g_max, "largest number of components")->capture_default_str();
  app.add_option("--models", models, "'all' or comma-separated model names, e.g. NN-VE,tt-VV")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--epsilon", cfg.epsilon, "Aitken stopping threshold")->capture_default_str();
  app.add_option("--max-iter", cfg.max_iter, "EM iteration cap")->capture_default_str();
  app.add_option("--starts", cfg.n_starts, "random starts for the NN-VE/NN-EV roots")->capture_default_str();
  app.add_option("--out", cfg.output_dir, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (!labels.empty()) cfg.label_column = labels;
  if (models != "all") {
    std::stringstream ss(models);
    for (std::string m; std::getline(ss, m, ',');) {
      if (!m.empty()) cfg.models.push_back(m);
    }
  }

  try {
    return cwm::run_sweep(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "cwm: " << e.what() << '\n';
    return 1;
  }
}
