#include "cwm/sweep.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "cwm/io.hpp"

namespace cwm {

void RunConfig::validate() const {
  if (g_min < 1 || g_min > g_max) throw Error(ErrorCode::InvalidConfig, "need 1 <= g-min <= g-max");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidConfig, "epsilon must be positive");
  if (max_iter < 3) throw Error(ErrorCode::InvalidConfig, "max-iter must be at least 3");
  if (n_starts < 1) throw Error(ErrorCode::InvalidConfig, "starts must be positive");
  model_names();
}

std::vector<std::string> RunConfig::model_names() const {
  std::vector<std::string> out;
  const auto specs = all_model_specs();
  if (models.empty() || (models.size() == 1 && models[0] == "all")) {
    for (const auto& s : specs) out.push_back(s.name());
    return out;
  }
  std::set<std::string> requested;
  for (const auto& m : models) requested.insert(ModelSpec::from_name(m).name());
  for (const auto& s : specs) {
    if (requested.contains(s.name())) out.push_back(s.name());
  }
  return out;
}

EmConfig RunConfig::em_config() const {
  EmConfig cfg;
  cfg.epsilon = epsilon;
  cfg.max_iter = max_iter;
  return cfg;
}

namespace {

const SweepEntry* best_by(const std::vector<SweepEntry>& entries, std::optional<int> G, double SelectionRecord::*key) {
  const SweepEntry* best = nullptr;
  for (const auto& e : entries) {
    if (!e.record || (G && e.G != *G)) continue;
    if (best == nullptr || (*e.record).*key > (*best->record).*key) best = &e;
  }
  return best;
}

std::string num(double v) { return nlohmann::json(v).dump(); }

void write_atomically(const std::filesystem::path& path, const std::string& body) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << body;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string assignments_csv(const FitResult& fit) {
  std::ostringstream os;
  os << "row,map";
  for (int g = 0; g < fit.params.G; ++g) os << ",tau_" << g + 1;
  os << '\n';
  const auto labels = map_classify(fit.latent.tau);
  for (Eigen::Index n = 0; n < fit.latent.tau.rows(); ++n) {
    os << n + 1 << ',' << labels[static_cast<std::size_t>(n)] + 1;
    for (int g = 0; g < fit.params.G; ++g) os << ',' << num(fit.latent.tau(n, g));
    os << '\n';
  }
  return os.str();
}

}  // namespace

const SweepEntry* SweepReport::best_bic(std::optional<int> G) const { return best_by(entries, G, &SelectionRecord::bic); }
const SweepEntry* SweepReport::best_icl(std::optional<int> G) const { return best_by(entries, G, &SelectionRecord::icl); }

SweepReport sweep_dataset(const Dataset& data, const RunConfig& cfg) {
  cfg.validate();
  const auto names = cfg.model_names();
  const std::set<std::string> wanted(names.begin(), names.end());
  const EmConfig em = cfg.em_config();
  std::optional<std::vector<int>> truth;
  if (data.labels) truth = encode_labels(*data.labels);

  SweepReport report;
  for (int G = cfg.g_min; G <= cfg.g_max; ++G) {
    const auto h = hierarchical_fit(data, G, cfg.seed, em, cfg.n_starts, wanted);
    bool any_converged = false;
    for (const auto& name : names) {
      SweepEntry e{name, G, h.fits.at(name), h.init.at(name), std::nullopt};
      if (const auto* fit = std::get_if<FitResult>(&e.outcome)) {
        e.record = make_selection_record(*fit, truth);
        any_converged = any_converged || fit->converged;
      }
      report.entries.push_back(std::move(e));
    }
    report.edges.emplace_back(G, h.edges);
    if (!any_converged) report.exit_code = 2;
  }
  return report;
}

nlohmann::json params_json(const ParameterSet& params) {
  using nlohmann::json;
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json marginals = json::array();
  for (const auto& m : params.marginals) {
    json Sigma = json::array();
    for (Eigen::Index r = 0; r < m.Sigma.rows(); ++r) Sigma.push_back(vec(m.Sigma.row(r).transpose()));
    json block = {{"mu", vec(m.mu)}, {"Sigma", Sigma}};
    block["nu"] = m.nu ? json(*m.nu) : json(nullptr);
    marginals.push_back(block);
  }
  json regressions = json::array();
  for (const auto& r : params.regressions) {
    json block = {{"beta0", r.beta0}, {"beta1", vec(r.beta1)}, {"sigma2", r.sigma2}};
    block["zeta"] = r.zeta ? json(*r.zeta) : json(nullptr);
    regressions.push_back(block);
  }
  return {{"G", params.G}, {"pi", vec(params.pi)}, {"marginal", marginals}, {"regression", regressions}};
}

nlohmann::json results_json(const SweepReport& report, const RunConfig& cfg, const Dataset& data,
                            const std::string& timestamp) {
  using nlohmann::json;
  json doc;
  doc["generated_at"] = timestamp;
  doc["config"] = {{"data", cfg.data_path.string()},
                   {"response", cfg.response_column},
                   {"covariates", cfg.covariate_columns},
                   {"labels", cfg.label_column ? json(*cfg.label_column) : json(nullptr)},
                   {"g_min", cfg.g_min},
                   {"g_max", cfg.g_max},
                   {"models", cfg.model_names()},
                   {"seed", cfg.seed},
                   {"epsilon", cfg.epsilon},
                   {"max_iter", cfg.max_iter},
                   {"starts", cfg.n_starts}};
  doc["data"] = {{"N", data.size()}, {"d", data.dim()}};

  json records = json::array();
  for (const auto& e : report.entries) {
    json r = {{"model", e.model}, {"G", e.G}, {"init_source", e.init.source}, {"init_fallback", e.init.fallback}};
    if (const auto* fit = std::get_if<FitResult>(&e.outcome)) {
      r["status"] = "ok";
      r["m"] = fit->m;
      r["loglik"] = fit->loglik;
      r["bic"] = fit->bic;
      r["icl"] = fit->icl;
      r["ari"] = e.record->ari ? json(*e.record->ari) : json(nullptr);
      r["n_iter"] = fit->n_iter;
      r["converged"] = fit->converged;
      r["loglik_trace"] = fit->loglik_trace;
      r["params"] = params_json(fit->params);
    } else {
      const auto& f = std::get<FitFailure>(e.outcome);
      r["status"] = "failed";
      r["error"] = {{"code", std::string(to_string(f.code))}, {"message", f.message}};
    }
    records.push_back(r);
  }
  doc["records"] = records;

  json best = json::array();
  for (int G = cfg.g_min; G <= cfg.g_max; ++G) {
    json b = {{"G", G}};
    const auto* bb = report.best_bic(G);
    const auto* bi = report.best_icl(G);
    b["bic"] = bb ? json{{"model", bb->model}, {"value", bb->record->bic}} : json(nullptr);
    b["icl"] = bi ? json{{"model", bi->model}, {"value", bi->record->icl}} : json(nullptr);
    best.push_back(b);
  }
  doc["best_per_G"] = best;
  const auto* ob = report.best_bic();
  const auto* oi = report.best_icl();
  doc["best_overall"] = {
      {"bic", ob ? json{{"model", ob->model}, {"G", ob->G}, {"value", ob->record->bic}} : json(nullptr)},
      {"icl", oi ? json{{"model", oi->model}, {"G", oi->G}, {"value", oi->record->icl}} : json(nullptr)}};

  json edges = json::array();
  for (const auto& [G, list] : report.edges) {
    json l = json::array();
    for (const auto& [s, t] : list) l.push_back({s, t});
    edges.push_back({{"G", G}, {"edges", l}});
  }
  doc["initialization_edges"] = edges;
  return doc;
}

void print_ranked_table(const SweepReport& report, std::ostream& out) {
  std::set<int> Gs;
  for (const auto& e : report.entries) Gs.insert(e.G);
  for (int G : Gs) {
    std::vector<const SweepEntry*> ok;
    std::vector<const SweepEntry*> failed;
    for (const auto& e : report.entries) {
      if (e.G != G) continue;
      (e.record ? ok : failed).push_back(&e);
    }
    std::stable_sort(ok.begin(), ok.end(), [](auto* a, auto* b) { return a->record->bic > b->record->bic; });
    const auto* bb = report.best_bic(G);
    const auto* bi = report.best_icl(G);
    out << "G = " << G << '\n';
    out << std::left << std::setw(6) << "rank" << std::setw(8) << "model" << std::setw(5) << "m" << std::setw(22)
        << "loglik" << std::setw(22) << "BIC" << std::setw(22) << "ICL" << std::setw(22) << "ARI" << std::setw(6)
        << "iter" << std::setw(6) << "conv" << '\n';
    int rank = 1;
    for (const auto* e : ok) {
      const auto& r = *e->record;
      const auto& fit = std::get<FitResult>(e->outcome);
      std::string marks;
      if (e == bb) marks += " *BIC";
      if (e == bi) marks += " *ICL";
      out << std::left << std::setw(6) << rank++ << std::setw(8) << r.model << std::setw(5) << r.m << std::setw(22)
          << num(r.loglik) << std::setw(22) << num(r.bic) << std::setw(22) << num(r.icl) << std::setw(22)
          << (r.ari ? num(*r.ari) : std::string("-")) << std::setw(6) << fit.n_iter << std::setw(6)
          << (fit.converged ? "yes" : "no") << marks << '\n';
    }
    for (const auto* e : failed) {
      out << std::left << std::setw(6) << "-" << std::setw(8) << e->model << "failed: "
          << std::get<FitFailure>(e->outcome).message << '\n';
    }
    out << '\n';
  }
}

int run_sweep(const RunConfig& cfg, std::ostream& table_out) {
  cfg.validate();
  const Dataset data = load_csv(cfg.data_path, cfg.response_column, cfg.covariate_columns, cfg.label_column);
  const SweepReport report = sweep_dataset(data, cfg);

  std::filesystem::create_directories(cfg.output_dir);
  write_atomically(cfg.output_dir / "results.json", results_json(report, cfg, data, utc_timestamp()).dump(2) + "\n");
  for (const auto& e : report.entries) {
    if (const auto* fit = std::get_if<FitResult>(&e.outcome)) {
      write_atomically(cfg.output_dir / ("assignments_" + e.model + "_" + std::to_string(e.G) + ".csv"),
                       assignments_csv(*fit));
    }
  }
  for (int G = cfg.g_min; G <= cfg.g_max; ++G) {
    const auto* best = report.best_bic(G);
    if (best == nullptr) continue;
    const auto& fit = std::get<FitResult>(best->outcome);
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      const auto& name = cfg.covariate_columns[static_cast<std::size_t>(j)];
      write_atomically(cfg.output_dir / ("cwplot_" + best->model + "_" + std::to_string(G) + "_" + name + ".json"),
                       cwplot_json(fit, data, j, name).dump(2) + "\n");
    }
  }
  print_ranked_table(report, table_out);
  return report.exit_code;
}

}  // namespace cwm
