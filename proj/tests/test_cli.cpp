#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "cwm/io.hpp"
#include "cwm/sweep.hpp"
#include "support.hpp"

using namespace cwm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cwm_test_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Io;
}

void write_dataset_csv(const fs::path& p, const testing::Synthetic& syn) {
  std::ostringstream os;
  os << std::setprecision(17) << "y";
  for (Eigen::Index j = 0; j < syn.data.dim(); ++j) os << ",x" << j + 1;
  os << ",group\n";
  for (Eigen::Index n = 0; n < syn.data.size(); ++n) {
    os << syn.data.y[n];
    for (Eigen::Index j = 0; j < syn.data.dim(); ++j) os << ',' << syn.data.X(n, j);
    os << ",g" << syn.labels[static_cast<std::size_t>(n)] << '\n';
  }
  write_file(p, os.str());
}

}  // namespace

TEST_CASE("load_csv") {
  const auto dir = scratch("load");

  write_file(dir / "ok.csv", "y,x1,x2,label\n1,2,3,a\n4.5,-6e-1,7,b\n8,9,10,a\n");
  const auto d = load_csv(dir / "ok.csv", "y", {"x1", "x2"}, std::string("label"));
  CHECK(d.size() == 3);
  CHECK(d.dim() == 2);
  CHECK(d.y[1] == 4.5);
  CHECK(d.X(1, 0) == -0.6);
  CHECK(d.X(2, 1) == 10.0);
  REQUIRE(d.labels);
  CHECK(*d.labels == std::vector<std::string>{"a", "b", "a"});

  const auto reordered = load_csv(dir / "ok.csv", "x2", {"y"}, std::nullopt);
  CHECK(reordered.y[0] == 3.0);
  CHECK(!reordered.labels);

  CHECK(code_of([&] { load_csv(dir / "ok.csv", "y", {"z"}, std::nullopt); }) == ErrorCode::MissingColumn);
  try {
    load_csv(dir / "ok.csv", "y", {"z"}, std::nullopt);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'z'") != std::string::npos);
  }

  std::string body = "y,x\n";
  for (int r = 1; r <= 9; ++r) body += (r == 7 ? std::string("1,abc\n") : std::to_string(r) + ",1\n");
  write_file(dir / "bad.csv", body);
  try {
    load_csv(dir / "bad.csv", "y", {"x"}, std::nullopt);
    FAIL("expected NonNumericCell");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonNumericCell);
    CHECK(std::string(e.what()).find("row 7") != std::string::npos);
  }

  write_file(dir / "empty.csv", "");
  CHECK(code_of([&] { load_csv(dir / "empty.csv", "y", {"x"}, std::nullopt); }) == ErrorCode::EmptyFile);
  write_file(dir / "header_only.csv", "y,x\n");
  CHECK(code_of([&] { load_csv(dir / "header_only.csv", "y", {"x"}, std::nullopt); }) == ErrorCode::EmptyFile);
  CHECK(code_of([&] { load_csv(dir / "missing.csv", "y", {"x"}, std::nullopt); }) == ErrorCode::Io);

  write_file(dir / "bom.csv", "\xEF\xBB\xBF\"y\",x\r\n1,2\r\n");
  const auto bom = load_csv(dir / "bom.csv", "y", {"x"}, std::nullopt);
  CHECK(bom.y[0] == 1.0);
  CHECK(bom.X(0, 0) == 2.0);
}

TEST_CASE("split_csv_line") {
  CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split_csv_line("\"x, y\",\"say \"\"hi\"\"\"") == std::vector<std::string>{"x, y", "say \"hi\""});
}

TEST_CASE("RunConfig validation") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.model_names().size() == 12);
  cfg.models = {"tt-VV", "NN-EV"};
  CHECK(cfg.model_names() == std::vector<std::string>{"tt-VV", "NN-EV"});
  cfg.models = {"NN-EE"};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.g_min = 3;
  cfg.g_max = 2;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
  cfg = {};
  cfg.epsilon = -1.0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
  CHECK(RunConfig{}.em_config().epsilon == 0.05);
}

TEST_CASE("cwplot export") {
  const auto syn = testing::two_line_clusters(300, 3);

  SUBCASE("one component") {
    const auto fit = em_fit(syn.data, ModelSpec::from_name("NN-VV"), 1, Matrix::Ones(300, 1));
    const auto doc = cwplot_json(fit, syn.data, 0, "x1");
    CHECK(doc["histogram"]["per_cluster"].size() == 1);
    CHECK(doc["lines"].size() == 1);
  }

  SUBCASE("counts, lines and points") {
    const auto fit = em_fit(syn.data, ModelSpec::from_name("tt-EV"), 2, testing::hard_tau(syn.labels, 2));
    const auto doc = cwplot_json(fit, syn.data, 0, "x1");
    const auto& hist = doc["histogram"];
    const auto bins = hist["counts"].size();
    CHECK(bins == static_cast<std::size_t>(std::ceil(std::log2(300.0))) + 1);
    CHECK(hist["edges"].size() == bins + 1);

    std::int64_t total = 0;
    for (const auto& c : hist["counts"]) total += c.get<std::int64_t>();
    CHECK(total == 300);

    std::vector<std::int64_t> summed(bins, 0);
    std::int64_t cluster_total = 0;
    for (const auto& cl : hist["per_cluster"]) {
      for (std::size_t b = 0; b < bins; ++b) {
        summed[b] += cl["counts"][b].get<std::int64_t>();
        cluster_total += cl["counts"][b].get<std::int64_t>();
      }
    }
    CHECK(cluster_total == 300);
    CHECK(summed == hist["counts"].get<std::vector<std::int64_t>>());

    for (int g = 0; g < 2; ++g) {
      const auto& line = doc["lines"][static_cast<std::size_t>(g)];
      CHECK(line["cluster"] == g + 1);
      CHECK(line["beta0"].get<double>() == fit.params.regression(g).beta0);
      CHECK(line["beta1"].get<double>() == fit.params.regression(g).beta1[0]);
    }
    CHECK(doc["points"]["x"].size() == 300);
    CHECK(doc["points"]["cluster"][0].get<int>() >= 1);
    CHECK(doc.contains("header"));

    const auto dir = scratch("cwplot");
    export_cwplot(fit, syn.data, 0, dir / "plot.json", "x1");
    const auto back = nlohmann::json::parse(read_file(dir / "plot.json"));
    CHECK(back["lines"][1]["beta1"].get<double>() == fit.params.regression(1).beta1[0]);
    CHECK(back == doc);

    CHECK(code_of([&] { cwplot_json(fit, syn.data, 1); }) == ErrorCode::IndexOutOfRange);
    CHECK(code_of([&] { cwplot_json(fit, syn.data, -1); }) == ErrorCode::IndexOutOfRange);
  }
}

TEST_CASE("run_sweep outputs are reproducible and consistent") {
  const auto dir = scratch("sweep");
  const auto syn = testing::nn_ev_clusters(150, 4);
  write_dataset_csv(dir / "data.csv", syn);

  RunConfig cfg;
  cfg.data_path = dir / "data.csv";
  cfg.response_column = "y";
  cfg.covariate_columns = {"x1", "x2"};
  cfg.label_column = "group";
  cfg.g_min = 1;
  cfg.g_max = 2;
  cfg.n_starts = 3;
  cfg.output_dir = dir / "a";
  std::ostringstream table_a;
  CHECK(run_sweep(cfg, table_a) == 0);
  cfg.output_dir = dir / "b";
  std::ostringstream table_b;
  CHECK(run_sweep(cfg, table_b) == 0);
  CHECK(table_a.str() == table_b.str());

  auto ja = nlohmann::json::parse(read_file(dir / "a" / "results.json"));
  auto jb = nlohmann::json::parse(read_file(dir / "b" / "results.json"));
  ja.erase("generated_at");
  jb.erase("generated_at");
  CHECK(ja == jb);

  // Byte-level: only the timestamp line may differ.
  std::istringstream ra(read_file(dir / "a" / "results.json"));
  std::istringstream rb(read_file(dir / "b" / "results.json"));
  int differing = 0;
  for (std::string la, lb; std::getline(ra, la) && std::getline(rb, lb);) {
    if (la != lb) {
      ++differing;
      CHECK(la.find("generated_at") != std::string::npos);
    }
  }
  CHECK(differing <= 1);

  int assignment_files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto name = entry.path().filename().string();
    if (name.rfind("assignments_", 0) == 0 || name.rfind("cwplot_", 0) == 0) {
      CHECK(read_file(entry.path()) == read_file(dir / "b" / name));
      assignment_files += name.rfind("assignments_", 0) == 0;
    }
  }
  CHECK(assignment_files == 24);
  CHECK(fs::exists(dir / "a" / "assignments_NN-EV_2.csv"));
  const auto best = ja["best_per_G"][1]["bic"]["model"].get<std::string>();
  CHECK(fs::exists(dir / "a" / ("cwplot_" + best + "_2_x1.json")));
  CHECK(fs::exists(dir / "a" / ("cwplot_" + best + "_2_x2.json")));

  // The table prints the JSON numbers verbatim.
  const std::string table = table_a.str();
  int matched = 0;
  for (const auto& rec : ja["records"]) {
    if (rec["status"] != "ok") continue;
    const std::string bic_text = rec["bic"].dump();
    const std::string icl_text = rec["icl"].dump();
    bool found = false;
    std::istringstream lines(table);
    bool in_block = false;
    for (std::string line; std::getline(lines, line);) {
      if (line.rfind("G = ", 0) == 0) in_block = line == "G = " + std::to_string(rec["G"].get<int>());
      if (in_block && line.find(" " + rec["model"].get<std::string>() + " ") != std::string::npos &&
          line.find(" " + bic_text + " ") != std::string::npos && line.find(" " + icl_text + " ") != std::string::npos) {
        found = true;
      }
    }
    CHECK_MESSAGE(found, rec["model"] << " G=" << rec["G"]);
    matched += found;
  }
  CHECK(matched == 24);
  CHECK(table.find("*BIC") != std::string::npos);
  CHECK(table.find("*ICL") != std::string::npos);

  const auto csv = read_file(dir / "a" / "assignments_NN-EV_2.csv");
  CHECK(csv.rfind("row,map,tau_1,tau_2\n1,", 0) == 0);
}

TEST_CASE("one component: every constraint pattern shares the loglik") {
  const auto syn = testing::nn_ve_clusters(200, 5);
  RunConfig cfg;
  cfg.g_min = cfg.g_max = 1;
  const auto report = sweep_dataset(syn.data, cfg);
  REQUIRE(report.entries.size() == 12);
  for (const char* pair : {"NN", "tt", "tN", "Nt"}) {
    std::vector<double> ll;
    for (const auto& e : report.entries) {
      if (e.model.rfind(pair, 0) == 0) {
        REQUIRE(e.record);
        ll.push_back(e.record->loglik);
      }
    }
    REQUIRE(ll.size() == 3);
    CHECK(std::abs(ll[1] - ll[0]) <= 1e-6);
    CHECK(std::abs(ll[2] - ll[0]) <= 1e-6);
  }
}

TEST_CASE("BIC picks the generating structure") {
  RunConfig cfg;
  cfg.g_min = cfg.g_max = 2;
  int ve_wins = 0;
  int ev_wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed + 1;
    const auto ve = sweep_dataset(testing::nn_ve_clusters(500, 600 + seed).data, cfg);
    ve_wins += ve.best_bic(2) != nullptr && ve.best_bic(2)->model == "NN-VE";
    const auto ev = sweep_dataset(testing::nn_ev_clusters(500, 700 + seed).data, cfg);
    ev_wins += ev.best_bic(2) != nullptr && ev.best_bic(2)->model == "NN-EV";
  }
  MESSAGE("NN-VE wins " << ve_wins << "/10, NN-EV wins " << ev_wins << "/10");
  CHECK(ve_wins >= 8);
  CHECK(ev_wins >= 8);
}

TEST_CASE("command-line binary") {
  const auto dir = scratch("binary");
  write_dataset_csv(dir / "data.csv", testing::two_line_clusters(120, 6));
  const std::string exe = CWM_CLI_PATH;
  const auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + exe + "\" " + args + " > \"" + (dir / "stdout.txt").string() + "\" 2> \"" +
                            (dir / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const std::string data = "--data \"" + (dir / "data.csv").string() + "\"";
  CHECK(run(data + " --response y --covariates x1 --labels group --g-max 2 --starts 2 --models NN-VV,tt-VV --out \"" +
            (dir / "out").string() + "\"") == 0);
  CHECK(fs::exists(dir / "out" / "results.json"));
  CHECK(read_file(dir / "stdout.txt").find("G = 2") != std::string::npos);
  const auto doc = nlohmann::json::parse(read_file(dir / "out" / "results.json"));
  CHECK(doc["records"].size() == 4);
  CHECK(!doc["records"][0]["ari"].is_null());

  CHECK(run(data + " --response y --covariates nope") == 1);
  CHECK(read_file(dir / "stderr.txt").find("MissingColumn") != std::string::npos);
  CHECK(run("--data \"" + (dir / "absent.csv").string() + "\" --response y --covariates x1") == 1);
  CHECK(run(data + " --response y --covariates x1 --g-min 3 --g-max 2") == 1);
  CHECK(run(data + " --response y") == 1);
  CHECK(run("--help") == 0);
}
