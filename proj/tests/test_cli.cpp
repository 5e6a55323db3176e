#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rmss/io.hpp"
#include "rmss/selection.hpp"
#include "rmss/simrng.hpp"

using namespace rmss;

namespace {

const std::string cli = RMSS_CLI_PATH;

std::string tmp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// n x 4 design with y = 2 x0 - x2 + noise, written as a csv with headers.
std::string make_train_csv(const std::string& name, std::uint64_t seed,
                           int n) {
  SimRng rng(seed);
  Matrix m(n, 5);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) m(i, j) = rng.normal();
    m(i, 4) = 2.0 * m(i, 0) - m(i, 2) + 0.1 * rng.normal();
  }
  const std::string path = tmp_file(name);
  write_csv(path, {"a", "b", "c", "d", "y"}, m);
  return path;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(oracle::run_command(cli).first == 1);
  CHECK(oracle::run_command(cli + " frobnicate").first == 1);
  CHECK(oracle::run_command(cli + " fit").first == 1);
  CHECK(oracle::run_command(cli + " fit --input x.csv --output m.json "
                                  "--estimator bogus")
            .first == 1);

  auto help = oracle::run_command(cli + " --help");
  CHECK(help.first == 0);
  CHECK(help.second.find("fit") != std::string::npos);
  CHECK(help.second.find("predict") != std::string::npos);
}

TEST_CASE("fit writes a model file and a readable summary") {
  const std::string csv = make_train_csv("rmss_cli_train.csv", 3, 30);
  const std::string model = tmp_file("rmss_cli_model.json");
  auto res = oracle::run_command(
      cli + " fit --input " + csv + " --output " + model +
      " --g 2 --k-folds 3 --t-grid 1,2 --h-grid 0.8,1.0 --seed 5"
      " --estimator classical --threads 1");
  CAPTURE(res.second);
  REQUIRE(res.first == 0);
  CHECK(res.second.find("RMSS") != std::string::npos);
  CHECK(res.second.find("selected") != std::string::npos);

  nlohmann::json j = nlohmann::json::parse(slurp(model));
  CHECK(j.at("method").get<std::string>() == "RMSS");
  CHECK(j.at("estimator").get<std::string>() == "classical");
  CHECK(j.at("seed").get<std::uint64_t>() == 5);
  CHECK(j.at("beta_bar").size() == 4);
  CHECK(j.at("feature_names") ==
        nlohmann::json(std::vector<std::string>{"a", "b", "c", "d"}));

  // The strong signal on a and c should dominate the averaged coefficients.
  LoadedModel lm = load_model(model);
  CHECK(std::abs(lm.fe.beta_bar[0]) > 0.5);
  CHECK(std::abs(lm.fe.beta_bar[2]) > 0.25);
}

TEST_CASE("fit then predict reproduces in-sample fitted values") {
  const std::string csv = make_train_csv("rmss_cli_pred_train.csv", 11, 30);
  const std::string model = tmp_file("rmss_cli_pred_model.json");
  REQUIRE(oracle::run_command(
              cli + " fit --input " + csv + " --output " + model +
              " --g 2 --k-folds 3 --t-grid 1,2 --h-grid 0.8,1.0 --seed 5"
              " --estimator classical --threads 1")
              .first == 0);

  const std::string preds = tmp_file("rmss_cli_preds.csv");
  auto res = oracle::run_command(cli + " predict " + model + " --input " +
                                 csv + " --output " + preds);
  CAPTURE(res.second);
  REQUIRE(res.first == 0);

  LoadedModel lm = load_model(model);
  Dataset d = load_csv(csv, "", nullptr);
  Vector expect = predict(lm.fe, d.X);

  Table got = read_table(preds);
  CHECK(got.names == std::vector<std::string>{"prediction"});
  REQUIRE(got.values.rows() == 30);
  for (int i = 0; i < 30; ++i)
    CHECK(std::abs(got.values(i, 0) - expect[i]) <= 1e-10);

  // A feature-only file (no response column) predicts identically.
  const std::string xonly = tmp_file("rmss_cli_xonly.csv");
  write_csv(xonly, {"a", "b", "c", "d"}, d.X);
  const std::string preds2 = tmp_file("rmss_cli_preds2.csv");
  REQUIRE(oracle::run_command(cli + " predict " + model + " --input " +
                              xonly + " --output " + preds2)
              .first == 0);
  Table got2 = read_table(preds2);
  REQUIRE(got2.values.rows() == 30);
  for (int i = 0; i < 30; ++i)
    CHECK(got2.values(i, 0) == got.values(i, 0));

  // Mismatched columns are a data error.
  const std::string bad = tmp_file("rmss_cli_badcols.csv");
  write_csv(bad, {"a", "b"}, Matrix::Zero(3, 2));
  CHECK(oracle::run_command(cli + " predict " + model + " --input " + bad)
            .first == 2);
}

TEST_CASE("identical seeds give byte-identical model files") {
  const std::string csv = make_train_csv("rmss_cli_det_train.csv", 8, 30);
  const std::string m1 = tmp_file("rmss_cli_det1.json");
  const std::string m2 = tmp_file("rmss_cli_det2.json");
  const std::string args =
      " --g 2 --k-folds 3 --t-grid 1,2 --h-grid 0.8,1.0 --seed 9"
      " --estimator gk --threads 1";
  REQUIRE(oracle::run_command(cli + " fit --input " + csv + " --output " +
                              m1 + args)
              .first == 0);
  REQUIRE(oracle::run_command(cli + " fit --input " + csv + " --output " +
                              m2 + args)
              .first == 0);
  CHECK(slurp(m1) == slurp(m2));
}

TEST_CASE("a single-model fit is labeled RBSS") {
  const std::string csv = make_train_csv("rmss_cli_rbss_train.csv", 21, 30);
  const std::string model = tmp_file("rmss_cli_rbss.json");
  auto res = oracle::run_command(
      cli + " fit --input " + csv + " --output " + model +
      " --g 1 --u-max 1 --k-folds 3 --t-grid 1,2 --h-grid 0.8,1.0"
      " --seed 5 --threads 1");
  CAPTURE(res.second);
  REQUIRE(res.first == 0);
  CHECK(res.second.find("RBSS") != std::string::npos);
  nlohmann::json j = nlohmann::json::parse(slurp(model));
  CHECK(j.at("method").get<std::string>() == "RBSS");
  CHECK(j.at("n_models").get<int>() == 1);
}

TEST_CASE("exit codes separate data errors from usage errors") {
  const std::string model = tmp_file("rmss_cli_never.json");
  CHECK(oracle::run_command(cli + " fit --input " +
                            tmp_file("rmss_cli_missing.csv") + " --output " +
                            model)
            .first == 2);

  const std::string bad = tmp_file("rmss_cli_badcell.csv");
  write_text(bad, "a,y\n1,2\nx,4\n");
  auto res = oracle::run_command(cli + " fit --input " + bad + " --output " +
                                 model);
  CHECK(res.first == 2);
  CHECK(res.second.find("line 3") != std::string::npos);

  const std::string csv = make_train_csv("rmss_cli_grid_train.csv", 2, 30);
  CHECK(oracle::run_command(cli + " fit --input " + csv + " --output " +
                            model + " --t-grid 99 --threads 1")
            .first == 1);
  CHECK(oracle::run_command(cli + " fit --input " + csv + " --output " +
                            model + " --h-grid 2.0 --threads 1")
            .first == 1);
}

TEST_CASE("simulate writes a reproducible csv") {
  const std::string out1 = tmp_file("rmss_cli_sim1.csv");
  const std::string out2 = tmp_file("rmss_cli_sim2.csv");
  const std::string args =
      " simulate --n 20 --p 5 --zeta 0.4 --block-size 2 --alpha 0.2"
      " --seed 3 --output ";
  REQUIRE(oracle::run_command(cli + args + out1).first == 0);
  REQUIRE(oracle::run_command(cli + args + out2).first == 0);
  CHECK(slurp(out1) == slurp(out2));

  Table tb = read_table(out1);
  CHECK(tb.names == std::vector<std::string>{"x1", "x2", "x3", "x4", "x5",
                                             "y"});
  CHECK(tb.values.rows() == 20);

  const std::string out3 = tmp_file("rmss_cli_sim3.csv");
  REQUIRE(oracle::run_command(cli +
                              " simulate --n 20 --p 5 --zeta 0.4"
                              " --block-size 2 --alpha 0.2 --seed 4"
                              " --output " +
                              out3)
              .first == 0);
  CHECK(slurp(out1) != slurp(out3));
}

TEST_CASE("benchmark emits a replication table with summary rows") {
  const std::string out = tmp_file("rmss_cli_bench.csv");
  auto res = oracle::run_command(
      cli +
      " benchmark --n 25 --p 5 --zeta 0.4 --block-size 2 --snr 2"
      " --alpha 0.1 --reps 2 --seed 1 --g 2 --k-folds 3 --t-grid 1,2"
      " --h-grid 0.8,1.0 --estimator classical --threads 1 --output " +
      out);
  CAPTURE(res.second);
  REQUIRE(res.first == 0);

  const std::string text = slurp(out);
  CHECK(count_lines(text) == 5);  // header, 2 reps, mean, sd
  std::istringstream is(text);
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "rep,seed,t,u,h,mspe_rel,recall,precision");
  std::string row0, row1, mean_row, sd_row;
  std::getline(is, row0);
  std::getline(is, row1);
  std::getline(is, mean_row);
  std::getline(is, sd_row);
  CHECK(row0.substr(0, 4) == "0,1,");
  CHECK(row1.substr(0, 4) == "1,2,");
  CHECK(mean_row.substr(0, 5) == "mean,");
  CHECK(sd_row.substr(0, 3) == "sd,");

  // Per-replication metrics are finite and in range.
  for (const std::string& row : {row0, row1}) {
    std::istringstream rs(row);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(rs, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 8);
    const double mspe = std::stod(cells[5]);
    const double recall = std::stod(cells[6]);
    const double precision = std::stod(cells[7]);
    CHECK(mspe > 0.0);
    CHECK(recall >= 0.0);
    CHECK(recall <= 1.0);
    CHECK(precision >= 0.0);
    CHECK(precision <= 1.0);
  }
}

TEST_CASE("benchmark with the oracle flag appends a nonnegative gap") {
  const std::string out = tmp_file("rmss_cli_bench_oracle.csv");
  auto res = oracle::run_command(
      cli +
      " benchmark --n 12 --p 3 --zeta 0.34 --block-size 1 --alpha 0"
      " --reps 2 --seed 2 --g 1 --k-folds 3 --t-grid 1 --h-grid 0.75,1.0"
      " --estimator classical --threads 1 --oracle --output " +
      out);
  CAPTURE(res.second);
  REQUIRE(res.first == 0);

  std::istringstream is(slurp(out));
  std::string header;
  std::getline(is, header);
  CHECK(header == "rep,seed,t,u,h,mspe_rel,recall,precision,oracle_gap");
  for (int r = 0; r < 2; ++r) {
    std::string row;
    REQUIRE(std::getline(is, row));
    const std::size_t last = row.rfind(',');
    const double gap = std::stod(row.substr(last + 1));
    CHECK(gap >= -1e-9);
  }
}

TEST_CASE("benchmark failures leave a marker in the partial table") {
  const std::string out = tmp_file("rmss_cli_bench_fail.csv");
  // The oracle refuses this instance: the enumeration count is far above
  // its cap, so the run dies on replication 0 after the fit.
  auto res = oracle::run_command(
      cli +
      " benchmark --n 30 --p 8 --zeta 0.25 --block-size 2 --alpha 0"
      " --reps 1 --seed 2 --g 1 --k-folds 3 --t-grid 3 --h-grid 0.8"
      " --estimator classical --threads 1 --oracle --output " +
      out);
  CHECK(res.first == 3);
  const std::string text = slurp(out);
  CHECK(text.find("# failed at replication 0") != std::string::npos);
}

TEST_CASE("cv-report renders the score table") {
  const std::string csv = make_train_csv("rmss_cli_cv_train.csv", 13, 30);
  const std::string model = tmp_file("rmss_cli_cv_model.json");
  REQUIRE(oracle::run_command(
              cli + " fit --input " + csv + " --output " + model +
              " --g 2 --k-folds 3 --t-grid 1,2 --h-grid 0.8,1.0 --seed 5"
              " --estimator classical --threads 1")
              .first == 0);

  auto res = oracle::run_command(cli + " cv-report " + model);
  CAPTURE(res.second);
  REQUIRE(res.first == 0);
  CHECK(res.second.find("t,u,h,score") != std::string::npos);
  CHECK(res.second.find("best") != std::string::npos);

  const std::string table = tmp_file("rmss_cli_cv_table.csv");
  REQUIRE(oracle::run_command(cli + " cv-report " + model + " --output " +
                              table)
              .first == 0);
  Table tb = read_table(table);
  CHECK(tb.names == std::vector<std::string>{"t", "u", "h", "score"});
  nlohmann::json j = nlohmann::json::parse(slurp(model));
  CHECK(static_cast<std::size_t>(tb.values.rows()) ==
        j.at("cv").at("table").size());

  CHECK(oracle::run_command(cli + " cv-report " +
                            tmp_file("rmss_cli_no_model.json"))
            .first == 2);
}
