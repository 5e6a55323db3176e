#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmss/errors.hpp"
#include "rmss/io.hpp"
#include "rmss/parallel.hpp"
#include "rmss/selection.hpp"
#include "rmss/simlab.hpp"

using namespace rmss;

namespace {

struct Options {
  std::string input;
  std::string output;
  std::string response_col;
  std::string model_path;
  std::string t_grid = "auto";
  std::string h_grid = "auto";
  std::string estimator = "gk";
  int g = -1;
  int u_max = -1;
  int k_folds = 5;
  int threads = 0;  // 0: RMSS_THREADS or all cores
  std::uint64_t seed = 1;
  double gamma = 1.0;
  double eps = -1.0;
  bool neighborhood = false;
  bool oracle_gap = false;
  int reps = 5;
  SimConfig sim;
};

std::vector<int> parse_t_grid(const std::string& s) {
  std::vector<int> out;
  if (s == "auto") return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    const char* first = s.data() + start;
    const char* last = s.data() + comma;
    int v = 0;
    const auto conv = std::from_chars(first, last, v);
    if (conv.ec != std::errc() || conv.ptr != last)
      throw std::invalid_argument("--t-grid: cannot parse \"" +
                                  s.substr(start, comma - start) +
                                  "\" as an integer");
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

std::vector<double> parse_h_fracs(const std::string& s) {
  std::vector<double> out;
  if (s == "auto") return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    const std::string cell = s.substr(start, comma - start);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size())
      throw std::invalid_argument("--h-grid: cannot parse \"" + cell +
                                  "\" as a number");
    if (!(v > 0.0) || v > 1.0)
      throw std::invalid_argument(
          "--h-grid: values are fractions of the sample size in (0, 1], got " +
          cell);
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

CorrelationEstimator parse_estimator(const std::string& s) {
  if (s == "classical") return CorrelationEstimator::Classical;
  if (s == "rank") return CorrelationEstimator::RankBased;
  return CorrelationEstimator::PairwiseGK;
}

FitOptions make_fit_options(const Options& o, int n) {
  FitOptions opt;
  opt.n_models = o.g;
  opt.u_max = o.u_max;
  opt.k_folds = o.k_folds;
  opt.seed = o.seed;
  opt.gamma = o.gamma;
  opt.eps = o.eps;
  opt.estimator = parse_estimator(o.estimator);
  opt.neighborhood = o.neighborhood;
  opt.threads = o.threads > 0 ? o.threads : default_thread_count();
  opt.t_grid = parse_t_grid(o.t_grid);
  for (double f : parse_h_fracs(o.h_grid))
    opt.h_grid.push_back(static_cast<int>(std::lround(f * n)));
  std::sort(opt.h_grid.begin(), opt.h_grid.end());
  opt.h_grid.erase(std::unique(opt.h_grid.begin(), opt.h_grid.end()),
                   opt.h_grid.end());
  return opt;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
}

int run_fit(const Options& o) {
  std::vector<std::string> names;
  Dataset d = load_csv(o.input, o.response_col, &names);
  const int n = static_cast<int>(d.y.size());
  const int p = static_cast<int>(d.X.cols());

  FittedEnsemble fe = fit(d, make_fit_options(o, n));
  fe.feature_names = names;
  const std::string method = fe.n_models == 1 ? "RBSS" : "RMSS";
  save_model(o.output, fe, method, o.seed, o.estimator);

  print_warnings(fe.cv.warnings);
  double best_score = 0.0;
  for (const CvCell& c : fe.cv.table)
    if (c.t == fe.t && c.u == fe.u && c.h == fe.h) best_score = c.score;
  std::cout << "method: " << method << '\n'
            << "n: " << n << "  p: " << p << "  models: " << fe.n_models
            << '\n'
            << "selected: t=" << fe.t << " u=" << fe.u << " h=" << fe.h
            << '\n'
            << "cv score: " << format_double(best_score) << '\n'
            << "objective: " << format_double(fe.objective) << '\n';
  std::cout << "support sizes:";
  for (const ModelState& m : fe.state.models) std::cout << ' ' << m.J.size();
  std::cout << '\n' << "model written to " << o.output << '\n';
  return 0;
}

int run_predict(const Options& o) {
  const LoadedModel lm = load_model(o.model_path);
  const Eigen::Index p = lm.fe.beta_bar.size();
  const Table tb = read_table(o.input);

  Matrix X;
  if (!lm.fe.feature_names.empty() && tb.names == lm.fe.feature_names) {
    X = tb.values;
  } else if (tb.values.cols() == p + 1) {
    std::vector<std::string> names;
    Dataset d = load_csv(o.input, o.response_col, &names);
    if (!lm.fe.feature_names.empty() && names != lm.fe.feature_names)
      throw DataError(o.input +
                      ": column names do not match the model's features");
    X = d.X;
  } else if (tb.values.cols() == p && lm.fe.feature_names.empty()) {
    X = tb.values;
  } else {
    throw DataError(o.input + ": has " + std::to_string(tb.values.cols()) +
                    " columns but the model expects " + std::to_string(p) +
                    " features (plus an optional response)");
  }

  const Vector pred = predict(lm.fe, X);
  if (!o.output.empty()) {
    Matrix m = pred;
    write_csv(o.output, {"prediction"}, m);
  } else {
    for (Eigen::Index i = 0; i < pred.size(); ++i)
      std::cout << format_double(pred[i]) << '\n';
  }
  return 0;
}

int run_simulate(const Options& o) {
  SimConfig cfg = o.sim;
  cfg.seed = o.seed;
  SimData sd = contaminate(simulate_clean(cfg), cfg);

  std::vector<std::string> cols;
  for (int j = 1; j <= cfg.p; ++j) cols.push_back("x" + std::to_string(j));
  cols.push_back("y");
  Matrix m(cfg.n, cfg.p + 1);
  m.leftCols(cfg.p) = sd.X;
  m.col(cfg.p) = sd.y;
  write_csv(o.output, cols, m);

  std::cout << "wrote " << cfg.n << " rows, " << cfg.p << " predictors to "
            << o.output << '\n'
            << "sigma: " << format_double(sd.sigma)
            << "  contaminated rows: " << sd.m_contaminated << '\n';
  return 0;
}

// Standardization replayed from the model, so oracle objectives are
// computed on exactly the data the fit saw.
Dataset standardize_like(const Dataset& d, const StandardizationInfo& info) {
  Dataset out;
  out.X = Matrix(d.X.rows(), d.X.cols());
  for (Eigen::Index j = 0; j < d.X.cols(); ++j)
    out.X.col(j) = (d.X.col(j).array() - info.x_center[j]) / info.x_scale[j];
  out.y = (d.y.array() - info.y_center) / info.y_scale;
  return out;
}

int run_benchmark(const Options& o) {
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!o.output.empty()) {
    file.open(o.output, std::ios::binary);
    if (!file) throw DataError("cannot open " + o.output + " for writing");
    out = &file;
  }

  *out << "rep,seed,t,u,h,mspe_rel,recall,precision";
  if (o.oracle_gap) *out << ",oracle_gap";
  *out << '\n' << std::flush;

  std::vector<std::vector<double>> metrics(o.oracle_gap ? 4 : 3);
  for (int r = 0; r < o.reps; ++r) {
    try {
      SimConfig cfg = o.sim;
      cfg.seed = o.seed + static_cast<std::uint64_t>(r);
      SimData sd = contaminate(simulate_clean(cfg), cfg);
      Dataset d;
      d.X = sd.X;
      d.y = sd.y;
      FittedEnsemble fe = fit(d, make_fit_options(o, cfg.n));
      print_warnings(fe.cv.warnings);

      auto test = draw_rows(sd, 1000);
      const Vector yhat = predict(fe, test.first);
      const double mspe =
          mspe_relative(yhat, test.second, sd.sigma * sd.sigma);
      const auto rp = recall_precision(sd.beta0, fe.beta_bar);

      *out << r << ',' << cfg.seed << ',' << fe.t << ',' << fe.u << ','
           << fe.h << ',' << format_double(mspe) << ','
           << format_double(rp.first) << ',' << format_double(rp.second);
      metrics[0].push_back(mspe);
      metrics[1].push_back(rp.first);
      metrics[2].push_back(rp.second);
      if (o.oracle_gap) {
        const Dataset ds = standardize_like(d, fe.std_info);
        const EnsembleState exact =
            exhaustive_oracle(ds, fe.t, fe.h, fe.n_models, fe.u);
        const double gap = fe.objective - exact.objective;
        *out << ',' << format_double(gap);
        metrics[3].push_back(gap);
      }
      *out << '\n' << std::flush;
    } catch (const std::exception& e) {
      *out << "# failed at replication " << r << ": " << e.what() << '\n'
           << std::flush;
      throw;
    }
  }

  const auto mean_of = [](const std::vector<double>& v) {
    return v.empty()
               ? 0.0
               : std::accumulate(v.begin(), v.end(), 0.0) /
                     static_cast<double>(v.size());
  };
  const auto sd_of = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  *out << "mean,,,,";
  for (const auto& v : metrics) *out << ',' << format_double(mean_of(v));
  *out << '\n' << "sd,,,,";
  for (const auto& v : metrics) *out << ',' << format_double(sd_of(v));
  *out << '\n' << std::flush;
  return 0;
}

int run_cv_report(const Options& o) {
  const LoadedModel lm = load_model(o.model_path);
  print_warnings(lm.fe.cv.warnings);

  const auto& table = lm.fe.cv.table;
  Matrix m(static_cast<Eigen::Index>(table.size()), 4);
  for (std::size_t i = 0; i < table.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = table[i].t;
    m(static_cast<Eigen::Index>(i), 1) = table[i].u;
    m(static_cast<Eigen::Index>(i), 2) = table[i].h;
    m(static_cast<Eigen::Index>(i), 3) = table[i].score;
  }

  const std::string best = "best: t=" + std::to_string(lm.fe.cv.best_t) +
                           " u=" + std::to_string(lm.fe.cv.best_u) +
                           " h=" + std::to_string(lm.fe.cv.best_h);
  if (!o.output.empty()) {
    write_csv(o.output, {"t", "u", "h", "score"}, m);
    std::cout << best << '\n';
  } else {
    std::cout << "t,u,h,score\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      std::cout << format_double(m(i, 0)) << ',' << format_double(m(i, 1))
                << ',' << format_double(m(i, 2)) << ','
                << format_double(m(i, 3)) << '\n';
    std::cerr << best << '\n';
  }
  return 0;
}

void add_grid_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--g", o.g, "Number of models (default 5, 10 when p>=500)");
  cmd->add_option("--k-folds", o.k_folds, "Cross-validation folds");
  cmd->add_option("--t-grid", o.t_grid,
                  "Comma-separated subset sizes, or 'auto'");
  cmd->add_option("--h-grid", o.h_grid,
                  "Comma-separated kept-row fractions in (0,1], or 'auto'");
  cmd->add_option("--u-max", o.u_max, "Largest predictor-sharing bound");
  cmd->add_option("--gamma", o.gamma, "Stepwise p-value saturation level");
  cmd->add_option("--eps", o.eps, "Convergence tolerance");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_flag("--neighborhood", o.neighborhood,
                "Refine the grid by neighborhood search");
  cmd->add_option("--threads", o.threads,
                  "Worker threads (default: RMSS_THREADS or all cores)");
  cmd->add_option("--estimator", o.estimator,
                  "Correlation estimator for standardization and stepwise")
      ->check(CLI::IsMember({"classical", "gk", "rank"}));
}

void add_sim_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--n", o.sim.n, "Rows");
  cmd->add_option("--p", o.sim.p, "Predictors");
  cmd->add_option("--zeta", o.sim.zeta, "Active predictor fraction");
  cmd->add_option("--snr", o.sim.snr, "Signal-to-noise ratio");
  cmd->add_option("--alpha", o.sim.alpha, "Contaminated row fraction");
  cmd->add_option("--k-lev", o.sim.k_lev, "Leverage shift length");
  cmd->add_option("--k-slo", o.sim.k_slo, "Contaminating slope distortion");
  cmd->add_option("--rho-within", o.sim.rho_within,
                  "Correlation inside an active block");
  cmd->add_option("--rho-between", o.sim.rho_between,
                  "Correlation across active blocks");
  cmd->add_option("--block-size", o.sim.block_size, "Active block size");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Sparse ensembles of robust subset regressions"};
  app.require_subcommand(1);

  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit an ensemble to a csv");
  fit_cmd->add_option("--input", o.input, "Training csv")->required();
  fit_cmd->add_option("--response-col", o.response_col,
                      "Response column name or 0-based index (default: last)");
  fit_cmd->add_option("--output", o.output, "Model file to write")->required();
  add_grid_flags(fit_cmd, o);

  CLI::App* predict_cmd =
      app.add_subcommand("predict", "Predict with a fitted model");
  predict_cmd->add_option("model", o.model_path, "Model file")->required();
  predict_cmd->add_option("--input", o.input, "Csv of rows to predict")
      ->required();
  predict_cmd->add_option("--response-col", o.response_col,
                          "Response column to ignore, when present");
  predict_cmd->add_option("--output", o.output,
                          "Prediction csv (default: stdout)");

  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Draw a synthetic regression problem");
  sim_cmd->add_option("--output", o.output, "Csv to write")->required();
  sim_cmd->add_option("--seed", o.seed, "Random seed");
  add_sim_flags(sim_cmd, o);

  CLI::App* bench_cmd = app.add_subcommand(
      "benchmark", "Replicate simulate/contaminate/fit/evaluate runs");
  bench_cmd->add_option("--reps", o.reps, "Replications");
  bench_cmd->add_option("--output", o.output,
                        "Metrics csv (default: stdout)");
  bench_cmd->add_flag("--oracle", o.oracle_gap,
                      "Append the gap to the exhaustive optimum (tiny "
                      "instances only)");
  add_sim_flags(bench_cmd, o);
  add_grid_flags(bench_cmd, o);

  CLI::App* cv_cmd =
      app.add_subcommand("cv-report", "Print a model's validation table");
  cv_cmd->add_option("model", o.model_path, "Model file")->required();
  cv_cmd->add_option("--output", o.output, "Table csv (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(o);
    if (predict_cmd->parsed()) return run_predict(o);
    if (sim_cmd->parsed()) return run_simulate(o);
    if (bench_cmd->parsed()) return run_benchmark(o);
    if (cv_cmd->parsed()) return run_cv_report(o);
    std::cerr << app.help();
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
