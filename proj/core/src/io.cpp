#include "rmss/io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmss/errors.hpp"

namespace rmss {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_cells(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, const std::string& path,
                  int line_no, std::size_t col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (cell.empty() || end != begin + cell.size()) {
    throw DataError(path + ": cannot parse \"" + cell +
                    "\" as a number at line " + std::to_string(line_no) +
                    ", column " + std::to_string(col));
  }
  return v;
}

}  // namespace

Table read_table(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);

  std::string line;
  if (!std::getline(is, line))
    throw DataError(path + ": empty file, expected a header row");
  Table tb;
  tb.names = split_cells(line);
  if (tb.names.empty() || (tb.names.size() == 1 && tb.names[0].empty()))
    throw DataError(path + ": header row has no column names");

  const std::size_t ncol = tb.names.size();
  std::vector<double> flat;
  int line_no = 1;
  Eigen::Index nrow = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_cells(line);
    if (cells.size() != ncol) {
      throw DataError(path + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells; expected " +
                      std::to_string(ncol));
    }
    for (std::size_t c = 0; c < ncol; ++c)
      flat.push_back(parse_cell(cells[c], path, line_no, c + 1));
    ++nrow;
  }
  if (nrow == 0) throw DataError(path + ": no data rows below the header");

  tb.values = Matrix(nrow, static_cast<Eigen::Index>(ncol));
  for (Eigen::Index r = 0; r < nrow; ++r)
    for (std::size_t c = 0; c < ncol; ++c)
      tb.values(r, static_cast<Eigen::Index>(c)) = flat[r * ncol + c];
  return tb;
}

Dataset load_csv(const std::string& path, const std::string& response_col,
                 std::vector<std::string>* feature_names) {
  const Table tb = read_table(path);
  if (tb.values.rows() < 2)
    throw DataError(path + ": needs at least 2 data rows, found 1");
  const Eigen::Index ncol = tb.values.cols();
  if (ncol < 2)
    throw DataError(path +
                    ": needs at least one predictor column besides the "
                    "response");

  Eigen::Index resp;
  if (response_col.empty()) {
    resp = ncol - 1;
  } else {
    int idx = 0;
    const char* first = response_col.data();
    const char* last = first + response_col.size();
    const auto conv = std::from_chars(first, last, idx);
    if (conv.ec == std::errc() && conv.ptr == last) {
      if (idx < 0 || idx >= ncol) {
        throw DataError(path + ": response column position " + response_col +
                        " is out of range for " + std::to_string(ncol) +
                        " columns");
      }
      resp = idx;
    } else {
      resp = -1;
      for (std::size_t c = 0; c < tb.names.size(); ++c)
        if (tb.names[c] == response_col) {
          resp = static_cast<Eigen::Index>(c);
          break;
        }
      if (resp < 0)
        throw DataError(path + ": response column \"" + response_col +
                        "\" not found in the header");
    }
  }

  Dataset d;
  d.y = tb.values.col(resp);
  d.X = Matrix(tb.values.rows(), ncol - 1);
  if (feature_names) feature_names->clear();
  Eigen::Index out = 0;
  for (Eigen::Index c = 0; c < ncol; ++c) {
    if (c == resp) continue;
    d.X.col(out++) = tb.values.col(c);
    if (feature_names) feature_names->push_back(tb.names[c]);
  }
  return d;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Matrix& values) {
  if (static_cast<Eigen::Index>(columns.size()) != values.cols()) {
    throw std::invalid_argument(
        "write_csv: " + std::to_string(columns.size()) +
        " column names for a matrix with " + std::to_string(values.cols()) +
        " columns");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  for (std::size_t c = 0; c < columns.size(); ++c)
    os << (c ? "," : "") << columns[c];
  os << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      os << (c ? "," : "") << format_double(values(r, c));
    os << '\n';
  }
}

namespace {

ordered_json vec_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vec_from(const ordered_json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (const auto& x : a) v[i++] = x.get<double>();
  return v;
}

}  // namespace

void save_model(const std::string& path, const FittedEnsemble& fe,
                const std::string& method, std::uint64_t seed,
                const std::string& estimator_name) {
  ordered_json j;
  j["format"] = "rmss-ensemble";
  j["version"] = 1;
  j["method"] = method;
  j["seed"] = seed;
  j["estimator"] = estimator_name;
  j["n_models"] = fe.n_models;
  j["t"] = fe.t;
  j["u"] = fe.u;
  j["h"] = fe.h;
  j["intercept"] = fe.intercept;
  j["beta_bar"] = vec_json(fe.beta_bar);
  j["feature_names"] = fe.feature_names;

  ordered_json betas = ordered_json::array();
  for (const Vector& b : fe.model_betas) betas.push_back(vec_json(b));
  j["model_betas"] = betas;
  j["init_supports"] = fe.init_supports;

  ordered_json st;
  st["x_center"] = vec_json(fe.std_info.x_center);
  st["x_scale"] = vec_json(fe.std_info.x_scale);
  st["y_center"] = fe.std_info.y_center;
  st["y_scale"] = fe.std_info.y_scale;
  j["standardization"] = st;

  j["objective"] = fe.objective;

  ordered_json models = ordered_json::array();
  for (const ModelState& m : fe.state.models) {
    ordered_json mj;
    mj["beta"] = vec_json(m.beta);
    mj["eta"] = vec_json(m.eta);
    mj["support"] = m.J;
    mj["inliers"] = m.I;
    mj["objective"] = m.objective;
    models.push_back(mj);
  }
  ordered_json state;
  state["objective"] = fe.state.objective;
  state["models"] = models;
  j["state"] = state;

  ordered_json best;
  best["t"] = fe.cv.best_t;
  best["u"] = fe.cv.best_u;
  best["h"] = fe.cv.best_h;
  ordered_json table = ordered_json::array();
  for (const CvCell& c : fe.cv.table) {
    ordered_json cj;
    cj["t"] = c.t;
    cj["u"] = c.u;
    cj["h"] = c.h;
    cj["score"] = c.score;
    table.push_back(cj);
  }
  ordered_json cv;
  cv["best"] = best;
  cv["warnings"] = fe.cv.warnings;
  cv["table"] = table;
  j["cv"] = cv;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os << j.dump(2) << '\n';
}

LoadedModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(is);
  } catch (const std::exception& e) {
    throw DataError(path + ": not a model file (" + e.what() + ")");
  }

  try {
    if (j.at("format").get<std::string>() != "rmss-ensemble")
      throw DataError(path + ": not a model file");

    LoadedModel lm;
    lm.method = j.at("method").get<std::string>();
    lm.seed = j.at("seed").get<std::uint64_t>();
    lm.estimator_name = j.at("estimator").get<std::string>();

    FittedEnsemble& fe = lm.fe;
    fe.n_models = j.at("n_models").get<int>();
    fe.t = j.at("t").get<int>();
    fe.u = j.at("u").get<int>();
    fe.h = j.at("h").get<int>();
    fe.intercept = j.at("intercept").get<double>();
    fe.beta_bar = vec_from(j.at("beta_bar"));
    fe.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& b : j.at("model_betas")) fe.model_betas.push_back(vec_from(b));
    fe.init_supports =
        j.at("init_supports").get<std::vector<std::vector<int>>>();

    const auto& st = j.at("standardization");
    fe.std_info.x_center = vec_from(st.at("x_center"));
    fe.std_info.x_scale = vec_from(st.at("x_scale"));
    fe.std_info.y_center = st.at("y_center").get<double>();
    fe.std_info.y_scale = st.at("y_scale").get<double>();

    fe.objective = j.at("objective").get<double>();

    const auto& state = j.at("state");
    fe.state.objective = state.at("objective").get<double>();
    for (const auto& mj : state.at("models")) {
      ModelState m;
      m.beta = vec_from(mj.at("beta"));
      m.eta = vec_from(mj.at("eta"));
      m.J = mj.at("support").get<std::vector<int>>();
      m.I = mj.at("inliers").get<std::vector<int>>();
      m.objective = mj.at("objective").get<double>();
      fe.state.models.push_back(std::move(m));
    }

    const auto& cv = j.at("cv");
    const auto& best = cv.at("best");
    fe.cv.best_t = best.at("t").get<int>();
    fe.cv.best_u = best.at("u").get<int>();
    fe.cv.best_h = best.at("h").get<int>();
    fe.cv.warnings = cv.at("warnings").get<std::vector<std::string>>();
    for (const auto& cj : cv.at("table")) {
      CvCell c;
      c.t = cj.at("t").get<int>();
      c.u = cj.at("u").get<int>();
      c.h = cj.at("h").get<int>();
      c.score = cj.at("score").get<double>();
      fe.cv.table.push_back(c);
    }
    return lm;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed model file (" + e.what() + ")");
  }
}

}  // namespace rmss
