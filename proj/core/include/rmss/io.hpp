#pragma once

#include <string>
#include <vector>

#include "rmss/dataset.hpp"
#include "rmss/selection.hpp"

namespace rmss {

struct Table {
  std::vector<std::string> names;
  Matrix values;
};

// Reads a numeric CSV with a mandatory header row. Raises DataError when the
// file is missing, a row has the wrong cell count, a cell does not parse as
// a number (both named by 1-based file line and column), or there is no data
// row at all.
Table read_table(const std::string& path);

// read_table plus a designated response column: picked by header name, or by
// 0-based position when `response_col` parses as an integer, or defaulting
// to the last column when empty. Raises DataError on a missing/unknown
// response column or fewer than 2 data rows.
Dataset load_csv(const std::string& path, const std::string& response_col,
                 std::vector<std::string>* feature_names = nullptr);

// Full-precision CSV writer (shortest round-trip formatting).
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Matrix& values);

std::string format_double(double v);

// Model files are JSON with a fixed key order and shortest round-trip
// number formatting, so identical fits serialize byte-identically.
void save_model(const std::string& path, const FittedEnsemble& fe,
                const std::string& method, std::uint64_t seed,
                const std::string& estimator_name);

struct LoadedModel {
  FittedEnsemble fe;
  std::string method;
  std::uint64_t seed = 0;
  std::string estimator_name;
};

LoadedModel load_model(const std::string& path);

}  // namespace rmss
