#include "breakscope/csv.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace breakscope {

namespace {

bool parse_double(const std::string& cell, double& out) {
  const char* s = cell.c_str();
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s, &end);
  if (end == s || errno == ERANGE) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

CsvData read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool header_checked = false;
  CsvData out;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_line(line);
    if (!header_checked) {
      header_checked = true;
      double tmp;
      bool numeric = true;
      for (const auto& c : cells) numeric = numeric && parse_double(c, tmp);
      if (!numeric) {
        out.had_header = true;
        continue;
      }
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (!parse_double(cells[j], row[j]))
        throw DataError("non-numeric cell at row " + std::to_string(lineno) +
                        ", column " + std::to_string(j + 1) + ": '" +
                        cells[j] + "'");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("row " + std::to_string(lineno) + " has " +
                      std::to_string(row.size()) + " cells, expected " +
                      std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows in " + path);

  const int T = static_cast<int>(rows.size());
  const int cols = static_cast<int>(rows.front().size());
  out.y.resize(T);
  out.covariates.resize(T, cols - 1);
  for (int t = 0; t < T; ++t) {
    out.y[t] = rows[t][0];
    for (int j = 1; j < cols; ++j) out.covariates(t, j - 1) = rows[t][j];
  }
  return out;
}

TimeSeriesDataset dataset_from_csv(const CsvData& csv, bool add_intercept) {
  const int T = static_cast<int>(csv.y.size());
  const int extra = static_cast<int>(csv.covariates.cols());
  MatrixXd X(T, extra + (add_intercept ? 1 : 0));
  if (X.cols() == 0)
    throw DataError("no covariates: need an intercept at minimum");
  if (add_intercept) X.col(0).setOnes();
  if (extra > 0) X.rightCols(extra) = csv.covariates;
  return build_dataset(csv.y, std::move(X));
}

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream outf(path);
  if (!outf) throw DataError("cannot open output file: " + path);
  outf.precision(17);
  for (std::size_t j = 0; j < header.size(); ++j)
    outf << header[j] << (j + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j)
      outf << row[j] << (j + 1 < row.size() ? "," : "\n");
  }
}

}  // namespace breakscope
