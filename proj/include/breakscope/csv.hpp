#pragma once

#include "breakscope/dataset.hpp"

#include <string>

namespace breakscope {

struct CsvData {
  VectorXd y;
  MatrixXd covariates;  // columns after the first; may have zero columns
  bool had_header = false;
};

// Reads a numeric CSV: first column is the dependent variable, remaining
// columns are covariates.  An optional header row is detected by a
// non-numeric first row.  Malformed cells raise DataError with a
// row/column diagnostic.
CsvData read_csv(const std::string& path);

// Dataset from CSV columns; prepends the intercept unless told not to
// (in which case the file's first covariate column must already be 1).
TimeSeriesDataset dataset_from_csv(const CsvData& csv, bool add_intercept);

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace breakscope
