#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hsp/market_data.hpp"

namespace hsp {

/// Read `date,Name1,Name2,...` rows into one series per column.
/// Empty cells are treated as missing observations for that series.
std::vector<RawSeries> read_series_csv(const std::string& path);

/// Panel writers/readers round-trip through full double precision (%.17g).
void write_panel_csv(const std::string& path, const ReturnPanel& panel);
ReturnPanel read_panel_csv(const std::string& path);

/// Square matrix with a leading name column and a name header row.
void write_matrix_csv(const std::string& path, const std::vector<std::string>& names,
                      const Eigen::MatrixXd& matrix);

/// Rectangular matrix with separate row/column labels. `corner` is the
/// header cell above the row labels.
void write_named_matrix_csv(const std::string& path, const std::string& corner,
                            const std::vector<std::string>& row_names,
                            const std::vector<std::string>& col_names,
                            const Eigen::MatrixXd& matrix);

struct NamedMatrix {
    std::string corner;
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;
    Eigen::MatrixXd values;
};

NamedMatrix read_named_matrix_csv(const std::string& path);

std::string format_double(double value);

}  // namespace hsp
