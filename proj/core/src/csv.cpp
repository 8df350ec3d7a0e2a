#include "hsp/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hsp/errors.hpp"

namespace hsp {
namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::vector<std::vector<std::string>> read_table(const std::string& path) {
    std::ifstream file(path);
    if (!file.is_open()) fail(errc::io_error, "cannot open '" + path + "'", {{"path", path}});
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(file, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(split_line(line));
    }
    if (rows.size() < 2)
        fail(errc::io_error, "'" + path + "' has no data rows", {{"path", path}});
    return rows;
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::vector<RawSeries> read_series_csv(const std::string& path) {
    const auto rows = read_table(path);
    const auto& header = rows.front();
    if (header.empty() || header[0] != "date")
        fail(errc::io_error, "'" + path + "': first header column must be 'date'",
             {{"path", path}});
    const std::size_t n = header.size() - 1;
    if (n == 0) fail(errc::io_error, "'" + path + "': no series columns", {{"path", path}});

    std::vector<std::vector<std::string>> dates(n);
    std::vector<std::vector<double>> values(n);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() != header.size())
            fail(errc::io_error,
                 "'" + path + "': row " + std::to_string(r + 1) + " has " +
                     std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(header.size()),
                 {{"path", path}});
        for (std::size_t j = 0; j < n; ++j) {
            const std::string& cell = cells[j + 1];
            if (cell.empty()) continue;  // missing observation
            try {
                values[j].push_back(std::stod(cell));
            } catch (const std::exception&) {
                fail(errc::io_error,
                     "'" + path + "': cannot parse '" + cell + "' at row " + std::to_string(r + 1),
                     {{"path", path}});
            }
            dates[j].push_back(cells[0]);
        }
    }

    std::vector<RawSeries> out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j)
        out.push_back(make_series(header[j + 1], std::move(dates[j]), std::move(values[j])));
    return out;
}

void write_panel_csv(const std::string& path, const ReturnPanel& panel) {
    std::ofstream file(path);
    if (!file.is_open()) fail(errc::io_error, "cannot write '" + path + "'", {{"path", path}});
    file << "date";
    for (const auto& name : panel.names) file << ',' << name;
    file << '\n';
    for (Eigen::Index i = 0; i < panel.rows(); ++i) {
        file << panel.dates[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < panel.cols(); ++j) {
            file << ',';
            if (!panel.missing(i, j)) file << format_double(panel.values(i, j));
        }
        file << '\n';
    }
}

ReturnPanel read_panel_csv(const std::string& path) {
    const auto rows = read_table(path);
    const auto& header = rows.front();
    if (header.empty() || header[0] != "date")
        fail(errc::io_error, "'" + path + "': first header column must be 'date'",
             {{"path", path}});
    const Eigen::Index n = static_cast<Eigen::Index>(header.size()) - 1;
    const Eigen::Index t = static_cast<Eigen::Index>(rows.size()) - 1;

    ReturnPanel panel;
    panel.names.assign(header.begin() + 1, header.end());
    panel.values.setZero(t, n);
    panel.missing.setConstant(t, n, false);
    for (Eigen::Index i = 0; i < t; ++i) {
        const auto& cells = rows[static_cast<std::size_t>(i) + 1];
        if (cells.size() != header.size())
            fail(errc::io_error, "'" + path + "': ragged row " + std::to_string(i + 2),
                 {{"path", path}});
        panel.dates.push_back(cells[0]);
        for (Eigen::Index j = 0; j < n; ++j) {
            const std::string& cell = cells[static_cast<std::size_t>(j) + 1];
            if (cell.empty()) {
                panel.missing(i, j) = true;
            } else {
                panel.values(i, j) = std::stod(cell);
            }
        }
    }
    return panel;
}

void write_matrix_csv(const std::string& path, const std::vector<std::string>& names,
                      const Eigen::MatrixXd& matrix) {
    write_named_matrix_csv(path, "name", names, names, matrix);
}

void write_named_matrix_csv(const std::string& path, const std::string& corner,
                            const std::vector<std::string>& row_names,
                            const std::vector<std::string>& col_names,
                            const Eigen::MatrixXd& matrix) {
    std::ofstream file(path);
    if (!file.is_open()) fail(errc::io_error, "cannot write '" + path + "'", {{"path", path}});
    file << corner;
    for (const auto& name : col_names) file << ',' << name;
    file << '\n';
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        file << row_names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < matrix.cols(); ++j)
            file << ',' << format_double(matrix(i, j));
        file << '\n';
    }
}

NamedMatrix read_named_matrix_csv(const std::string& path) {
    const auto rows = read_table(path);
    NamedMatrix out;
    out.corner = rows.front().front();
    out.col_names.assign(rows.front().begin() + 1, rows.front().end());
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size()) - 1;
    const Eigen::Index c = static_cast<Eigen::Index>(out.col_names.size());
    out.values.resize(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const auto& cells = rows[static_cast<std::size_t>(i) + 1];
        if (cells.size() != rows.front().size())
            fail(errc::io_error, "'" + path + "': ragged row " + std::to_string(i + 2),
                 {{"path", path}});
        out.row_names.push_back(cells[0]);
        for (Eigen::Index j = 0; j < c; ++j)
            out.values(i, j) = std::stod(cells[static_cast<std::size_t>(j) + 1]);
    }
    return out;
}

}  // namespace hsp
