#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace hsp {

/// One named time series of (date, level) observations.
/// Dates are ISO-8601 strings; lexicographic order equals chronological order.
struct RawSeries {
    std::string name;
    std::vector<std::string> dates;
    std::vector<double> values;
};

/// Validating factory: dates strictly increasing, no duplicates, >= 2 points.
RawSeries make_series(std::string name, std::vector<std::string> dates,
                      std::vector<double> values);

/// Percentage-change transform: r_t = v_t / v_{t-1} - 1. Output drops the
/// first date. Throws division_by_zero naming the offending date.
RawSeries to_returns(const RawSeries& series);

enum class AlignPolicy { inner, forward_fill };

/// Date-aligned matrix of returns for several named series.
struct ReturnPanel {
    std::vector<std::string> dates;
    std::vector<std::string> names;
    Eigen::MatrixXd values;                              // rows x cols = dates x names
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    bool has_missing() const { return missing.any(); }

    /// Column index of a named series; throws config_invalid if absent.
    Eigen::Index column(const std::string& name) const;
    /// Row index of a date; throws config_invalid if absent.
    Eigen::Index row_of(const std::string& date) const;

    /// Panel restricted to the given column names, in the given order.
    ReturnPanel select_columns(const std::vector<std::string>& keep) const;
};

/// Build a panel directly from equal-length columns (no alignment).
ReturnPanel make_panel(std::vector<std::string> dates, std::vector<std::string> names,
                       Eigen::MatrixXd values);

/// Align several series onto one date index.
///  - inner: keep only dates present in every series.
///  - forward_fill: union of dates; gaps carry the last value forward, but
///    dates before a series' first observation stay missing.
ReturnPanel align(const std::vector<RawSeries>& series, AlignPolicy policy);

struct WindowSpec {
    std::string end;  // must be a date present in the panel
    int length = 0;   // rows, >= 2
    int lag = 0;      // non-negative row shift for the paired view
};

/// A window of `length` rows ending at `end`, plus the lag-shifted twin used
/// for lagged regressions: lagged.row(i) is `lag` rows before current.row(i).
struct WindowSlice {
    ReturnPanel current;
    ReturnPanel lagged;
};

WindowSlice slice_window(const ReturnPanel& panel, const WindowSpec& spec);

}  // namespace hsp
