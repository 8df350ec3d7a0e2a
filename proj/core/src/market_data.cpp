#include "hsp/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hsp/errors.hpp"

namespace hsp {

RawSeries make_series(std::string name, std::vector<std::string> dates,
                      std::vector<double> values) {
    if (dates.size() != values.size())
        fail(errc::shape_mismatch, "series '" + name + "': dates and values differ in length");
    if (dates.size() < 2)
        fail(errc::too_short, "series '" + name + "' needs at least 2 observations",
             {{"series", name}});
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i]))
            fail(errc::config_invalid,
                 "series '" + name + "': dates not strictly increasing at " + dates[i],
                 {{"series", name}, {"date", dates[i]}});
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            fail(errc::config_invalid, "series '" + name + "': non-finite value at " + dates[i],
                 {{"series", name}, {"date", dates[i]}});
    }
    return RawSeries{std::move(name), std::move(dates), std::move(values)};
}

RawSeries to_returns(const RawSeries& series) {
    if (series.dates.size() < 2)
        fail(errc::too_short, "series '" + series.name + "' needs at least 2 observations",
             {{"series", series.name}});
    RawSeries out;
    out.name = series.name;
    out.dates.assign(series.dates.begin() + 1, series.dates.end());
    out.values.resize(series.values.size() - 1);
    for (std::size_t i = 1; i < series.values.size(); ++i) {
        const double prev = series.values[i - 1];
        if (prev == 0.0)
            fail(errc::division_by_zero,
                 "series '" + series.name + "': zero level divides the return at " +
                     series.dates[i],
                 {{"series", series.name}, {"date", series.dates[i]}});
        out.values[i - 1] = series.values[i] / prev - 1.0;
    }
    return out;
}

Eigen::Index ReturnPanel::column(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == name) return static_cast<Eigen::Index>(j);
    fail(errc::config_invalid, "panel has no column '" + name + "'", {{"name", name}});
}

Eigen::Index ReturnPanel::row_of(const std::string& date) const {
    const auto it = std::lower_bound(dates.begin(), dates.end(), date);
    if (it == dates.end() || *it != date)
        fail(errc::config_invalid, "panel has no date '" + date + "'", {{"date", date}});
    return static_cast<Eigen::Index>(it - dates.begin());
}

ReturnPanel ReturnPanel::select_columns(const std::vector<std::string>& keep) const {
    ReturnPanel out;
    out.dates = dates;
    out.names = keep;
    out.values.resize(rows(), static_cast<Eigen::Index>(keep.size()));
    out.missing.resize(rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        const Eigen::Index src = column(keep[j]);
        out.values.col(static_cast<Eigen::Index>(j)) = values.col(src);
        out.missing.col(static_cast<Eigen::Index>(j)) = missing.col(src);
    }
    return out;
}

ReturnPanel make_panel(std::vector<std::string> dates, std::vector<std::string> names,
                       Eigen::MatrixXd values) {
    if (values.rows() != static_cast<Eigen::Index>(dates.size()) ||
        values.cols() != static_cast<Eigen::Index>(names.size()))
        fail(errc::shape_mismatch, "panel dimensions do not match dates/names");
    ReturnPanel panel;
    panel.dates = std::move(dates);
    panel.names = std::move(names);
    panel.missing.setConstant(values.rows(), values.cols(), false);
    panel.values = std::move(values);
    return panel;
}

ReturnPanel align(const std::vector<RawSeries>& series, AlignPolicy policy) {
    if (series.empty()) fail(errc::config_invalid, "align: no series given");
    for (const auto& s : series)
        if (s.dates.empty()) fail(errc::too_short, "align: series '" + s.name + "' is empty");

    std::vector<std::string> dates;
    if (policy == AlignPolicy::inner) {
        std::set<std::string> common(series[0].dates.begin(), series[0].dates.end());
        for (std::size_t k = 1; k < series.size(); ++k) {
            std::set<std::string> next(series[k].dates.begin(), series[k].dates.end());
            std::set<std::string> kept;
            std::set_intersection(common.begin(), common.end(), next.begin(), next.end(),
                                  std::inserter(kept, kept.begin()));
            common.swap(kept);
        }
        dates.assign(common.begin(), common.end());
        if (dates.size() < 2)
            fail(errc::empty_intersection,
                 "inner alignment leaves " + std::to_string(dates.size()) + " common dates");
    } else {
        std::set<std::string> all;
        for (const auto& s : series) all.insert(s.dates.begin(), s.dates.end());
        dates.assign(all.begin(), all.end());
    }

    ReturnPanel panel;
    panel.dates = dates;
    const Eigen::Index rows = static_cast<Eigen::Index>(dates.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(series.size());
    panel.values.setZero(rows, cols);
    panel.missing.setConstant(rows, cols, true);
    for (Eigen::Index j = 0; j < cols; ++j) {
        const RawSeries& s = series[static_cast<std::size_t>(j)];
        panel.names.push_back(s.name);
        std::size_t pos = 0;  // index into s.dates, both lists sorted
        bool seen = false;
        double last = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i) {
            while (pos < s.dates.size() && s.dates[pos] < dates[static_cast<std::size_t>(i)]) ++pos;
            if (pos < s.dates.size() && s.dates[pos] == dates[static_cast<std::size_t>(i)]) {
                last = s.values[pos];
                seen = true;
                ++pos;
            }
            if (policy == AlignPolicy::inner) {
                panel.values(i, j) = last;
                panel.missing(i, j) = false;
            } else if (seen) {
                panel.values(i, j) = last;
                panel.missing(i, j) = false;
            }
        }
    }
    return panel;
}

WindowSlice slice_window(const ReturnPanel& panel, const WindowSpec& spec) {
    if (spec.length < 2) fail(errc::config_invalid, "window length must be >= 2");
    if (spec.lag < 0) fail(errc::config_invalid, "window lag must be non-negative");
    const Eigen::Index end = panel.row_of(spec.end);
    const Eigen::Index needed = spec.length + spec.lag;
    const Eigen::Index available = end + 1;
    if (available < needed)
        fail(errc::insufficient_history,
             "window needs " + std::to_string(needed) + " rows, has " + std::to_string(available),
             {{"needed", std::to_string(needed)}, {"available", std::to_string(available)}});

    auto block = [&](Eigen::Index first) {
        ReturnPanel out;
        out.names = panel.names;
        out.dates.assign(panel.dates.begin() + first, panel.dates.begin() + first + spec.length);
        out.values = panel.values.middleRows(first, spec.length);
        out.missing = panel.missing.middleRows(first, spec.length);
        for (Eigen::Index i = 0; i < out.missing.rows(); ++i)
            for (Eigen::Index j = 0; j < out.missing.cols(); ++j)
                if (out.missing(i, j))
                    fail(errc::missing_data,
                         "missing value for '" + out.names[static_cast<std::size_t>(j)] +
                             "' at " + out.dates[static_cast<std::size_t>(i)],
                         {{"name", out.names[static_cast<std::size_t>(j)]},
                          {"date", out.dates[static_cast<std::size_t>(i)]}});
        return out;
    };

    WindowSlice slice;
    const Eigen::Index first = end + 1 - spec.length;
    slice.current = block(first);
    slice.lagged = spec.lag == 0 ? slice.current : block(first - spec.lag);
    return slice;
}

}  // namespace hsp
