#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hsp {

enum class errc {
    division_by_zero,
    too_short,
    empty_intersection,
    insufficient_history,
    missing_data,
    degenerate_series,
    empty_selection,
    singular_design,
    table_too_large,
    singular_covariance,
    rank_deficient,
    nonfinite_loss,
    shape_mismatch,
    eigen_failure,
    singular_matrix,
    infeasible,
    zero_variance,
    negative_quadratic_form,
    non_psd_correlation,
    config_invalid,
    io_error,
};

inline const char* errc_name(errc code) {
    switch (code) {
        case errc::division_by_zero: return "DivisionByZero";
        case errc::too_short: return "TooShort";
        case errc::empty_intersection: return "EmptyIntersection";
        case errc::insufficient_history: return "InsufficientHistory";
        case errc::missing_data: return "MissingData";
        case errc::degenerate_series: return "DegenerateSeries";
        case errc::empty_selection: return "EmptySelection";
        case errc::singular_design: return "SingularDesign";
        case errc::table_too_large: return "TableTooLarge";
        case errc::singular_covariance: return "SingularCovariance";
        case errc::rank_deficient: return "RankDeficient";
        case errc::nonfinite_loss: return "NonFiniteLoss";
        case errc::shape_mismatch: return "ShapeMismatch";
        case errc::eigen_failure: return "EigenFailure";
        case errc::singular_matrix: return "SingularMatrix";
        case errc::infeasible: return "Infeasible";
        case errc::zero_variance: return "ZeroVariance";
        case errc::negative_quadratic_form: return "NegativeQuadraticForm";
        case errc::non_psd_correlation: return "NonPsdCorrelation";
        case errc::config_invalid: return "ConfigInvalid";
        case errc::io_error: return "IoError";
    }
    return "Error";
}

/// Library-wide exception. Carries a machine-readable code plus optional
/// key/value details so the CLI can emit structured error reports.
class Error : public std::runtime_error {
public:
    using Detail = std::pair<std::string, std::string>;

    Error(errc code, const std::string& message, std::vector<Detail> details = {})
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code),
          details_(std::move(details)) {}

    errc code() const noexcept { return code_; }
    const std::vector<Detail>& details() const noexcept { return details_; }

private:
    errc code_;
    std::vector<Detail> details_;
};

[[noreturn]] inline void fail(errc code, const std::string& message,
                              std::vector<Error::Detail> details = {}) {
    throw Error(code, message, std::move(details));
}

}  // namespace hsp
