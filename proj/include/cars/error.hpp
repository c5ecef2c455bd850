#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cars {

enum class ErrorKind {
    // input validation
    MissingColumn,
    NonPositiveTime,
    NonBinaryStatus,
    NonNumericCell,
    TooFewRows,
    BadShape,
    BadConfig,
    BadDimension,
    BadFraction,
    UnknownField,
    Io,
    // numerical
    DegenerateOutcome,
    SingularMatrix,
    TooFewScores,
    DegenerateScores,
    ZeroSignal,
    NoPositives,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::NonPositiveTime: return "NonPositiveTime";
    case ErrorKind::NonBinaryStatus: return "NonBinaryStatus";
    case ErrorKind::NonNumericCell: return "NonNumericCell";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::BadShape: return "BadShape";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::BadDimension: return "BadDimension";
    case ErrorKind::BadFraction: return "BadFraction";
    case ErrorKind::UnknownField: return "UnknownField";
    case ErrorKind::Io: return "Io";
    case ErrorKind::DegenerateOutcome: return "DegenerateOutcome";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::TooFewScores: return "TooFewScores";
    case ErrorKind::DegenerateScores: return "DegenerateScores";
    case ErrorKind::ZeroSignal: return "ZeroSignal";
    case ErrorKind::NoPositives: return "NoPositives";
    }
    return "Unknown";
}

/// True for failures of the numerics on otherwise well-formed input.
constexpr bool is_numerical(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::DegenerateOutcome:
    case ErrorKind::SingularMatrix:
    case ErrorKind::TooFewScores:
    case ErrorKind::DegenerateScores:
    case ErrorKind::ZeroSignal:
    case ErrorKind::NoPositives:
        return true;
    default:
        return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what, std::optional<long> row = std::nullopt)
        : std::runtime_error(what), kind_(kind), row_(row) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// 1-based data row for input errors tied to a CSV row.
    std::optional<long> row() const noexcept { return row_; }

private:
    ErrorKind kind_;
    std::optional<long> row_;
};

}  // namespace cars
