#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cars/detail/csv.hpp"
#include "cars/error.hpp"

namespace cars {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

/**
 * Right-censored sample: observed times, event indicators and an n x d
 * covariate matrix.
 *
 * Times are kept on both scales. `log_times` is what every estimator reads;
 * the original `times` are retained so that CSV emission reproduces the
 * ingested values bit for bit.
 */
struct SurvivalSample {
    VectorXd times;
    VectorXd log_times;
    VectorXi events;  // 1 = event observed, 0 = censored
    MatrixXd covariates;
    std::vector<std::string> covariate_names;

    Index size() const { return log_times.size(); }
    Index dim() const { return covariates.cols(); }
    Index event_count() const { return events.sum(); }
};

namespace detail {

inline std::vector<std::string> default_names(Index d) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(d));
    for (Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
    return names;
}

inline void validate_shape(const SurvivalSample& s) {
    const Index n = s.log_times.size();
    if (s.times.size() != n || s.events.size() != n || s.covariates.rows() != n)
        throw Error(ErrorKind::BadShape, "times, events and covariate rows must have equal length");
    if (n < 2) throw Error(ErrorKind::TooFewRows, "a sample needs at least 2 observations");
    if (static_cast<Index>(s.covariate_names.size()) != s.covariates.cols())
        throw Error(ErrorKind::BadShape, "covariate_names does not match covariate count");
    for (Index i = 0; i < n; ++i) {
        if (s.events[i] != 0 && s.events[i] != 1)
            throw Error(ErrorKind::NonBinaryStatus, "status must be 0 or 1 (row " + std::to_string(i + 1) + ")",
                        static_cast<long>(i + 1));
        if (!std::isfinite(s.log_times[i]))
            throw Error(ErrorKind::NonPositiveTime,
                        "time must be strictly positive and finite (row " + std::to_string(i + 1) + ")",
                        static_cast<long>(i + 1));
    }
    if (!s.covariates.allFinite()) throw Error(ErrorKind::NonNumericCell, "covariates must be finite");
}

}  // namespace detail

/// Builds a validated sample from times on the original (positive) scale.
inline SurvivalSample make_sample(VectorXd times, VectorXi events, MatrixXd covariates,
                                  std::vector<std::string> names = {}) {
    SurvivalSample s;
    s.log_times.resize(times.size());
    for (Index i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0) || !std::isfinite(times[i]))
            throw Error(ErrorKind::NonPositiveTime,
                        "time must be strictly positive and finite (row " + std::to_string(i + 1) + ")",
                        static_cast<long>(i + 1));
        s.log_times[i] = std::log(times[i]);
    }
    s.times = std::move(times);
    s.events = std::move(events);
    s.covariate_names = names.empty() ? detail::default_names(covariates.cols()) : std::move(names);
    s.covariates = std::move(covariates);
    detail::validate_shape(s);
    return s;
}

/// Builds a validated sample from log-scale times; `times` is exp(log_times).
inline SurvivalSample make_sample_from_log(VectorXd log_times, VectorXi events, MatrixXd covariates,
                                           std::vector<std::string> names = {}) {
    SurvivalSample s;
    s.times = log_times.array().exp().matrix();
    s.log_times = std::move(log_times);
    s.events = std::move(events);
    s.covariate_names = names.empty() ? detail::default_names(covariates.cols()) : std::move(names);
    s.covariates = std::move(covariates);
    detail::validate_shape(s);
    for (Index i = 0; i < s.size(); ++i)
        if (!(s.times[i] > 0.0) || !std::isfinite(s.times[i]))
            throw Error(ErrorKind::NonPositiveTime, "exp(log_time) out of range (row " + std::to_string(i + 1) + ")",
                        static_cast<long>(i + 1));
    return s;
}

/// Reads `time,status,<covariates...>`; every column other than the two
/// named ones is a covariate.
inline SurvivalSample read_sample(std::istream& in, const std::string& time_col = "time",
                                  const std::string& status_col = "status") {
    const auto table = detail::read_csv(in);
    const auto tcol = table.require_column(time_col);
    const auto scol = table.require_column(status_col);
    const Index n = static_cast<Index>(table.rows.size());
    if (n < 2) throw Error(ErrorKind::TooFewRows, "a sample needs at least 2 data rows");

    std::vector<std::size_t> xcols;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (j == tcol || j == scol) continue;
        xcols.push_back(j);
        names.push_back(table.header[j]);
    }

    VectorXd times(n);
    VectorXi events(n);
    MatrixXd x(n, static_cast<Index>(xcols.size()));
    for (Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        const long rowno = static_cast<long>(i + 1);
        auto cell = [&](std::size_t j) {
            auto v = detail::parse_double(row[j]);
            if (!v)
                throw Error(ErrorKind::NonNumericCell,
                            "non-numeric cell '" + row[j] + "' in column '" + table.header[j] + "' (row " +
                                std::to_string(rowno) + ")",
                            rowno);
            return *v;
        };
        const double t = cell(tcol);
        if (!(t > 0.0) || !std::isfinite(t))
            throw Error(ErrorKind::NonPositiveTime, "non-positive time (row " + std::to_string(rowno) + ")", rowno);
        times[i] = t;
        const double st = cell(scol);
        if (st != 0.0 && st != 1.0)
            throw Error(ErrorKind::NonBinaryStatus, "status must be 0 or 1 (row " + std::to_string(rowno) + ")",
                        rowno);
        events[i] = static_cast<int>(st);
        for (std::size_t k = 0; k < xcols.size(); ++k) {
            const double v = cell(xcols[k]);
            if (!std::isfinite(v))
                throw Error(ErrorKind::NonNumericCell, "non-finite covariate (row " + std::to_string(rowno) + ")",
                            rowno);
            x(i, static_cast<Index>(k)) = v;
        }
    }
    return make_sample(std::move(times), std::move(events), std::move(x), std::move(names));
}

inline SurvivalSample load_sample(const std::string& path, const std::string& time_col = "time",
                                  const std::string& status_col = "status") {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    return read_sample(in, time_col, status_col);
}

inline void write_sample(std::ostream& out, const SurvivalSample& s, const std::string& time_col = "time",
                         const std::string& status_col = "status") {
    std::vector<std::string> fields{time_col, status_col};
    fields.insert(fields.end(), s.covariate_names.begin(), s.covariate_names.end());
    detail::write_row(out, fields);
    for (Index i = 0; i < s.size(); ++i) {
        fields.clear();
        fields.push_back(detail::format_double(s.times[i]));
        fields.push_back(std::to_string(s.events[i]));
        for (Index j = 0; j < s.dim(); ++j) fields.push_back(detail::format_double(s.covariates(i, j)));
        detail::write_row(out, fields);
    }
}

inline void save_sample(const std::string& path, const SurvivalSample& s, const std::string& time_col = "time",
                        const std::string& status_col = "status") {
    auto out = detail::open_output(path);
    write_sample(out, s, time_col, status_col);
}

struct CovariateSummary {
    VectorXd means;
    VectorXd variances;        // divisor n - 1
    std::vector<bool> degenerate;  // constant columns; their variance is exactly 0

    bool any_degenerate() const {
        for (bool b : degenerate)
            if (b) return true;
        return false;
    }
};

inline CovariateSummary covariate_summary(const MatrixXd& x) {
    const Index n = x.rows();
    const Index d = x.cols();
    if (n < 2) throw Error(ErrorKind::TooFewRows, "covariate_summary needs n >= 2");
    CovariateSummary out;
    out.means.resize(d);
    out.variances.resize(d);
    out.degenerate.assign(static_cast<std::size_t>(d), false);
    for (Index j = 0; j < d; ++j) {
        const auto col = x.col(j);
        const double mean = col.sum() / static_cast<double>(n);
        out.means[j] = mean;
        if (col.maxCoeff() == col.minCoeff()) {
            out.means[j] = col[0];
            out.variances[j] = 0.0;
            out.degenerate[static_cast<std::size_t>(j)] = true;
            continue;
        }
        out.variances[j] = (col.array() - mean).square().sum() / static_cast<double>(n - 1);
    }
    return out;
}

inline CovariateSummary covariate_summary(const SurvivalSample& s) { return covariate_summary(s.covariates); }

}  // namespace cars
