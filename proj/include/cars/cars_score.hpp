#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cars/ipcw.hpp"
#include "cars/shrink_corr.hpp"
#include "cars/survival_data.hpp"

namespace cars {

enum class ScoreMethod { Cars, Cox };

constexpr std::string_view to_string(ScoreMethod m) { return m == ScoreMethod::Cars ? "cars" : "cox"; }

struct ScoreDiagnostics {
    double lambda = 1.0;
    double floor_used = 0.0;
    Index floored_count = 0;
    double min_eigenvalue = 1.0;
    Index correlation_rank = 0;
    bool structured_whitening = false;
    std::vector<bool> degenerate;           // constant covariate columns
    std::vector<bool> separation;           // Cox only: monotone partial likelihood, capped fit
    std::vector<Index> correlation_out_of_range;
};

struct ScoreVector {
    VectorXd scores;
    ScoreMethod method = ScoreMethod::Cars;
    ScoreDiagnostics diagnostics;
    std::vector<std::string> names;

    Index size() const { return scores.size(); }
};

enum class WhiteningPath { Auto, Dense, Structured };

struct CarsOptions {
    double nu = default_nu;
    std::optional<double> lambda_override;
    WhiteningPath path = WhiteningPath::Auto;  // Auto: structured iff d > n
};

/// IPC-weighted correlations between each covariate and log time.
struct MarginalCorrelations {
    CorrelationVector correlations;
    CovariateSummary summary;
};

inline MarginalCorrelations ipcw_correlations(const SurvivalSample& s, const VectorXd& weights) {
    MarginalCorrelations out;
    out.summary = covariate_summary(s);
    const double mean_w = weighted_mean(s, weights);
    const double var_w = weighted_variance(s, weights, mean_w);
    const VectorXd cov = weighted_covariances(s, weights, mean_w, out.summary);
    out.correlations = correlation_vector(cov, out.summary, var_w);
    return out;
}

/**
 * Whitened correlation scores for a given weighting of the observations:
 * theta = R_shrink^{-1/2} R_XY.
 *
 * `cars_score` feeds this the IPC weights; with all-ones weights it is the
 * plain (uncensored) correlation-adjusted score.
 */
inline ScoreVector weighted_car_score(const SurvivalSample& s, const VectorXd& weights, const CarsOptions& opt = {}) {
    if (s.event_count() == 0) throw Error(ErrorKind::DegenerateOutcome, "no events observed");
    const Index n = s.size();
    const Index d = s.dim();

    const auto marginal = ipcw_correlations(s, weights);

    ScoreVector out;
    out.method = ScoreMethod::Cars;
    out.names = s.covariate_names;
    out.diagnostics.degenerate = marginal.summary.degenerate;
    out.diagnostics.correlation_out_of_range = marginal.correlations.out_of_range;

    if (d == 0) {
        out.scores.resize(0);
        return out;
    }

    const auto sc = standardize_columns(s.covariates);
    double lambda = 1.0;
    if (opt.lambda_override) {
        lambda = *opt.lambda_override;
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::BadConfig, "lambda must lie in [0,1]");
    } else if (d >= 2) {
        lambda = shrinkage_lambda(sc);
    }
    out.diagnostics.lambda = lambda;

    const bool structured = opt.path == WhiteningPath::Structured || (opt.path == WhiteningPath::Auto && d > n);
    ShrinkageCorrelation shrunk;
    if (structured) {
        shrunk = shrink_factored(sc, lambda);
    } else {
        MatrixXd r = (sc.z.transpose() * sc.z) / static_cast<double>(n - 1);
        for (Index j = 0; j < d; ++j) r(j, j) = 1.0;
        shrunk = shrink(r, lambda);
    }
    const auto whitening = inverse_sqrt(shrunk);
    out.diagnostics.structured_whitening = whitening.structured();
    out.diagnostics.min_eigenvalue = whitening.min_eigenvalue();
    out.diagnostics.correlation_rank = whitening.rank();

    out.scores = whitening.apply(marginal.correlations.values);
    for (Index j = 0; j < d; ++j)
        if (marginal.summary.degenerate[static_cast<std::size_t>(j)]) out.scores[j] = 0.0;
    return out;
}

/**
 * Correlation-adjusted regression survival scores.
 *
 * Pipeline: Kaplan-Meier of the censoring distribution, IPC weights,
 * weighted moments of log time, weighted correlation vector, shrinkage
 * correlation of the covariates, whitening.
 */
inline ScoreVector cars_score(const SurvivalSample& s, const CarsOptions& opt = {}) {
    if (s.event_count() == 0) throw Error(ErrorKind::DegenerateOutcome, "no events observed");
    if (!has_outcome_spread(s)) throw Error(ErrorKind::DegenerateOutcome, "all events share one time");
    const auto curve = censoring_km(s);
    const auto w = ipc_weights(s, curve, opt.nu);
    auto out = weighted_car_score(s, w.weights, opt);
    out.diagnostics.floor_used = w.floor_used;
    out.diagnostics.floored_count = w.floored_count;
    return out;
}

/// Indices sorted by |score| descending; ties by ascending index.
inline std::vector<Index> rank_by_magnitude(const VectorXd& scores) {
    std::vector<Index> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(scores[a]) > std::abs(scores[b]); });
    return order;
}

inline std::vector<Index> rank_by_magnitude(const ScoreVector& s) { return rank_by_magnitude(s.scores); }

}  // namespace cars
