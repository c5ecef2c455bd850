#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "cars/survival_data.hpp"

namespace cars {

/**
 * Kaplan-Meier estimate of the censoring survivor function G(y) = P(log C > y),
 * stored as a right-continuous step function.
 *
 * Ties between an event and a censoring at the same time are broken
 * event-first: the event leaves the risk set before the censoring happens.
 * Consequently the censoring hazard at y uses the risk set
 * {i : y_i > y} plus the observations censored at y, and an event at y is
 * weighted with the left limit G(y-), which excludes a censoring jump
 * located at exactly y.
 */
struct CensoringSurvivorCurve {
    std::vector<double> jump_times;  // strictly increasing
    std::vector<double> values;      // survivor value from each jump onward

    /// Product over jumps with jump_time <= y.
    double evaluate(double y) const {
        auto it = std::upper_bound(jump_times.begin(), jump_times.end(), y);
        if (it == jump_times.begin()) return 1.0;
        return values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
    }

    /// Product over jumps with jump_time < y.
    double evaluate_before(double y) const {
        auto it = std::lower_bound(jump_times.begin(), jump_times.end(), y);
        if (it == jump_times.begin()) return 1.0;
        return values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
    }
};

inline CensoringSurvivorCurve censoring_km(const SurvivalSample& s) {
    const Index n = s.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return s.log_times[a] < s.log_times[b]; });

    CensoringSurvivorCurve curve;
    double g = 1.0;
    std::size_t pos = 0;
    while (pos < order.size()) {
        const double t = s.log_times[order[pos]];
        std::size_t end = pos;
        Index censored = 0;
        while (end < order.size() && s.log_times[order[end]] == t) {
            if (s.events[order[end]] == 0) ++censored;
            ++end;
        }
        if (censored > 0) {
            const auto later = static_cast<Index>(order.size() - end);
            const double at_risk = static_cast<double>(later + censored);
            g *= 1.0 - static_cast<double>(censored) / at_risk;
            curve.jump_times.push_back(t);
            curve.values.push_back(g);
        }
        pos = end;
    }
    return curve;
}

inline void write_curve_csv(std::ostream& out, const CensoringSurvivorCurve& curve) {
    out << "jump_time,value\n";
    for (std::size_t k = 0; k < curve.jump_times.size(); ++k)
        out << detail::format_double(curve.jump_times[k]) << ',' << detail::format_double(curve.values[k]) << '\n';
}

struct IpcWeightSet {
    VectorXd weights;
    double floor_used = 0.0;   // the positivity floor nu
    Index floored_count = 0;   // events whose G estimate fell below nu

    bool floored() const { return floored_count > 0; }
};

inline constexpr double default_nu = 1e-6;

/// w_i = Delta_i / max(G(y_i-), nu); censored observations get exactly 0.
inline IpcWeightSet ipc_weights(const SurvivalSample& s, const CensoringSurvivorCurve& curve,
                                double nu = default_nu) {
    if (!(nu > 0.0 && nu < 1.0)) throw Error(ErrorKind::BadConfig, "nu must lie in (0,1)");
    IpcWeightSet out;
    out.floor_used = nu;
    out.weights = VectorXd::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        if (s.events[i] == 0) continue;
        double g = curve.evaluate_before(s.log_times[i]);
        if (g < nu) {
            g = nu;
            ++out.floored_count;
        }
        out.weights[i] = 1.0 / g;
    }
    return out;
}

namespace detail {
inline void check_weights(const SurvivalSample& s, const VectorXd& w) {
    if (w.size() != s.size()) throw Error(ErrorKind::BadShape, "weights length must equal sample size");
}
}  // namespace detail

/// (1/n) sum w_i y_i. The divisor is n, not the sum of weights.
inline double weighted_mean(const SurvivalSample& s, const VectorXd& w) {
    detail::check_weights(s, w);
    double acc = 0.0;
    for (Index i = 0; i < s.size(); ++i) acc += w[i] * s.log_times[i];
    return acc / static_cast<double>(s.size());
}

inline constexpr double degenerate_variance_tol = 1e-14;

/// Fewer than two distinct event times leaves no spread to estimate.
inline bool has_outcome_spread(const SurvivalSample& s) {
    bool seen = false;
    double first = 0.0;
    for (Index i = 0; i < s.size(); ++i) {
        if (s.events[i] == 0) continue;
        if (!seen) {
            seen = true;
            first = s.log_times[i];
        } else if (s.log_times[i] != first) {
            return true;
        }
    }
    return false;
}

/// (1/n) sum w_i (y_i - mean_w)^2.
inline double weighted_variance(const SurvivalSample& s, const VectorXd& w, double mean_w) {
    detail::check_weights(s, w);
    if (!has_outcome_spread(s))
        throw Error(ErrorKind::DegenerateOutcome, "fewer than two distinct event times");
    double acc = 0.0;
    for (Index i = 0; i < s.size(); ++i) {
        const double r = s.log_times[i] - mean_w;
        acc += w[i] * r * r;
    }
    const double var = acc / static_cast<double>(s.size());
    if (var <= degenerate_variance_tol)
        throw Error(ErrorKind::DegenerateOutcome, "weighted outcome variance is zero");
    return var;
}

/// (1/n) sum w_i (x_ij - xbar_j)(y_i - mean_w) with the unweighted covariate mean.
/// Each column is summed in row order, so results do not depend on how
/// columns are partitioned across workers.
inline VectorXd weighted_covariances(const SurvivalSample& s, const VectorXd& w, double mean_w,
                                     const CovariateSummary& summary) {
    detail::check_weights(s, w);
    const Index n = s.size();
    const Index d = s.dim();
    VectorXd resid_w(n);
    for (Index i = 0; i < n; ++i) resid_w[i] = w[i] * (s.log_times[i] - mean_w);
    VectorXd out(d);
    for (Index j = 0; j < d; ++j) {
        const double xbar = summary.means[j];
        double acc = 0.0;
        for (Index i = 0; i < n; ++i) acc += (s.covariates(i, j) - xbar) * resid_w[i];
        out[j] = acc / static_cast<double>(n);
    }
    return out;
}

inline constexpr double correlation_clamp_tol = 1e-8;

struct CorrelationVector {
    VectorXd values;
    std::vector<Index> out_of_range;  // |value| > 1 + clamp tolerance, left unclamped
};

/// S_XjY;w / (S_Xj * S_Y;w). Zero-variance covariates map to 0.
inline CorrelationVector correlation_vector(const VectorXd& covariances, const CovariateSummary& summary,
                                            double var_w) {
    if (!(var_w > degenerate_variance_tol))
        throw Error(ErrorKind::DegenerateOutcome, "weighted outcome variance must be positive");
    const Index d = covariances.size();
    CorrelationVector out;
    out.values.resize(d);
    const double sy = std::sqrt(var_w);
    for (Index j = 0; j < d; ++j) {
        if (summary.degenerate[static_cast<std::size_t>(j)] || summary.variances[j] <= 0.0) {
            out.values[j] = 0.0;
            continue;
        }
        double r = covariances[j] / (std::sqrt(summary.variances[j]) * sy);
        const double excess = std::abs(r) - 1.0;
        if (excess > correlation_clamp_tol)
            out.out_of_range.push_back(j);
        else if (excess > 0.0)
            r = std::copysign(1.0, r);
        out.values[j] = r;
    }
    return out;
}

}  // namespace cars
