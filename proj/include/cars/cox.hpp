#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "cars/cars_score.hpp"
#include "cars/survival_data.hpp"

namespace cars {

struct CoxFit {
    double beta_hat = 0.0;        // original covariate scale
    double standard_error = std::numeric_limits<double>::infinity();
    double z_score = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;      // no information about beta
    bool separation = false;      // monotone likelihood, fit capped
};

struct CoxOptions {
    double beta_cap = 15.0;       // on the standardized covariate scale
    double tolerance = 1e-9;      // |score| / information
    int max_iterations = 25;
};

/// Time ordering shared by all covariates of a sample: indices sorted by
/// descending time, grouped into blocks of tied times.
class CoxRiskSets {
public:
    CoxRiskSets(const VectorXd& times, const VectorXi& events) : events_(events) {
        if (times.size() != events.size()) throw Error(ErrorKind::BadShape, "times and events differ in length");
        if (times.size() < 2) throw Error(ErrorKind::TooFewRows, "Cox fit needs n >= 2");
        order_.resize(static_cast<std::size_t>(times.size()));
        std::iota(order_.begin(), order_.end(), Index{0});
        std::stable_sort(order_.begin(), order_.end(), [&](Index a, Index b) { return times[a] > times[b]; });
        std::size_t pos = 0;
        while (pos < order_.size()) {
            std::size_t end = pos + 1;
            while (end < order_.size() && times[order_[end]] == times[order_[pos]]) ++end;
            group_end_.push_back(end);
            pos = end;
        }
        if (events.sum() == 0) throw Error(ErrorKind::DegenerateOutcome, "Cox fit needs at least one event");
    }

    const std::vector<Index>& order() const { return order_; }
    const std::vector<std::size_t>& group_end() const { return group_end_; }
    const VectorXi& events() const { return events_; }

private:
    VectorXi events_;
    std::vector<Index> order_;
    std::vector<std::size_t> group_end_;
};

namespace detail {

struct CoxEval {
    double loglik = 0.0;
    double score = 0.0;
    double information = 0.0;
};

/// Breslow partial log-likelihood and its first two derivatives in beta.
inline CoxEval cox_evaluate(const CoxRiskSets& rs, const VectorXd& x, double beta) {
    const auto& order = rs.order();
    const auto& ev = rs.events();
    // shift keeps exp() in range: risk-set sums only ever see exp(beta*x - shift) <= 1
    double shift = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < x.size(); ++i) shift = std::max(shift, beta * x[i]);

    CoxEval out;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    std::size_t pos = 0;
    for (std::size_t end : rs.group_end()) {
        double ev_x = 0.0;
        int n_ev = 0;
        for (std::size_t k = pos; k < end; ++k) {
            const Index i = order[k];
            const double e = std::exp(beta * x[i] - shift);
            s0 += e;
            s1 += e * x[i];
            s2 += e * x[i] * x[i];
            if (ev[i]) {
                ev_x += x[i];
                ++n_ev;
            }
        }
        if (n_ev > 0) {
            const double mean = s1 / s0;
            out.loglik += beta * ev_x - n_ev * (std::log(s0) + shift);
            out.score += ev_x - n_ev * mean;
            out.information += n_ev * std::max(0.0, s2 / s0 - mean * mean);
        }
        pos = end;
    }
    return out;
}

/// +1 / -1 when every event carries the largest / smallest covariate value
/// of its risk set, i.e. the partial likelihood increases without bound in
/// that direction; 0 otherwise.
inline int monotone_direction(const CoxRiskSets& rs, const VectorXd& x) {
    const auto& order = rs.order();
    const auto& ev = rs.events();
    double run_max = -std::numeric_limits<double>::infinity();
    double run_min = std::numeric_limits<double>::infinity();
    bool all_max = true, all_min = true;
    std::size_t pos = 0;
    for (std::size_t end : rs.group_end()) {
        for (std::size_t k = pos; k < end; ++k) {
            run_max = std::max(run_max, x[order[k]]);
            run_min = std::min(run_min, x[order[k]]);
        }
        for (std::size_t k = pos; k < end; ++k) {
            const Index i = order[k];
            if (!ev[i]) continue;
            if (x[i] < run_max) all_max = false;
            if (x[i] > run_min) all_min = false;
        }
        pos = end;
    }
    if (all_max) return 1;
    if (all_min) return -1;
    return 0;
}

}  // namespace detail

/**
 * Univariate Cox proportional hazards fit, Breslow ties, Newton-Raphson with
 * step halving. The covariate is standardized internally; `beta_cap`, the
 * convergence tolerance and the separation cap all refer to the standardized
 * coefficient, and the reported beta and SE are transformed back.
 */
inline CoxFit cox_univariate(const CoxRiskSets& rs, const VectorXd& x, const CoxOptions& opt = {}) {
    const Index n = x.size();
    if (n != static_cast<Index>(rs.order().size())) throw Error(ErrorKind::BadShape, "covariate length mismatch");
    CoxFit fit;
    const double mean = x.mean();
    if (x.maxCoeff() == x.minCoeff()) {
        fit.degenerate = true;
        fit.converged = true;
        return fit;
    }
    const double sd = std::sqrt((x.array() - mean).square().sum() / static_cast<double>(n - 1));
    const VectorXd xs = ((x.array() - mean) / sd).matrix();

    auto finish = [&](double beta_s, const detail::CoxEval& ev) {
        fit.beta_hat = beta_s / sd;
        if (ev.information > 0.0) {
            const double se_s = 1.0 / std::sqrt(ev.information);
            fit.standard_error = se_s / sd;
            fit.z_score = beta_s / se_s;
        } else {
            fit.standard_error = std::numeric_limits<double>::infinity();
            fit.z_score = 0.0;
        }
    };

    auto at_zero = detail::cox_evaluate(rs, xs, 0.0);
    if (!(at_zero.information > 0.0)) {
        // no risk set ever separates the covariate values
        fit.degenerate = true;
        fit.converged = true;
        return fit;
    }

    if (const int dir = detail::monotone_direction(rs, xs); dir != 0) {
        const double capped = dir * opt.beta_cap;
        fit.separation = true;
        fit.converged = false;
        finish(capped, detail::cox_evaluate(rs, xs, capped));
        return fit;
    }

    double beta = 0.0;
    auto cur = at_zero;
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (std::abs(cur.score) / cur.information <= opt.tolerance) {
            fit.converged = true;
            break;
        }
        double step = cur.score / cur.information;
        double next = beta + step;
        auto cand = detail::cox_evaluate(rs, xs, next);
        // near the optimum the gain in loglik falls below rounding; only a
        // decrease beyond that slack triggers halving
        const double slack = 1e-12 * (1.0 + std::abs(cur.loglik));
        int halvings = 0;
        while (!(cand.loglik >= cur.loglik - slack) && halvings < 40) {
            step *= 0.5;
            next = beta + step;
            cand = detail::cox_evaluate(rs, xs, next);
            ++halvings;
        }
        fit.iterations = it + 1;
        if (std::abs(next) > opt.beta_cap) {
            const double capped = std::copysign(opt.beta_cap, next);
            fit.separation = true;
            fit.converged = false;
            finish(capped, detail::cox_evaluate(rs, xs, capped));
            return fit;
        }
        beta = next;
        cur = cand;
        if (!(cur.information > 0.0)) break;
    }
    if (!fit.converged && cur.information > 0.0 && std::abs(cur.score) / cur.information <= opt.tolerance)
        fit.converged = true;
    finish(beta, cur);
    return fit;
}

inline CoxFit cox_univariate(const VectorXd& times, const VectorXi& events, const VectorXd& x,
                             const CoxOptions& opt = {}) {
    return cox_univariate(CoxRiskSets(times, events), x, opt);
}

/// Cox z-scores for every covariate. Per-column problems become flags:
/// constant columns score 0, separated columns report the capped fit.
inline ScoreVector cox_scores(const SurvivalSample& s, const CoxOptions& opt = {}) {
    const CoxRiskSets rs(s.log_times, s.events);
    const Index d = s.dim();
    ScoreVector out;
    out.method = ScoreMethod::Cox;
    out.names = s.covariate_names;
    out.scores.resize(d);
    out.diagnostics.degenerate.assign(static_cast<std::size_t>(d), false);
    out.diagnostics.separation.assign(static_cast<std::size_t>(d), false);
    for (Index j = 0; j < d; ++j) {
        const auto fit = cox_univariate(rs, s.covariates.col(j), opt);
        out.scores[j] = fit.z_score;
        out.diagnostics.degenerate[static_cast<std::size_t>(j)] = fit.degenerate;
        out.diagnostics.separation[static_cast<std::size_t>(j)] = fit.separation;
    }
    return out;
}

}  // namespace cars
