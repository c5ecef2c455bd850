#pragma once

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "cars/cars_score.hpp"
#include "cars/detail/quantile.hpp"
#include "cars/error.hpp"

namespace cars {

/// Half-normal null component for score magnitudes plus the null weight.
struct NullFit {
    double eta0 = 1.0;
    double null_scale = 1.0;
    double truncation_point = 0.0;  // |score| cutoff of the final truncated fit
    Index truncated_count = 0;      // magnitudes at or below the cutoff
    int iterations = 0;
};

struct FdrOptions {
    /// Quantile of |scores| used to seed the null scale.
    double start_quantile = 0.75;
    /// Truncation point of the null fit, in fitted null scales.
    double truncation_multiple = 3.0;
    int max_iterations = 200;
};

inline constexpr Index min_scores_for_fdr = 20;

namespace detail {

inline double half_normal_cdf(double x, double scale) { return std::erf(x / (scale * std::sqrt(2.0))); }
inline double half_normal_tail(double x, double scale) { return std::erfc(x / (scale * std::sqrt(2.0))); }
inline double half_normal_pdf(double x, double scale) {
    const double u = x / scale;
    return std::sqrt(2.0 / std::numbers::pi) / scale * std::exp(-0.5 * u * u);
}

/// E[X^2 | X <= k sigma] / sigma^2 for X half-normal with scale sigma.
inline double truncated_second_moment_ratio(double k) {
    const double phi = std::exp(-0.5 * k * k) / std::sqrt(2.0 * std::numbers::pi);
    return 1.0 - 2.0 * k * phi / std::erf(k / std::sqrt(2.0));
}

}  // namespace detail

/**
 * Fits the null component to score magnitudes.
 *
 * The scale is the maximum-likelihood estimate of a half-normal truncated to
 * [0, c], where c sits a fixed number of fitted scales above zero; truncation
 * at k sigma turns the likelihood equation into
 *   sigma^2 = mean(|s|^2 over |s| <= c) / m2(k),
 * iterated until the truncated set stops changing. The seed is the
 * half-normal scale matching the `start_quantile` of |scores|. The null
 * weight is the fraction of magnitudes below c relative to the null mass
 * there, clipped to (0, 1].
 */
inline NullFit fit_null(const VectorXd& scores, const FdrOptions& opt = {}) {
    const Index d = scores.size();
    if (d < min_scores_for_fdr)
        throw Error(ErrorKind::TooFewScores, "null fitting needs at least " + std::to_string(min_scores_for_fdr) +
                                                 " scores, got " + std::to_string(d));
    std::vector<double> mag(static_cast<std::size_t>(d));
    for (Index j = 0; j < d; ++j) {
        if (!std::isfinite(scores[j])) throw Error(ErrorKind::DegenerateScores, "non-finite score");
        mag[static_cast<std::size_t>(j)] = std::abs(scores[j]);
    }
    std::sort(mag.begin(), mag.end());
    if (mag.front() == mag.back()) throw Error(ErrorKind::DegenerateScores, "all score magnitudes are equal");

    const boost::math::normal std_normal;
    const double seed_q = detail::quantile_sorted(mag, opt.start_quantile);
    if (!(seed_q > 0.0)) throw Error(ErrorKind::DegenerateScores, "score magnitudes concentrate at zero");
    double sigma = seed_q / boost::math::quantile(std_normal, 0.5 + 0.5 * opt.start_quantile);

    const double k = opt.truncation_multiple;
    const double m2 = detail::truncated_second_moment_ratio(k);
    NullFit fit;
    std::size_t prev_count = std::numeric_limits<std::size_t>::max();
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const double c = k * sigma;
        const auto count = static_cast<std::size_t>(std::upper_bound(mag.begin(), mag.end(), c) - mag.begin());
        fit.iterations = it;
        if (count == prev_count) break;
        if (count < 2) throw Error(ErrorKind::DegenerateScores, "too few magnitudes inside the null region");
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < count; ++i) sum_sq += mag[i] * mag[i];
        sigma = std::sqrt(sum_sq / static_cast<double>(count) / m2);
        prev_count = count;
        if (!(sigma > 0.0)) throw Error(ErrorKind::DegenerateScores, "null scale collapsed to zero");
    }
    fit.null_scale = sigma;
    fit.truncation_point = k * sigma;
    fit.truncated_count = static_cast<Index>(prev_count);
    const double frac = static_cast<double>(prev_count) / static_cast<double>(d);
    fit.eta0 = std::clamp(frac / detail::half_normal_cdf(fit.truncation_point, sigma),
                          std::numeric_limits<double>::min(), 1.0);
    return fit;
}

/// Decreasing density estimate as the slope of the least concave majorant of
/// the empirical CDF (pool-adjacent-violators on the segment slopes).
class GrenanderDensity {
public:
    explicit GrenanderDensity(std::vector<double> magnitudes) {
        std::sort(magnitudes.begin(), magnitudes.end());
        const double total = static_cast<double>(magnitudes.size());
        double left = 0.0;
        double pending = 0.0;  // mass sitting exactly at zero joins the first segment
        std::size_t pos = 0;
        while (pos < magnitudes.size()) {
            std::size_t end = pos;
            while (end < magnitudes.size() && magnitudes[end] == magnitudes[pos]) ++end;
            const double x = magnitudes[pos];
            const double mass = static_cast<double>(end - pos) / total + pending;
            pos = end;
            if (x <= left) {
                pending = mass;
                continue;
            }
            pending = 0.0;
            blocks_.push_back({mass, x - left, x});
            left = x;
            while (blocks_.size() >= 2) {
                auto& prev = blocks_[blocks_.size() - 2];
                const auto& top = blocks_.back();
                if (prev.mass / prev.width >= top.mass / top.width) break;
                prev.mass += top.mass;
                prev.width += top.width;
                prev.right = top.right;
                blocks_.pop_back();
            }
        }
        if (blocks_.empty()) throw Error(ErrorKind::DegenerateScores, "no positive magnitudes for density estimate");
    }

    /// Density on the block (left, right] containing x; 0 beyond the data.
    double operator()(double x) const {
        if (x > blocks_.back().right) return 0.0;
        auto it = std::lower_bound(blocks_.begin(), blocks_.end(), x,
                                   [](const Block& b, double v) { return b.right < v; });
        return it->mass / it->width;
    }

    std::size_t block_count() const { return blocks_.size(); }

private:
    struct Block {
        double mass;
        double width;
        double right;
    };
    std::vector<Block> blocks_;
};

struct QValueResult {
    VectorXd q_values;
    VectorXd local_fdr;
};

/**
 * Tail-area q-values and local fdr. At magnitude s the tail-area rate is
 * eta0 * P0(|Z| >= s) / (fraction of |scores| >= s); the q-value is its
 * running minimum over all thresholds not exceeding s.
 */
inline QValueResult q_values(const VectorXd& scores, double eta0, double null_scale) {
    const Index d = scores.size();
    std::vector<double> mag(static_cast<std::size_t>(d));
    for (Index j = 0; j < d; ++j) mag[static_cast<std::size_t>(j)] = std::abs(scores[j]);
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return mag[static_cast<std::size_t>(a)] < mag[static_cast<std::size_t>(b)];
    });

    QValueResult out;
    out.q_values.resize(d);
    out.local_fdr.resize(d);
    double running = std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    while (pos < order.size()) {
        const double s = mag[static_cast<std::size_t>(order[pos])];
        std::size_t end = pos;
        while (end < order.size() && mag[static_cast<std::size_t>(order[end])] == s) ++end;
        const double at_or_above = static_cast<double>(order.size() - pos);
        const double fdr = eta0 * detail::half_normal_tail(s, null_scale) * static_cast<double>(d) / at_or_above;
        running = std::min(running, fdr);
        const double q = std::clamp(running, 0.0, 1.0);
        for (std::size_t k = pos; k < end; ++k) out.q_values[order[k]] = q;
        pos = end;
    }

    const GrenanderDensity mixture(mag);
    for (Index j = 0; j < d; ++j) {
        const double x = mag[static_cast<std::size_t>(j)];
        const double f = mixture(x);
        const double f0 = eta0 * detail::half_normal_pdf(x, null_scale);
        out.local_fdr[j] = f > 0.0 ? std::clamp(f0 / f, 0.0, 1.0) : 1.0;
    }
    return out;
}

struct SelectionResult {
    VectorXd q_values;
    VectorXd local_fdr;
    double eta0 = 1.0;
    double null_scale = 1.0;
    double alpha = 0.0;
    std::vector<Index> selected;  // ascending indices
    double threshold_phi = std::numeric_limits<double>::infinity();
};

inline SelectionResult select(const VectorXd& scores, double alpha, const FdrOptions& opt = {}) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::BadConfig, "alpha must lie in (0,1)");
    const auto null = fit_null(scores, opt);
    auto q = q_values(scores, null.eta0, null.null_scale);
    SelectionResult out;
    out.eta0 = null.eta0;
    out.null_scale = null.null_scale;
    out.alpha = alpha;
    for (Index j = 0; j < scores.size(); ++j) {
        if (q.q_values[j] <= alpha) {
            out.selected.push_back(j);
            out.threshold_phi = std::min(out.threshold_phi, std::abs(scores[j]));
        }
    }
    out.q_values = std::move(q.q_values);
    out.local_fdr = std::move(q.local_fdr);
    return out;
}

inline SelectionResult select(const ScoreVector& scores, double alpha, const FdrOptions& opt = {}) {
    return select(scores.scores, alpha, opt);
}

}  // namespace cars
