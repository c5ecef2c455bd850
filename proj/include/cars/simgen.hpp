#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "cars/detail/config.hpp"
#include "cars/detail/csv.hpp"
#include "cars/detail/quantile.hpp"
#include "cars/error.hpp"
#include "cars/random.hpp"
#include "cars/survival_data.hpp"

namespace cars {

struct ScenarioConfig {
    Index n = 100;
    Index d = 30;
    std::array<double, 3> block_magnitudes{0.25, 0.5, 0.75};
    double influential_fraction = 0.1;
    int influential_block = 1;
    double explained_variance = 0.5;
    double censoring_rate = 0.25;
    double cutoff_quantile = 0.9;  // 1 disables the administrative cutoff
    std::uint64_t seed = 1;

    Index block_size() const { return d / 3; }
};

inline void validate(const ScenarioConfig& c) {
    if (c.n < 2) throw Error(ErrorKind::TooFewRows, "scenario needs n >= 2");
    if (c.d % 3 != 0 || c.d / 3 < 2) throw Error(ErrorKind::BadDimension, "d must be divisible by 3 with d/3 >= 2");
    for (double xi : c.block_magnitudes)
        if (!(xi >= 0.0 && xi < 1.0)) throw Error(ErrorKind::BadConfig, "block magnitudes must lie in [0,1)");
    if (!(c.influential_fraction > 0.0 && c.influential_fraction < 1.0))
        throw Error(ErrorKind::BadFraction, "influential_fraction must lie in (0,1)");
    if (c.influential_block < 1 || c.influential_block > 3)
        throw Error(ErrorKind::BadConfig, "influential_block must be 1, 2 or 3");
    if (!(c.explained_variance > 0.0 && c.explained_variance < 1.0))
        throw Error(ErrorKind::BadConfig, "explained_variance must lie in (0,1)");
    if (!(c.censoring_rate > 0.0 && c.censoring_rate < 1.0))
        throw Error(ErrorKind::BadConfig, "censoring_rate must lie in (0,1)");
    if (!(c.cutoff_quantile > 0.0 && c.cutoff_quantile <= 1.0))
        throw Error(ErrorKind::BadConfig, "cutoff_quantile must lie in (0,1]");
}

namespace detail {

inline std::array<double, 3> parse_magnitudes(std::string_view text) {
    const auto items = config_list(text);
    if (items.size() != 3) throw Error(ErrorKind::BadConfig, "block_magnitudes needs exactly three values");
    return {config_real("block_magnitudes", items[0]), config_real("block_magnitudes", items[1]),
            config_real("block_magnitudes", items[2])};
}

}  // namespace detail

/// Applies one `key=value` setting; throws BadConfig for unknown keys.
inline void apply_setting(ScenarioConfig& c, std::string_view key, std::string_view value) {
    using namespace detail;
    if (key == "n") c.n = static_cast<Index>(config_unsigned(key, value));
    else if (key == "d") c.d = static_cast<Index>(config_unsigned(key, value));
    else if (key == "block_magnitudes") c.block_magnitudes = parse_magnitudes(value);
    else if (key == "influential_fraction") c.influential_fraction = config_real(key, value);
    else if (key == "influential_block") c.influential_block = static_cast<int>(config_unsigned(key, value));
    else if (key == "explained_variance") c.explained_variance = config_real(key, value);
    else if (key == "censoring_rate") c.censoring_rate = config_real(key, value);
    else if (key == "cutoff_quantile") c.cutoff_quantile = config_real(key, value);
    else if (key == "seed") c.seed = config_unsigned(key, value);
    else throw Error(ErrorKind::BadConfig, "unknown scenario key '" + std::string(key) + "'");
}

inline ScenarioConfig read_scenario_config(std::istream& in) {
    ScenarioConfig c;
    for (const auto& [key, value] : detail::read_key_values(in)) apply_setting(c, key, value);
    validate(c);
    return c;
}

/**
 * One m x m design block. The P = m(m-1)/2 upper-triangle entries are
 * filled in column-major order (1,2), (1,3), (2,3), (1,4), ...: the first
 * ceil(P/2) get +xi, the rest -xi, mirrored below the diagonal. For m = 4
 * only the last column is negative. For larger m the block is indefinite
 * and needs the nearest-correlation step.
 */
inline MatrixXd design_block(Index m, double xi) {
    if (m < 2) throw Error(ErrorKind::BadDimension, "block size must be at least 2");
    const Index pairs = m * (m - 1) / 2;
    const Index positive = (pairs + 1) / 2;
    MatrixXd a = MatrixXd::Identity(m, m);
    Index k = 0;
    for (Index j = 1; j < m; ++j)
        for (Index i = 0; i < j; ++i, ++k) a(i, j) = a(j, i) = k < positive ? xi : -xi;
    return a;
}

inline MatrixXd build_block_design(Index d, const std::array<double, 3>& magnitudes) {
    if (d % 3 != 0 || d / 3 < 2) throw Error(ErrorKind::BadDimension, "d must be divisible by 3 with d/3 >= 2");
    const Index m = d / 3;
    MatrixXd a = MatrixXd::Zero(d, d);
    for (Index b = 0; b < 3; ++b) a.block(b * m, b * m, m, m) = design_block(m, magnitudes[static_cast<std::size_t>(b)]);
    return a;
}

struct NearestCorrelationResult {
    MatrixXd matrix;
    int iterations = 0;
    bool converged = false;
};

inline constexpr double correlation_eigen_floor = 1e-10;

namespace detail {

inline MatrixXd project_psd(const MatrixXd& m, double floor) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
    const VectorXd vals = eig.eigenvalues().cwiseMax(floor);
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

inline MatrixXd unit_diagonal_rescale(const MatrixXd& m) {
    const VectorXd inv = m.diagonal().cwiseSqrt().cwiseInverse();
    MatrixXd out = inv.asDiagonal() * m * inv.asDiagonal();
    out.diagonal().setOnes();
    return (out + out.transpose()) * 0.5;
}

}  // namespace detail

/**
 * Nearest correlation matrix in the unweighted Frobenius norm by alternating
 * projections onto the PSD cone and the unit-diagonal set, with Dykstra's
 * correction on the PSD step (Higham 2002).
 *
 * Stops when successive iterates differ by at most `tol` in Frobenius norm.
 * The result is then floored at `correlation_eigen_floor` and rescaled to a
 * unit diagonal. An input that already has eigenvalues above the floor is
 * returned unchanged with zero iterations. On exhaustion the last iterate is
 * returned with `converged = false`.
 */
inline NearestCorrelationResult nearest_correlation(const MatrixXd& a, double tol = 1e-8, int max_iter = 500) {
    if (a.rows() != a.cols()) throw Error(ErrorKind::BadShape, "nearest_correlation needs a square matrix");
    NearestCorrelationResult out;
    if (a.rows() == 0) {
        out.matrix = a;
        out.converged = true;
        return out;
    }
    {
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() >= correlation_eigen_floor && (a.diagonal().array() == 1.0).all()) {
            out.matrix = a;
            out.converged = true;
            return out;
        }
    }
    MatrixXd y = a;
    MatrixXd correction = MatrixXd::Zero(a.rows(), a.cols());
    for (int it = 1; it <= max_iter; ++it) {
        const MatrixXd r = y - correction;
        const MatrixXd x = detail::project_psd(r, 0.0);
        correction = x - r;
        MatrixXd next = x;
        next.diagonal().setOnes();
        const double change = (next - y).norm();
        y = std::move(next);
        out.iterations = it;
        if (change <= tol) {
            out.converged = true;
            break;
        }
    }
    out.matrix = detail::unit_diagonal_rescale(detail::project_psd(y, correlation_eigen_floor));
    return out;
}

/// Symmetric square root F of a PSD matrix (F F = corr); eigenvalues below
/// zero by rounding are clipped, clearly negative ones are rejected.
inline MatrixXd symmetric_sqrt(const MatrixXd& corr) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success) throw Error(ErrorKind::SingularMatrix, "eigen decomposition failed");
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -1e-8 * scale)
        throw Error(ErrorKind::SingularMatrix, "correlation matrix is not positive semidefinite");
    const VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// n x d matrix of standard normals, filled row by row.
inline MatrixXd standard_normals(Index n, Index d, Philox4x32& rng) {
    std::normal_distribution<double> normal;
    MatrixXd z(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) z(i, j) = normal(rng);
    return z;
}

/// Rows i.i.d. N(0, corr).
inline MatrixXd sample_covariates(const MatrixXd& corr, Index n, Philox4x32& rng) {
    const MatrixXd f = symmetric_sqrt(corr);
    return standard_normals(n, corr.rows(), rng) * f;
}

struct GroundTruth {
    VectorXd beta;
    std::vector<Index> influential_set;  // ascending
    VectorXd population_theta;
    double sigma_log = 0.0;

    std::vector<bool> influential_mask() const {
        std::vector<bool> mask(static_cast<std::size_t>(beta.size()), false);
        for (Index j : influential_set) mask[static_cast<std::size_t>(j)] = true;
        return mask;
    }
};

/**
 * Coefficients: k = round(fraction * d) nonzero entries at positions
 * offset + floor((i + 0.5) m / k) of the chosen block (size m), carrying the
 * k-point equidistant grid on [-0.9, 1] in position order; k = 1 gives 1.
 */
inline GroundTruth make_beta(Index d, double influential_fraction, int influential_block) {
    if (d % 3 != 0 || d / 3 < 1) throw Error(ErrorKind::BadDimension, "d must be divisible by 3");
    if (influential_block < 1 || influential_block > 3)
        throw Error(ErrorKind::BadConfig, "influential_block must be 1, 2 or 3");
    const Index m = d / 3;
    const auto k = static_cast<Index>(std::llround(influential_fraction * static_cast<double>(d)));
    if (!(influential_fraction > 0.0) || k < 1 || k > m)
        throw Error(ErrorKind::BadFraction, "round(fraction*d) = " + std::to_string(k) + " must lie in [1, d/3]");
    GroundTruth t;
    t.beta = VectorXd::Zero(d);
    const Index offset = (influential_block - 1) * m;
    for (Index i = 0; i < k; ++i) {
        const Index pos = offset + static_cast<Index>(std::floor((static_cast<double>(i) + 0.5) *
                                                                 static_cast<double>(m) / static_cast<double>(k)));
        const double a = static_cast<double>(i), b = static_cast<double>(k - 1);
        // weighted form keeps both endpoints exact
        t.beta[pos] = k == 1 ? 1.0 : (-0.9 * (b - a) + a) / b;
        t.influential_set.push_back(pos);
    }
    return t;
}

/// Noise sd on the log scale giving signal / (signal + sigma^2) = ev.
inline double calibrate_noise(double signal_variance, double explained_variance) {
    if (!(explained_variance > 0.0 && explained_variance < 1.0))
        throw Error(ErrorKind::BadConfig, "explained_variance must lie in (0,1)");
    if (!(signal_variance > 0.0)) throw Error(ErrorKind::ZeroSignal, "beta' corr beta must be positive");
    return std::sqrt(signal_variance * (1.0 - explained_variance) / explained_variance);
}

inline double calibrate_noise(const VectorXd& beta, const MatrixXd& corr, double explained_variance) {
    return calibrate_noise(beta.dot(corr * beta), explained_variance);
}

struct CensoringParams {
    double log_mean = 0.0;
    double log_sd = 1.0;
};

/// Log-normal censoring with the same log-scale sd s as the survival times;
/// P(C < T) = target_rate when log T ~ N(0, s^2).
inline CensoringParams calibrate_censoring(double signal_variance, double sigma_log, double target_rate) {
    if (!(target_rate > 0.0 && target_rate < 1.0))
        throw Error(ErrorKind::BadConfig, "censoring rate must lie in (0,1)");
    const double s2 = signal_variance + sigma_log * sigma_log;
    const boost::math::normal std_normal;
    CensoringParams p;
    p.log_sd = std::sqrt(s2);
    p.log_mean = -boost::math::quantile(std_normal, target_rate) * std::sqrt(2.0 * s2);
    return p;
}

/**
 * Log-normal accelerated failure time model with block-diagonal covariate
 * correlation: log T = X beta + sigma eps, log C ~ N(mu_C, sd_C^2), then an
 * optional administrative cutoff at an empirical quantile of observed times.
 */
struct LatentModel {
    std::vector<MatrixXd> correlation_blocks;
    std::vector<MatrixXd> factor_blocks;  // symmetric square roots
    VectorXd beta;
    double sigma_log = 1.0;
    double signal_variance = 0.0;
    CensoringParams censoring{};
    double cutoff_quantile = 1.0;

    Index dim() const { return beta.size(); }

    MatrixXd correlation() const {
        MatrixXd c = MatrixXd::Zero(dim(), dim());
        Index off = 0;
        for (const auto& b : correlation_blocks) {
            c.block(off, off, b.rows(), b.cols()) = b;
            off += b.rows();
        }
        return c;
    }
};

inline LatentModel make_latent_model(std::vector<MatrixXd> correlation_blocks, VectorXd beta,
                                     double explained_variance, double censoring_rate, double cutoff_quantile = 1.0) {
    LatentModel m;
    Index total = 0;
    for (const auto& b : correlation_blocks) {
        if (b.rows() != b.cols()) throw Error(ErrorKind::BadShape, "correlation blocks must be square");
        total += b.rows();
    }
    if (total != beta.size()) throw Error(ErrorKind::BadShape, "beta length does not match correlation blocks");
    if (!(cutoff_quantile > 0.0 && cutoff_quantile <= 1.0))
        throw Error(ErrorKind::BadConfig, "cutoff_quantile must lie in (0,1]");
    Index off = 0;
    for (const auto& b : correlation_blocks) {
        m.factor_blocks.push_back(symmetric_sqrt(b));
        const VectorXd sub = beta.segment(off, b.rows());
        m.signal_variance += sub.dot(b * sub);
        off += b.rows();
    }
    m.correlation_blocks = std::move(correlation_blocks);
    m.beta = std::move(beta);
    m.sigma_log = calibrate_noise(m.signal_variance, explained_variance);
    m.censoring = calibrate_censoring(m.signal_variance, m.sigma_log, censoring_rate);
    m.cutoff_quantile = cutoff_quantile;
    return m;
}

/// corr^{1/2} beta / sd(log T): the whitened correlations with log time.
inline VectorXd population_theta(const LatentModel& m) {
    VectorXd theta(m.dim());
    Index off = 0;
    for (const auto& f : m.factor_blocks) {
        theta.segment(off, f.rows()) = f * m.beta.segment(off, f.rows());
        off += f.rows();
    }
    return theta / std::sqrt(m.signal_variance + m.sigma_log * m.sigma_log);
}

/**
 * Draws n observations. Draw order is fixed (covariate normals row by row,
 * then n noise terms, then n censoring terms) so a stream reproduces the
 * same sample regardless of caller.
 */
inline SurvivalSample simulate_sample(const LatentModel& m, Index n, Philox4x32& rng) {
    const Index d = m.dim();
    const MatrixXd z = standard_normals(n, d, rng);
    MatrixXd x(n, d);
    Index off = 0;
    for (const auto& f : m.factor_blocks) {
        x.middleCols(off, f.cols()).noalias() = z.middleCols(off, f.rows()) * f;
        off += f.rows();
    }
    std::normal_distribution<double> normal;
    VectorXd log_t = x * m.beta;
    for (Index i = 0; i < n; ++i) log_t[i] += m.sigma_log * normal(rng);
    VectorXd log_c(n);
    for (Index i = 0; i < n; ++i) log_c[i] = m.censoring.log_mean + m.censoring.log_sd * normal(rng);

    VectorXd times(n);
    VectorXi events(n);
    for (Index i = 0; i < n; ++i) {
        events[i] = log_t[i] <= log_c[i] ? 1 : 0;
        times[i] = std::exp(std::min(log_t[i], log_c[i]));
    }
    if (m.cutoff_quantile < 1.0) {
        std::vector<double> sorted(times.data(), times.data() + n);
        std::sort(sorted.begin(), sorted.end());
        const double cut = detail::quantile_sorted(sorted, m.cutoff_quantile);
        for (Index i = 0; i < n; ++i) {
            if (times[i] > cut) {
                times[i] = cut;
                events[i] = 0;
            }
        }
    }
    return make_sample(std::move(times), std::move(events), std::move(x));
}

/// A scenario resolved into its model and truth; shared read-only by all
/// replicates.
struct Scenario {
    ScenarioConfig config;
    LatentModel model;
    GroundTruth truth;
    std::vector<int> projection_iterations;  // per block
};

inline Scenario prepare_scenario(const ScenarioConfig& config) {
    validate(config);
    Scenario sc;
    sc.config = config;
    const Index m = config.block_size();
    std::vector<MatrixXd> blocks;
    for (std::size_t b = 0; b < 3; ++b) {
        auto near = nearest_correlation(design_block(m, config.block_magnitudes[b]));
        sc.projection_iterations.push_back(near.iterations);
        blocks.push_back(std::move(near.matrix));
    }
    sc.truth = make_beta(config.d, config.influential_fraction, config.influential_block);
    sc.model = make_latent_model(std::move(blocks), sc.truth.beta, config.explained_variance, config.censoring_rate,
                                 config.cutoff_quantile);
    sc.truth.sigma_log = sc.model.sigma_log;
    sc.truth.population_theta = population_theta(sc.model);
    return sc;
}

/// Replicate `replicate` of scenario `scenario_index` under the config seed.
inline SurvivalSample generate_replicate(const Scenario& sc, std::uint64_t scenario_index, std::uint64_t replicate) {
    Philox4x32 rng(sc.config.seed, stream_id(scenario_index, replicate));
    return simulate_sample(sc.model, sc.config.n, rng);
}

struct Dataset {
    SurvivalSample sample;
    GroundTruth truth;
};

inline Dataset generate_dataset(const ScenarioConfig& config, std::uint64_t replicate = 0) {
    const auto sc = prepare_scenario(config);
    return {generate_replicate(sc, 0, replicate), sc.truth};
}

/// `name,beta,influential`
inline void write_truth(std::ostream& out, const GroundTruth& t, const std::vector<std::string>& names) {
    if (static_cast<Index>(names.size()) != t.beta.size()) throw Error(ErrorKind::BadShape, "names/beta mismatch");
    const auto mask = t.influential_mask();
    detail::write_row(out, {"name", "beta", "influential"});
    for (Index j = 0; j < t.beta.size(); ++j)
        detail::write_row(out, {names[static_cast<std::size_t>(j)], detail::format_double(t.beta[j]),
                                mask[static_cast<std::size_t>(j)] ? "1" : "0"});
}

}  // namespace cars
