#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cars/error.hpp"
#include "cars/survival_data.hpp"

namespace cars {

/// Columns centered and scaled to unit sample variance (divisor n - 1).
/// Constant columns are left as zeros and flagged.
struct StandardizedColumns {
    MatrixXd z;
    std::vector<bool> degenerate;

    Index rows() const { return z.rows(); }
    Index cols() const { return z.cols(); }
};

inline StandardizedColumns standardize_columns(const MatrixXd& x) {
    const auto summary = covariate_summary(x);
    StandardizedColumns out;
    out.degenerate = summary.degenerate;
    out.z.resize(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        if (summary.degenerate[static_cast<std::size_t>(j)]) {
            out.z.col(j).setZero();
            continue;
        }
        const double sd = std::sqrt(summary.variances[j]);
        out.z.col(j) = (x.col(j).array() - summary.means[j]) / sd;
    }
    return out;
}

/// Pearson correlations. Zero-variance columns correlate 0 with everything
/// else and 1 with themselves.
inline MatrixXd sample_correlations(const MatrixXd& x) {
    if (x.rows() < 3) throw Error(ErrorKind::TooFewRows, "sample_correlations needs n >= 3");
    const auto sc = standardize_columns(x);
    MatrixXd r = (sc.z.transpose() * sc.z) / static_cast<double>(x.rows() - 1);
    for (Index j = 0; j < r.cols(); ++j) r(j, j) = 1.0;
    return r;
}

/**
 * Shrinkage intensity toward the identity,
 *   lambda = sum_{j != k} Var(r_jk) / sum_{j != k} r_jk^2,
 * with the variance of each sample correlation estimated from the
 * per-observation products of standardized values,
 *   Var(r_jk) = n / (n-1)^3 * sum_i (z_ij z_ik - mean_i(z_ij z_ik))^2.
 *
 * The double sums over pairs are reduced to an n x n Gram matrix so the cost
 * is O(n^2 d) rather than O(n d^2). Clipped to [0, 1]; returns 1 when all
 * off-diagonal correlations vanish.
 */
inline double shrinkage_lambda(const StandardizedColumns& sc) {
    const Index n = sc.rows();
    const Index d = sc.cols();
    if (d < 2) throw Error(ErrorKind::BadDimension, "shrinkage_lambda needs d >= 2");
    if (n < 3) throw Error(ErrorKind::TooFewRows, "shrinkage_lambda needs n >= 3");
    const double nd = static_cast<double>(n);
    const double nm1 = nd - 1.0;

    const MatrixXd sq = sc.z.array().square().matrix();
    // sum_{j != k} sum_i z_ij^2 z_ik^2
    double cross4 = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double row_sq = sq.row(i).sum();
        cross4 += row_sq * row_sq - sq.row(i).squaredNorm();
    }
    // sum_{j != k} (z_j . z_k)^2 via the Gram matrix of rows
    MatrixXd gram = MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(sc.z);
    double frob = 0.0;
    for (Index b = 0; b < n; ++b) {
        frob += gram(b, b) * gram(b, b);
        for (Index a = b + 1; a < n; ++a) frob += 2.0 * gram(a, b) * gram(a, b);
    }
    double diag = 0.0;
    for (Index j = 0; j < d; ++j) {
        const double c = sq.col(j).sum();
        diag += c * c;
    }
    const double offdiag_dot2 = std::max(0.0, frob - diag);     // sum_{j != k} (z_j . z_k)^2
    const double sum_r2 = offdiag_dot2 / (nm1 * nm1);           // sum_{j != k} r_jk^2
    const double sum_wbar2 = offdiag_dot2 / (nd * nd);          // sum_{j != k} wbar_jk^2
    const double var_sum = nd / (nm1 * nm1 * nm1) * std::max(0.0, cross4 - nd * sum_wbar2);
    if (!(sum_r2 > 0.0)) return 1.0;
    return std::clamp(var_sum / sum_r2, 0.0, 1.0);
}

inline double shrinkage_lambda(const MatrixXd& x) { return shrinkage_lambda(standardize_columns(x)); }

/**
 * R_shrink = lambda I + (1 - lambda) R_X.
 *
 * Held either densely or in factored form R_X = F^T F (+ unit diagonal on
 * degenerate columns), where F is the standardized data scaled by
 * 1/sqrt(n-1). The factored form is what makes d > n cheap.
 */
struct ShrinkageCorrelation {
    double lambda = 0.0;
    Index dim = 0;
    std::optional<MatrixXd> matrix;
    std::optional<MatrixXd> factor;      // n x d
    std::vector<bool> degenerate;        // only meaningful with a factor

    bool factored() const { return factor.has_value(); }

    MatrixXd dense() const {
        if (matrix) return *matrix;
        MatrixXd r = factor->transpose() * *factor;
        r *= (1.0 - lambda);
        for (Index j = 0; j < dim; ++j) r(j, j) = 1.0;
        return r;
    }
};

inline ShrinkageCorrelation shrink(const MatrixXd& corr, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::BadConfig, "lambda must lie in [0,1]");
    if (corr.rows() != corr.cols()) throw Error(ErrorKind::BadShape, "correlation matrix must be square");
    ShrinkageCorrelation out;
    out.lambda = lambda;
    out.dim = corr.rows();
    MatrixXd m = (1.0 - lambda) * corr;
    for (Index j = 0; j < out.dim; ++j) m(j, j) = 1.0;
    out.matrix = std::move(m);
    return out;
}

inline ShrinkageCorrelation shrink_factored(const StandardizedColumns& sc, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::BadConfig, "lambda must lie in [0,1]");
    if (sc.rows() < 2) throw Error(ErrorKind::TooFewRows, "factored shrinkage needs n >= 2");
    ShrinkageCorrelation out;
    out.lambda = lambda;
    out.dim = sc.cols();
    out.factor = sc.z / std::sqrt(static_cast<double>(sc.rows() - 1));
    out.degenerate = sc.degenerate;
    return out;
}

inline constexpr double singular_eigen_tol = 1e-10;

/**
 * R_shrink^{-1/2}, either as a dense symmetric matrix or in the structured
 * form
 *   lambda^{-1/2} I + V (diag((lambda + (1-lambda) mu_k)^{-1/2}) - lambda^{-1/2}) V^T,
 * where V holds the eigenvectors of R_X with nonzero eigenvalues mu_k.
 */
class InverseSqrtCorrelation {
public:
    static InverseSqrtCorrelation from_dense(MatrixXd m, double min_eigenvalue, Index rank) {
        InverseSqrtCorrelation out;
        out.dim_ = m.rows();
        out.dense_ = std::move(m);
        out.min_eigenvalue_ = min_eigenvalue;
        out.rank_ = rank;
        return out;
    }

    static InverseSqrtCorrelation from_factors(MatrixXd basis, VectorXd basis_scale, double complement_scale,
                                               std::vector<bool> identity_coords, double min_eigenvalue) {
        InverseSqrtCorrelation out;
        out.dim_ = basis.rows();
        out.rank_ = basis.cols();
        out.basis_ = std::move(basis);
        out.basis_scale_ = std::move(basis_scale);
        out.complement_scale_ = complement_scale;
        out.identity_coords_ = std::move(identity_coords);
        out.min_eigenvalue_ = min_eigenvalue;
        return out;
    }

    Index dim() const { return dim_; }
    bool structured() const { return !dense_.has_value(); }
    /// Smallest eigenvalue of R_shrink.
    double min_eigenvalue() const { return min_eigenvalue_; }
    /// Number of nonzero eigenvalues of the sample correlation used.
    Index rank() const { return rank_; }

    VectorXd apply(const VectorXd& v) const {
        if (v.size() != dim_) throw Error(ErrorKind::BadShape, "vector length does not match dimension");
        if (dense_) return *dense_ * v;
        VectorXd coeffs = basis_.transpose() * v;
        coeffs.array() *= basis_scale_.array();
        VectorXd out = complement_scale_ * v + basis_ * coeffs;
        for (Index j = 0; j < dim_; ++j)
            if (identity_coords_[static_cast<std::size_t>(j)]) out[j] = v[j];
        return out;
    }

    MatrixXd to_dense() const {
        if (dense_) return *dense_;
        MatrixXd out(dim_, dim_);
        for (Index j = 0; j < dim_; ++j) out.col(j) = apply(VectorXd::Unit(dim_, j));
        return out;
    }

private:
    Index dim_ = 0;
    Index rank_ = 0;
    double min_eigenvalue_ = 0.0;
    std::optional<MatrixXd> dense_;
    MatrixXd basis_;
    VectorXd basis_scale_;
    double complement_scale_ = 0.0;
    std::vector<bool> identity_coords_;
};

namespace detail {

inline InverseSqrtCorrelation inverse_sqrt_dense(const MatrixXd& r, double lambda) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(r);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::SingularMatrix, "eigendecomposition failed");
    const VectorXd& ev = es.eigenvalues();
    const double min_ev = ev.minCoeff();
    if (min_ev <= singular_eigen_tol)
        throw Error(ErrorKind::SingularMatrix, "shrunk correlation matrix is singular (min eigenvalue " +
                                                   std::to_string(min_ev) + ")");
    // rank of R_X from the eigenvalues of R_shrink = lambda + (1 - lambda) mu
    Index rank = 0;
    if (lambda < 1.0) {
        const double tol = 1e-10 * static_cast<double>(r.rows());
        for (Index k = 0; k < ev.size(); ++k)
            if ((ev[k] - lambda) / (1.0 - lambda) > tol) ++rank;
    } else {
        rank = r.rows();
    }
    const MatrixXd& v = es.eigenvectors();
    MatrixXd m = v * ev.array().rsqrt().matrix().asDiagonal() * v.transpose();
    m = 0.5 * (m + m.transpose());
    return InverseSqrtCorrelation::from_dense(std::move(m), min_ev, rank);
}

inline InverseSqrtCorrelation inverse_sqrt_factored(const ShrinkageCorrelation& s) {
    const MatrixXd& f = *s.factor;  // n x d
    const Index d = s.dim;
    const double lambda = s.lambda;

    // The nonzero spectrum of F^T F equals that of the n x n matrix F F^T.
    MatrixXd gram = MatrixXd::Zero(f.rows(), f.rows());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(f);
    gram = gram.selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::SingularMatrix, "eigendecomposition failed");
    const VectorXd& mu = es.eigenvalues();
    const double mu_max = std::max(mu.maxCoeff(), 0.0);
    const double tol = std::max(mu_max, 1.0) * 1e-12 * static_cast<double>(std::max<Index>(f.rows(), d));

    std::vector<Index> keep;
    for (Index k = 0; k < mu.size(); ++k)
        if (mu[k] > tol) keep.push_back(k);
    const auto r = static_cast<Index>(keep.size());

    Index n_degenerate = 0;
    for (bool b : s.degenerate) n_degenerate += b ? 1 : 0;

    MatrixXd basis(d, r);
    VectorXd scale(r);
    double min_ev = std::numeric_limits<double>::infinity();
    const double complement = lambda > 0.0 ? 1.0 / std::sqrt(lambda) : 0.0;
    for (Index c = 0; c < r; ++c) {
        const Index k = keep[static_cast<std::size_t>(c)];
        basis.col(c) = f.transpose() * es.eigenvectors().col(k) / std::sqrt(mu[k]);
        const double shrunk = lambda + (1.0 - lambda) * mu[k];
        min_ev = std::min(min_ev, shrunk);
        scale[c] = 1.0 / std::sqrt(shrunk) - complement;
    }
    if (d - r - n_degenerate > 0) min_ev = std::min(min_ev, lambda);
    if (n_degenerate > 0) min_ev = std::min(min_ev, 1.0);
    if (min_ev <= singular_eigen_tol)
        throw Error(ErrorKind::SingularMatrix, "shrunk correlation matrix is singular (min eigenvalue " +
                                                   std::to_string(min_ev) + ")");
    return InverseSqrtCorrelation::from_factors(std::move(basis), std::move(scale), complement, s.degenerate,
                                                min_ev);
}

}  // namespace detail

inline InverseSqrtCorrelation inverse_sqrt(const ShrinkageCorrelation& s) {
    if (s.factored()) return detail::inverse_sqrt_factored(s);
    return detail::inverse_sqrt_dense(*s.matrix, s.lambda);
}

}  // namespace cars
