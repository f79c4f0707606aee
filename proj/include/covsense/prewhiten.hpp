#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "covsense/covariance.hpp"
#include "covsense/error.hpp"

namespace covsense {

/// Receive filter f(0) ... f(K) applied to otherwise white noise.
struct FilterSpec {
    std::vector<double> taps;

    [[nodiscard]] std::size_t order() const noexcept { return taps.empty() ? 0 : taps.size() - 1; }
};

/// Precomputed whitening for one (filter, L): G = F F^T = Q^2, Q symmetric positive definite.
struct WhiteningTransform {
    Eigen::MatrixXd gram;           // G
    Eigen::MatrixXd sqrt_gram;      // Q
    Eigen::MatrixXd inverse_sqrt;   // Q^{-1}

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(inverse_sqrt.rows()); }
};

/// Eigenvalues of G at or below this fraction of the largest are treated as singular.
inline constexpr double kPositiveDefiniteFloor = 1e-10;

namespace detail {

inline void validate_filter(const FilterSpec& filter) {
    if (filter.taps.empty()) {
        throw Error(ErrorCode::SingularFilter, "filter has no taps");
    }
    bool any_nonzero = false;
    for (double f : filter.taps) {
        if (!std::isfinite(f)) {
            throw Error(ErrorCode::SingularFilter, "non-finite filter tap");
        }
        any_nonzero = any_nonzero || f != 0.0;
    }
    if (!any_nonzero) {
        throw Error(ErrorCode::SingularFilter, "all filter taps are zero");
    }
}

}  // namespace detail

/// L x (L+K) banded matrix, row r holding f(0) ... f(K) in columns r ... r+K.
[[nodiscard]] inline Eigen::MatrixXd build_filter_matrix(const FilterSpec& filter, std::size_t smoothing) {
    detail::validate_filter(filter);
    if (smoothing < 1) {
        throw Error(ErrorCode::DimensionMismatch, "L must be at least 1");
    }
    const std::size_t k_order = filter.order();
    Eigen::MatrixXd f_mat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(smoothing),
                                                  static_cast<Eigen::Index>(smoothing + k_order));
    for (std::size_t r = 0; r < smoothing; ++r) {
        for (std::size_t k = 0; k <= k_order; ++k) {
            f_mat(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r + k)) = filter.taps[k];
        }
    }
    return f_mat;
}

/**
 * Builds Q^{-1} for the filtered-noise covariance sigma^2 G. Q is the unique symmetric
 * positive-definite square root of G from its eigendecomposition.
 */
[[nodiscard]] inline WhiteningTransform whitening_transform(const FilterSpec& filter, std::size_t smoothing) {
    const Eigen::MatrixXd f_mat = build_filter_matrix(filter, smoothing);
    WhiteningTransform transform;
    transform.gram = f_mat * f_mat.transpose();

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(transform.gram);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularFilter, "eigendecomposition of G failed");
    }
    const Eigen::VectorXd& values = eig.eigenvalues();
    const double largest = values.maxCoeff();
    if (!(values.minCoeff() > kPositiveDefiniteFloor * largest)) {
        throw Error(ErrorCode::SingularFilter, "G is not positive definite");
    }
    const Eigen::MatrixXd& vectors = eig.eigenvectors();
    const Eigen::VectorXd root = values.array().sqrt();
    transform.sqrt_gram = vectors * root.asDiagonal() * vectors.transpose();
    transform.inverse_sqrt = vectors * root.cwiseInverse().asDiagonal() * vectors.transpose();
    transform.sqrt_gram = 0.5 * (transform.sqrt_gram + transform.sqrt_gram.transpose()).eval();
    transform.inverse_sqrt = 0.5 * (transform.inverse_sqrt + transform.inverse_sqrt.transpose()).eval();
    return transform;
}

/// Q^{-1} R Q^{-1}, re-symmetrised. The result is a generic symmetric estimate.
[[nodiscard]] inline CovarianceEstimate apply_whitening(const CovarianceEstimate& cov, const WhiteningTransform& transform) {
    if (cov.entries.rows() != cov.entries.cols() ||
        static_cast<std::size_t>(cov.entries.rows()) != transform.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "covariance and whitening transform sizes differ");
    }
    const Eigen::MatrixXd product = transform.inverse_sqrt * cov.entries * transform.inverse_sqrt;
    CovarianceEstimate out;
    out.entries = 0.5 * (product + product.transpose());
    out.structure = CovarianceStructure::symmetric;
    return out;
}

/// Valid-mode FIR: out(n) = sum_k f(k) in(n + K - k), length in.size() - K.
[[nodiscard]] inline std::vector<double> apply_filter(std::span<const double> input, const FilterSpec& filter) {
    detail::validate_filter(filter);
    const std::size_t k_order = filter.order();
    if (input.size() <= k_order) {
        throw Error(ErrorCode::DimensionMismatch, "input shorter than the filter");
    }
    std::vector<double> out(input.size() - k_order);
    for (std::size_t n = 0; n < out.size(); ++n) {
        double acc = 0.0;
        for (std::size_t k = 0; k <= k_order; ++k) {
            acc += filter.taps[k] * input[n + k_order - k];
        }
        out[n] = acc;
    }
    return out;
}

}  // namespace covsense
