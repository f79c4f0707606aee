#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "covsense/covariance.hpp"
#include "covsense/error.hpp"
#include "covsense/theory.hpp"

namespace covsense {

enum class StatisticKind { cav, frobenius, generalized };

/// Numerator/denominator pair of a covariance test: (T1, T2) or (T3, T4).
struct DetectorStatistics {
    double t_num = 0.0;
    double t_den = 0.0;
    double ratio = 1.0;
    StatisticKind kind = StatisticKind::cav;
};

struct Decision {
    bool present = false;
    double statistic = 0.0;
    double threshold = 0.0;
};

namespace detail {

inline DetectorStatistics finish(double diag_part, double offdiag_part, StatisticKind kind) {
    if (!(diag_part > 0.0)) {
        throw Error(ErrorCode::AllZeroInput, "diagonal statistic is zero; ratio undefined");
    }
    DetectorStatistics stats;
    stats.kind = kind;
    stats.t_den = diag_part;
    stats.t_num = diag_part + offdiag_part;
    stats.ratio = stats.t_num / stats.t_den;
    return stats;
}

template <typename Fn>
DetectorStatistics entrywise_statistics(const CovarianceEstimate& cov, Fn&& magnitude, StatisticKind kind) {
    const Eigen::Index d = cov.entries.rows();
    if (d < 1 || cov.entries.cols() != d) {
        throw Error(ErrorCode::DimensionMismatch, "covariance must be square and non-empty");
    }
    double diag = 0.0;
    double off = 0.0;
    for (Eigen::Index n = 0; n < d; ++n) {
        for (Eigen::Index m = 0; m < d; ++m) {
            const double v = magnitude(cov.entries(n, m));
            if (n == m) {
                diag += v;
            } else {
                off += v;
            }
        }
    }
    const double scale = 1.0 / static_cast<double>(d);
    return finish(diag * scale, off * scale, kind);
}

}  // namespace detail

/// T1 = (1/d) sum |r_nm|, T2 = (1/d) sum |r_nn|.
[[nodiscard]] inline DetectorStatistics cav_statistics(const CovarianceEstimate& cov) {
    return detail::entrywise_statistics(cov, [](double v) { return std::abs(v); }, StatisticKind::cav);
}

/// T3 = (1/d) sum r_nm^2, T4 = (1/d) sum r_nn^2.
[[nodiscard]] inline DetectorStatistics frobenius_statistics(const CovarianceEstimate& cov) {
    return detail::entrywise_statistics(cov, [](double v) { return v * v; }, StatisticKind::frobenius);
}

/// CAV statistics straight from the autocorrelations:
/// T1 = lambda(0) + (2/L) sum_{l=1}^{L-1} (L-l) |lambda(l)|, T2 = lambda(0).
[[nodiscard]] inline DetectorStatistics cav_statistics(const AutocorrVector& acf) {
    const std::size_t lags = acf.values.size();
    if (lags == 0) {
        throw Error(ErrorCode::MalformedBuffer, "empty autocorrelation vector");
    }
    double off = 0.0;
    for (std::size_t l = 1; l < lags; ++l) {
        off += static_cast<double>(lags - l) * std::abs(acf.values[l]);
    }
    return detail::finish(std::abs(acf.values[0]), 2.0 * off / static_cast<double>(lags), StatisticKind::cav);
}

template <typename Fn>
concept EntryFunctional = std::invocable<Fn, std::span<const double>> &&
                          std::convertible_to<std::invoke_result_t<Fn, std::span<const double>>, double>;

/**
 * Generalized covariance statistics: T4 = psi_diag(r_nn), T3 = T4 + psi_offdiag(r_nm, n != m).
 *
 * Off-diagonal entries are passed row-major, both triangles. Each functional must be
 * non-negative and vanish on the all-zero collection; both properties are probed and a
 * violation raises InvalidPsi. The functionals must be free of side effects.
 */
template <EntryFunctional OffDiag, EntryFunctional Diag>
[[nodiscard]] DetectorStatistics generalized_statistics(const CovarianceEstimate& cov, OffDiag&& psi_offdiag,
                                                        Diag&& psi_diag) {
    const Eigen::Index d = cov.entries.rows();
    if (d < 1 || cov.entries.cols() != d) {
        throw Error(ErrorCode::DimensionMismatch, "covariance must be square and non-empty");
    }
    std::vector<double> diag;
    std::vector<double> off;
    diag.reserve(static_cast<std::size_t>(d));
    off.reserve(static_cast<std::size_t>(d * (d - 1)));
    for (Eigen::Index n = 0; n < d; ++n) {
        for (Eigen::Index m = 0; m < d; ++m) {
            (n == m ? diag : off).push_back(cov.entries(n, m));
        }
    }

    auto checked = [](auto& psi, std::span<const double> entries, const char* name) {
        const std::vector<double> zeros(entries.size(), 0.0);
        if (static_cast<double>(psi(std::span<const double>(zeros))) != 0.0) {
            throw Error(ErrorCode::InvalidPsi, std::string(name) + " is nonzero on the zero collection");
        }
        const double value = static_cast<double>(psi(entries));
        if (!(value >= 0.0) || !std::isfinite(value)) {
            throw Error(ErrorCode::InvalidPsi, std::string(name) + " returned a negative or non-finite value");
        }
        return value;
    };
    const double t_den = checked(psi_diag, diag, "psi_diag");
    const double t_off = checked(psi_offdiag, off, "psi_offdiag");
    return detail::finish(t_den, t_off, StatisticKind::generalized);
}

/// Signal declared present iff ratio > threshold; ties go to noise-only.
[[nodiscard]] inline Decision decide(const DetectorStatistics& stats, double threshold) noexcept {
    return Decision{stats.ratio > threshold, stats.ratio, threshold};
}

/// Average power (1/N_s) sum_{n=0}^{N_s-1} x(n)^2; the lag prefix is not used.
[[nodiscard]] inline double energy_statistic(const SampleBuffer& buffer) {
    double acc = 0.0;
    for (double v : buffer.body()) {
        acc += v * v;
    }
    return acc / static_cast<double>(buffer.n_s());
}

/// Average power over every antenna's N_s body samples.
[[nodiscard]] inline double energy_statistic(const MultiAntennaBuffer& buffer) {
    double acc = 0.0;
    for (const auto& ch : buffer.channels()) {
        acc += energy_statistic(ch);
    }
    return acc / static_cast<double>(buffer.antennas());
}

/// 1 + Q^{-1}(Pfa) sqrt(2/n): Gaussian approximation for the normalised average power.
[[nodiscard]] inline double energy_threshold_factor(double pfa, std::size_t n_samples) {
    if (n_samples == 0) {
        throw Error(ErrorCode::InvalidDesign, "energy threshold needs at least one sample");
    }
    return 1.0 + q_inverse(pfa) * std::sqrt(2.0 / static_cast<double>(n_samples));
}

/// Energy detection: present iff average power > threshold_factor * assumed_noise_power.
[[nodiscard]] inline Decision energy_detect(const SampleBuffer& buffer, double assumed_noise_power,
                                            double threshold_factor) {
    if (!(assumed_noise_power > 0.0) || !(threshold_factor > 0.0)) {
        throw Error(ErrorCode::DomainError, "noise power and threshold factor must be positive");
    }
    const double statistic = energy_statistic(buffer);
    const double threshold = threshold_factor * assumed_noise_power;
    return Decision{statistic > threshold, statistic, threshold};
}

}  // namespace covsense
