#pragma once

// Closed-form large-N_s / low-SNR approximations for the CAV detector and the
// ideal energy detector: thresholds, false-alarm and detection probabilities,
// required sample counts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "covsense/error.hpp"

namespace covsense {

/// Analytic design point: smoothing L, sample count N_s, target Pfa, linear SNR.
struct DetectionDesign {
    std::size_t smoothing = 10;
    std::size_t n_s = 50000;
    double pfa_target = 0.1;
    double snr = 0.0;
};

/// alpha_1 ... alpha_{L-1}; alpha_0 = 1 is implicit.
struct CorrelationProfile {
    std::vector<double> alphas;
};

/// Gaussian tail probability Q(t) = P(N(0,1) > t).
[[nodiscard]] inline double q_function(double t) {
    return 0.5 * std::erfc(t / std::numbers::sqrt2);
}

/// Inverse of q_function on (1e-12, 1 - 1e-12), by bisection on the monotone Q.
[[nodiscard]] inline double q_inverse(double p) {
    constexpr double kEdge = 1e-12;
    if (!(p > kEdge && p < 1.0 - kEdge)) {
        throw Error(ErrorCode::DomainError, "q_inverse needs p in (1e-12, 1 - 1e-12)");
    }
    if (p == 0.5) {
        return 0.0;
    }
    // Q(-7.5) ~ 1 - 3e-14 and Q(7.5) ~ 3e-14 bracket the admissible range.
    double lo = -7.5;
    double hi = 7.5;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (q_function(mid) > p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

namespace detail {

inline void validate_design(const DetectionDesign& design) {
    if (design.smoothing < 1 || design.n_s < 1) {
        throw Error(ErrorCode::InvalidDesign, "L and N_s must be at least 1");
    }
    if (!(design.pfa_target > 0.0 && design.pfa_target < 0.5)) {
        throw Error(ErrorCode::InvalidDesign, "target Pfa must lie in (0, 0.5)");
    }
    if (!(design.snr >= 0.0)) {
        throw Error(ErrorCode::InvalidDesign, "SNR must be non-negative");
    }
}

inline double noise_spread(std::size_t n_s) { return std::sqrt(2.0 / static_cast<double>(n_s)); }

}  // namespace detail

/// Expected noise-only T1/T2: 1 + (L-1) sqrt(2 / (pi N_s)).
[[nodiscard]] inline double predict_ratio_h0(std::size_t smoothing, std::size_t n_s) {
    if (smoothing <= 1) {
        return 1.0;
    }
    return 1.0 + static_cast<double>(smoothing - 1) *
                     std::sqrt(2.0 / (std::numbers::pi * static_cast<double>(n_s)));
}

/// Expected T1/T2 with signal present: 1 + upsilon * SNR / (SNR + 1).
[[nodiscard]] inline double predict_ratio_h1(double snr, double upsilon) {
    if (std::isinf(snr)) {
        return 1.0 + upsilon;
    }
    return 1.0 + upsilon * snr / (snr + 1.0);
}

/**
 * CAV threshold gamma_1 for a target false-alarm probability:
 *
 *   gamma_1 = (1 + (L-1) sqrt(2/(N_s pi))) / (1 - Q^{-1}(Pfa) sqrt(2/N_s))
 *
 * Independent of the noise power. Throws InvalidDesign when the denominator is not
 * positive, i.e. N_s <= 2 Q^{-1}(Pfa)^2.
 */
[[nodiscard]] inline double cav_threshold(const DetectionDesign& design) {
    detail::validate_design(design);
    const double denom = 1.0 - q_inverse(design.pfa_target) * detail::noise_spread(design.n_s);
    if (!(denom > 0.0)) {
        throw Error(ErrorCode::InvalidDesign,
                    "N_s = " + std::to_string(design.n_s) + " is too small for the target Pfa");
    }
    return predict_ratio_h0(design.smoothing, design.n_s) / denom;
}

/// Predicted false-alarm probability of the CAV test at a given threshold.
[[nodiscard]] inline double cav_pfa(double threshold, std::size_t smoothing, std::size_t n_s) {
    if (std::isinf(threshold)) {
        return 0.0;
    }
    const double arg =
        (predict_ratio_h0(smoothing, n_s) / threshold - 1.0) / detail::noise_spread(n_s);
    return 1.0 - q_function(arg);
}

/// Overall correlation strength Upsilon_L = (2/L) sum_{l=1}^{L-1} (L-l) |alpha_l|.
[[nodiscard]] inline double correlation_strength(const CorrelationProfile& profile, std::size_t smoothing) {
    if (smoothing < 1 || profile.alphas.size() + 1 < smoothing) {
        throw Error(ErrorCode::InvalidDesign,
                    "correlation profile needs L-1 = " + std::to_string(smoothing - 1) + " entries");
    }
    double acc = 0.0;
    for (std::size_t l = 1; l < smoothing; ++l) {
        acc += static_cast<double>(smoothing - l) * std::abs(profile.alphas[l - 1]);
    }
    return 2.0 * acc / static_cast<double>(smoothing);
}

/// Predicted CAV detection probability at threshold gamma_1 (large N_s, low SNR).
[[nodiscard]] inline double cav_pd(double threshold, double snr, double upsilon, std::size_t n_s) {
    const double gain = std::isinf(snr) ? upsilon : upsilon * snr / (snr + 1.0);
    const double arg = (1.0 / threshold + gain / threshold - 1.0) / detail::noise_spread(n_s);
    return 1.0 - q_function(arg);
}

/**
 * Large-N_s approximation of E[T1(N_s)] with signal present, noise power sigma_eta^2
 * and signal power SNR * sigma_eta^2.
 *
 * Per-lag signal terms are weighted by 1 - 2Q(tau_l) with
 * tau_l = |alpha_l| SNR sqrt(N_s) / (1 + SNR); the finite-sample bias term carries the
 * factor (2 - exp(-tau_l^2 / 2)). (The folded-normal mean would use exp(-tau_l^2 / 2)
 * alone; both agree at tau = 0 and in the N_s -> inf limit.)
 */
[[nodiscard]] inline double expected_t1_h1(double snr, const CorrelationProfile& profile, std::size_t smoothing,
                                           std::size_t n_s, double noise_power) {
    if (!(snr >= 0.0) || !(noise_power > 0.0)) {
        throw Error(ErrorCode::InvalidDesign, "need SNR >= 0 and a positive noise power");
    }
    if (profile.alphas.size() + 1 < smoothing) {
        throw Error(ErrorCode::InvalidDesign, "correlation profile shorter than L-1");
    }
    const double sig = snr * noise_power;
    const double total = sig + noise_power;
    const double ns = static_cast<double>(n_s);
    const double bias = std::sqrt(2.0 / (std::numbers::pi * ns));
    const double ell = static_cast<double>(smoothing);

    double signal_terms = 0.0;
    double bias_terms = 0.0;
    for (std::size_t l = 1; l < smoothing; ++l) {
        const double weight = ell - static_cast<double>(l);
        const double alpha = std::abs(profile.alphas[l - 1]);
        const double tau = alpha * snr * std::sqrt(ns) / (1.0 + snr);
        signal_terms += weight * alpha * (1.0 - 2.0 * q_function(tau));
        bias_terms += weight * bias * (2.0 - std::exp(-0.5 * tau * tau));
    }
    return total + 2.0 * sig / ell * signal_terms + 2.0 * total / ell * bias_terms;
}

namespace detail {

inline std::uint64_t ceil_count(double value) {
    if (!std::isfinite(value)) {
        throw Error(ErrorCode::DegenerateDesign, "required sample count is not finite");
    }
    // Absorb roundoff just above an integer so exact products do not round up.
    const double nearest = std::round(value);
    if (std::abs(value - nearest) <= 1e-9 * std::max(1.0, nearest)) {
        return static_cast<std::uint64_t>(nearest);
    }
    return static_cast<std::uint64_t>(std::ceil(value));
}

inline void validate_probabilities(double pd, double pfa, bool allow_equal) {
    const bool ordered = allow_equal ? (pfa <= pd) : (pfa < pd);
    if (!(pfa > 0.0 && pd < 1.0 && ordered)) {
        throw Error(ErrorCode::InvalidDesign, "need 0 < Pfa < Pd < 1");
    }
}

}  // namespace detail

/// Real-valued CAV sample requirement before rounding.
[[nodiscard]] inline double required_samples_cav_real(double pd, double pfa, std::size_t smoothing, double upsilon,
                                                      double snr) {
    detail::validate_probabilities(pd, pfa, false);
    const double strength = upsilon * snr;
    if (!(strength > 0.0)) {
        throw Error(ErrorCode::DegenerateDesign, "Upsilon_L * SNR is zero; no finite sample count");
    }
    const double num = q_inverse(pfa) - q_inverse(pd) +
                       static_cast<double>(smoothing - 1) / std::sqrt(std::numbers::pi);
    return 2.0 * num * num / (strength * strength);
}

/// N_c = ceil(2 (Q^{-1}(Pfa) - Q^{-1}(Pd) + (L-1)/sqrt(pi))^2 / (Upsilon_L SNR)^2).
[[nodiscard]] inline std::uint64_t required_samples_cav(double pd, double pfa, std::size_t smoothing, double upsilon,
                                                        double snr) {
    return detail::ceil_count(required_samples_cav_real(pd, pfa, smoothing, upsilon, snr));
}

/// N_e = ceil(2 (Q^{-1}(Pfa) - Q^{-1}(Pd))^2 / SNR^2) for the ideal energy detector.
[[nodiscard]] inline std::uint64_t required_samples_energy(double pd, double pfa, double snr) {
    detail::validate_probabilities(pd, pfa, true);
    if (!(snr > 0.0)) {
        throw Error(ErrorCode::DegenerateDesign, "SNR is zero; no finite sample count");
    }
    if (pd == pfa) {
        return 0;
    }
    const double num = q_inverse(pfa) - q_inverse(pd);
    return detail::ceil_count(2.0 * num * num / (snr * snr));
}

/// Upsilon_L above which CAV needs fewer samples than ideal energy detection.
[[nodiscard]] inline double cav_advantage_boundary(double pd, double pfa, std::size_t smoothing) {
    detail::validate_probabilities(pd, pfa, false);
    return 1.0 + static_cast<double>(smoothing - 1) /
                     (std::sqrt(std::numbers::pi) * (q_inverse(pfa) - q_inverse(pd)));
}

[[nodiscard]] inline bool cav_advantage(double pd, double pfa, std::size_t smoothing, double upsilon) {
    if (smoothing <= 1) {
        return false;  // Upsilon_1 is identically zero
    }
    return upsilon > cav_advantage_boundary(pd, pfa, smoothing);
}

struct SmoothingChoice {
    std::size_t smoothing = 0;
    std::uint64_t required_samples = 0;
};

/**
 * Smoothing factor in `candidates` minimising N_c. SNR only scales N_c globally, so the
 * search runs at `snr` (default 1) and the count is reported at that SNR. Ties go to the
 * smaller L; candidates with Upsilon_L = 0 are skipped.
 */
[[nodiscard]] inline SmoothingChoice best_smoothing_factor(
    double pd, double pfa, const std::function<CorrelationProfile(std::size_t)>& alpha_profile_fn,
    std::span<const std::size_t> candidates, double snr = 1.0) {
    if (candidates.empty()) {
        throw Error(ErrorCode::InvalidDesign, "empty smoothing range");
    }
    SmoothingChoice best;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t smoothing : candidates) {
        const double upsilon = correlation_strength(alpha_profile_fn(smoothing), smoothing);
        if (!(upsilon > 0.0)) {
            continue;
        }
        const double value = required_samples_cav_real(pd, pfa, smoothing, upsilon, snr);
        if (value < best_value || (value == best_value && smoothing < best.smoothing)) {
            best_value = value;
            best.smoothing = smoothing;
        }
    }
    if (best.smoothing == 0) {
        throw Error(ErrorCode::DegenerateDesign, "Upsilon_L is zero for every candidate L");
    }
    best.required_samples = detail::ceil_count(best_value);
    return best;
}

/// Half-width B (dB) of a noise-uncertainty support: max |10 log10 alpha|.
[[nodiscard]] inline double noise_uncertainty_bound(std::span<const double> alpha_support) {
    double bound = 0.0;
    for (double alpha : alpha_support) {
        if (!(alpha > 0.0)) {
            throw Error(ErrorCode::DomainError, "noise-power factor must be positive");
        }
        bound = std::max(bound, std::abs(10.0 * std::log10(alpha)));
    }
    return bound;
}

/// Linear noise-power factor interval [10^(-B/10), 10^(B/10)] for a bound in dB.
[[nodiscard]] inline std::pair<double, double> noise_uncertainty_interval(double bound_db) {
    return {std::pow(10.0, -bound_db / 10.0), std::pow(10.0, bound_db / 10.0)};
}

[[nodiscard]] inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
[[nodiscard]] inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

}  // namespace covsense
