#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "covsense/error.hpp"

namespace covsense {

/**
 * A window of real received samples x(-(L-1)) ... x(N_s-1).
 *
 * The first L-1 samples are the lag prefix, so every lag l < L of every one of the
 * N_s correlation terms is backed by a real sample rather than zero padding.
 */
class SampleBuffer {
public:
    SampleBuffer(std::vector<double> samples, std::size_t n_s, std::size_t smoothing)
        : samples_(std::move(samples)), n_s_(n_s), smoothing_(smoothing) {
        if (n_s_ < 1 || smoothing_ < 1) {
            throw Error(ErrorCode::MalformedBuffer, "N_s and L must both be at least 1");
        }
        if (samples_.size() != n_s_ + smoothing_ - 1) {
            throw Error(ErrorCode::MalformedBuffer,
                        "expected N_s + L - 1 = " + std::to_string(n_s_ + smoothing_ - 1) +
                            " samples, got " + std::to_string(samples_.size()));
        }
        for (double v : samples_) {
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::MalformedBuffer, "non-finite sample");
            }
        }
    }

    /// Builds a buffer whose N_s is implied by the sample count and L.
    static SampleBuffer from_samples(std::vector<double> samples, std::size_t smoothing) {
        if (smoothing < 1 || samples.size() < smoothing) {
            throw Error(ErrorCode::MalformedBuffer,
                        "need at least L samples to form one correlation term");
        }
        const std::size_t n_s = samples.size() - smoothing + 1;
        return SampleBuffer(std::move(samples), n_s, smoothing);
    }

    [[nodiscard]] std::size_t n_s() const noexcept { return n_s_; }
    [[nodiscard]] std::size_t smoothing() const noexcept { return smoothing_; }
    [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }

    /// x(n) for n in [-(L-1), N_s-1].
    [[nodiscard]] double at(std::ptrdiff_t n) const {
        return samples_[static_cast<std::size_t>(n + static_cast<std::ptrdiff_t>(smoothing_) - 1)];
    }

    /// x(0) ... x(N_s-1), the part after the lag prefix.
    [[nodiscard]] std::span<const double> body() const noexcept {
        return std::span<const double>(samples_).subspan(smoothing_ - 1);
    }

private:
    std::vector<double> samples_;
    std::size_t n_s_;
    std::size_t smoothing_;
};

/// M synchronous channel buffers sharing N_s and L.
class MultiAntennaBuffer {
public:
    explicit MultiAntennaBuffer(std::vector<SampleBuffer> channels) : channels_(std::move(channels)) {
        if (channels_.empty()) {
            throw Error(ErrorCode::MalformedBuffer, "at least one antenna is required");
        }
        for (const auto& ch : channels_) {
            if (ch.n_s() != channels_.front().n_s() || ch.smoothing() != channels_.front().smoothing()) {
                throw Error(ErrorCode::MalformedBuffer, "antenna buffers disagree on N_s or L");
            }
        }
    }

    [[nodiscard]] std::size_t antennas() const noexcept { return channels_.size(); }
    [[nodiscard]] std::size_t n_s() const noexcept { return channels_.front().n_s(); }
    [[nodiscard]] std::size_t smoothing() const noexcept { return channels_.front().smoothing(); }
    [[nodiscard]] const SampleBuffer& channel(std::size_t i) const { return channels_.at(i); }
    [[nodiscard]] const std::vector<SampleBuffer>& channels() const noexcept { return channels_; }

private:
    std::vector<SampleBuffer> channels_;
};

/// lambda(0) ... lambda(L-1).
struct AutocorrVector {
    std::vector<double> values;
    std::size_t n_s = 0;
};

enum class CovarianceStructure { toeplitz, block_toeplitz, symmetric };

struct CovarianceEstimate {
    Eigen::MatrixXd entries;
    CovarianceStructure structure = CovarianceStructure::symmetric;

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(entries.rows()); }
};

namespace detail {

/// Sums at or above this many terms switch to Neumaier-compensated accumulation.
inline constexpr std::size_t kCompensatedSumThreshold = 1'000'000;

/// (1/N_s) * sum_{m=0}^{N_s-1} a(m) * b(m - lag), both buffers addressed in x(n) indexing.
inline double lagged_product_mean(const SampleBuffer& a, const SampleBuffer& b, std::size_t lag) {
    const std::size_t n_s = a.n_s();
    const std::span<const double> xa = a.body();
    // b(m - lag) lives at storage index m - lag + L - 1.
    const std::span<const double> xb = b.samples().subspan(b.smoothing() - 1 - lag, n_s);
    if (n_s < kCompensatedSumThreshold) {
        double acc = 0.0;
        for (std::size_t m = 0; m < n_s; ++m) {
            acc += xa[m] * xb[m];
        }
        return acc / static_cast<double>(n_s);
    }
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t m = 0; m < n_s; ++m) {
        const double term = xa[m] * xb[m];
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term)) {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    return (sum + comp) / static_cast<double>(n_s);
}

}  // namespace detail

/// Sample autocorrelations lambda(l) = (1/N_s) sum_m x(m) x(m-l), l = 0..L-1.
[[nodiscard]] inline AutocorrVector compute_autocorrelations(const SampleBuffer& buffer) {
    AutocorrVector acf;
    acf.n_s = buffer.n_s();
    acf.values.resize(buffer.smoothing());
    for (std::size_t l = 0; l < buffer.smoothing(); ++l) {
        acf.values[l] = detail::lagged_product_mean(buffer, buffer, l);
    }
    return acf;
}

[[nodiscard]] inline CovarianceEstimate build_toeplitz_covariance(const AutocorrVector& acf) {
    if (acf.values.empty()) {
        throw Error(ErrorCode::MalformedBuffer, "empty autocorrelation vector");
    }
    if (!(acf.values.front() >= 0.0)) {
        throw Error(ErrorCode::MalformedBuffer, "lambda(0) must be non-negative");
    }
    const auto d = static_cast<Eigen::Index>(acf.values.size());
    CovarianceEstimate cov{Eigen::MatrixXd(d, d), CovarianceStructure::toeplitz};
    for (Eigen::Index n = 0; n < d; ++n) {
        for (Eigen::Index m = 0; m < d; ++m) {
            cov.entries(n, m) = acf.values[static_cast<std::size_t>(std::abs(n - m))];
        }
    }
    return cov;
}

/**
 * Block-Toeplitz ML x ML covariance for stacked antenna vectors
 * [x_1(n) ... x_M(n) x_1(n-1) ... x_M(n-L+1)].
 *
 * Entry ((i,a),(j,b)) with row index a*M + i is lambda_ij(a-b), where
 * lambda_ij(l) = (1/N_s) sum_m x_i(m) x_j(m-l) and lambda_ij(-l) = lambda_ji(l).
 * With M = 1 the result is bit-identical to build_toeplitz_covariance.
 */
[[nodiscard]] inline CovarianceEstimate compute_multiantenna_covariance(const MultiAntennaBuffer& buffer) {
    const std::size_t m_ant = buffer.antennas();
    const std::size_t lags = buffer.smoothing();
    if (m_ant == 1) {
        return build_toeplitz_covariance(compute_autocorrelations(buffer.channel(0)));
    }

    // cross[l][i][j] = lambda_ij(l), l >= 0
    std::vector<double> cross(lags * m_ant * m_ant);
    auto at = [&](std::size_t l, std::size_t i, std::size_t j) -> double& {
        return cross[(l * m_ant + i) * m_ant + j];
    };
    for (std::size_t l = 0; l < lags; ++l) {
        for (std::size_t i = 0; i < m_ant; ++i) {
            for (std::size_t j = 0; j < m_ant; ++j) {
                if (l == 0 && j < i) {
                    at(0, i, j) = at(0, j, i);
                    continue;
                }
                at(l, i, j) = detail::lagged_product_mean(buffer.channel(i), buffer.channel(j), l);
            }
        }
    }

    const auto d = static_cast<Eigen::Index>(m_ant * lags);
    CovarianceEstimate cov{Eigen::MatrixXd(d, d), CovarianceStructure::block_toeplitz};
    for (std::size_t a = 0; a < lags; ++a) {
        for (std::size_t i = 0; i < m_ant; ++i) {
            const auto row = static_cast<Eigen::Index>(a * m_ant + i);
            for (std::size_t b = 0; b < lags; ++b) {
                for (std::size_t j = 0; j < m_ant; ++j) {
                    const auto col = static_cast<Eigen::Index>(b * m_ant + j);
                    cov.entries(row, col) = (a >= b) ? at(a - b, i, j) : at(b - a, j, i);
                }
            }
        }
    }
    return cov;
}

}  // namespace covsense
