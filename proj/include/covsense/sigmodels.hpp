#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covsense/covariance.hpp"
#include "covsense/error.hpp"
#include "covsense/rng.hpp"
#include "covsense/theory.hpp"

namespace covsense {

enum class SignalVariant { none, wireless_mic_fm, bpsk_iid };

/// Source model. The FM fields apply to wireless_mic_fm only. The default low IF puts a
/// 200 kHz microphone channel at [0, 200 kHz] of a 6 MHz capture.
struct SignalSpec {
    SignalVariant variant = SignalVariant::none;
    double sample_rate_hz = 6e6;
    double if_center_hz = 1e5;
    double mod_tone_hz = 3900.0;
    double fm_deviation_hz = 15000.0;
};

/// Per-antenna FIR taps h_i(0..N_i) and a normalised Doppler rate (cycles/sample).
struct ChannelSpec {
    std::vector<std::vector<double>> taps_per_antenna;
    double doppler_fd = 0.0;

    [[nodiscard]] std::size_t antennas() const noexcept { return taps_per_antenna.size(); }

    /// N = max_i N_i, the longest channel memory.
    [[nodiscard]] std::size_t memory() const noexcept {
        std::size_t n = 0;
        for (const auto& taps : taps_per_antenna) {
            n = std::max(n, taps.empty() ? std::size_t{0} : taps.size() - 1);
        }
        return n;
    }
};

namespace detail {

inline void validate_channel(const ChannelSpec& channel) {
    if (channel.taps_per_antenna.empty()) {
        throw Error(ErrorCode::InvalidSpec, "channel needs at least one antenna");
    }
    for (const auto& taps : channel.taps_per_antenna) {
        if (taps.empty()) {
            throw Error(ErrorCode::InvalidSpec, "every antenna needs at least one channel tap");
        }
        for (double h : taps) {
            if (!std::isfinite(h)) {
                throw Error(ErrorCode::InvalidSpec, "non-finite channel tap");
            }
        }
    }
    if (!(channel.doppler_fd >= 0.0 && channel.doppler_fd < 0.5)) {
        throw Error(ErrorCode::InvalidSpec, "Doppler rate must lie in [0, 0.5)");
    }
}

inline double mean_power(std::span<const double> samples) {
    if (samples.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (double v : samples) {
        acc += v * v;
    }
    return acc / static_cast<double>(samples.size());
}

}  // namespace detail

/// iid N(0, noise_power) samples.
[[nodiscard]] inline std::vector<double> gen_noise(std::size_t count, double noise_power, RngStream& rng) {
    if (!(noise_power > 0.0)) {
        throw Error(ErrorCode::InvalidSpec, "noise power must be positive");
    }
    const double sigma = std::sqrt(noise_power);
    std::vector<double> out(count);
    for (double& v : out) {
        v = sigma * rng.normal();
    }
    return out;
}

/**
 * Tone-modulated FM carrier at a real IF:
 * cos(2 pi f_if n / f_s + (df / f_m) sin(2 pi f_m n / f_s) + phi0), phi0 ~ U[0, 2 pi).
 * Constant envelope, so the average power is 1/2.
 */
[[nodiscard]] inline std::vector<double> gen_wireless_mic(std::size_t count, const SignalSpec& spec, RngStream& rng) {
    if (spec.variant != SignalVariant::wireless_mic_fm) {
        throw Error(ErrorCode::InvalidSpec, "signal spec is not a wireless microphone");
    }
    if (!(spec.sample_rate_hz > 0.0) || !(spec.if_center_hz > 0.0) ||
        !(spec.if_center_hz < 0.5 * spec.sample_rate_hz)) {
        throw Error(ErrorCode::InvalidSpec, "IF must lie in (0, f_s / 2)");
    }
    if (!(spec.fm_deviation_hz >= 0.0) || !(spec.mod_tone_hz > 0.0)) {
        throw Error(ErrorCode::InvalidSpec, "need deviation >= 0 and a positive modulating tone");
    }
    const double phi0 = 2.0 * std::numbers::pi * rng.uniform01();
    const double carrier = 2.0 * std::numbers::pi * spec.if_center_hz / spec.sample_rate_hz;
    const double tone = 2.0 * std::numbers::pi * spec.mod_tone_hz / spec.sample_rate_hz;
    const double beta = spec.fm_deviation_hz / spec.mod_tone_hz;
    std::vector<double> out(count);
    for (std::size_t n = 0; n < count; ++n) {
        const double t = static_cast<double>(n);
        // Reduce the carrier phase before cos() to keep precision over long runs.
        const double carrier_phase = std::remainder(carrier * t, 2.0 * std::numbers::pi);
        out[n] = std::cos(carrier_phase + beta * std::sin(tone * t) + phi0);
    }
    return out;
}

/// iid equiprobable +/-1 symbols.
[[nodiscard]] inline std::vector<double> gen_bpsk_source(std::size_t count, RngStream& rng) {
    std::vector<double> out(count);
    for (double& v : out) {
        v = rng.coin() ? 1.0 : -1.0;
    }
    return out;
}

/// Independent zero-mean Gaussian taps with equal power 1/taps (unit total power on average).
[[nodiscard]] inline ChannelSpec draw_gaussian_channel(std::size_t antennas, std::size_t taps, RngStream& rng,
                                                       double doppler_fd = 0.0) {
    if (antennas == 0 || taps == 0) {
        throw Error(ErrorCode::InvalidSpec, "need at least one antenna and one tap");
    }
    ChannelSpec channel;
    channel.doppler_fd = doppler_fd;
    const double sigma = 1.0 / std::sqrt(static_cast<double>(taps));
    channel.taps_per_antenna.assign(antennas, std::vector<double>(taps));
    for (auto& row : channel.taps_per_antenna) {
        for (double& h : row) {
            h = sigma * rng.normal();
        }
    }
    return channel;
}

/**
 * Received signal at one antenna.
 *
 * With N = channel.memory(), source[c] holds s0(c - N), so output sample n is
 * sum_k h_i(k) s0(n - k) for n = 0 .. source.size() - N - 1. Every antenna of the
 * same channel therefore yields time-aligned outputs of equal length.
 *
 * For doppler_fd > 0, tap k (0-based, K taps) rotates as exp(j 2 pi n ((K-k)/K) f_d) and
 * the real part of the complex sum is returned. `force_time_variant` runs that path even
 * at f_d = 0.
 */
[[nodiscard]] inline std::vector<double> apply_channel(std::span<const double> source, const ChannelSpec& channel,
                                                       std::size_t antenna_index, bool force_time_variant = false) {
    detail::validate_channel(channel);
    if (antenna_index >= channel.antennas()) {
        throw Error(ErrorCode::InvalidSpec, "antenna index out of range");
    }
    const std::size_t memory = channel.memory();
    if (source.size() <= memory) {
        throw Error(ErrorCode::InvalidSpec, "source shorter than the channel memory");
    }
    const auto& taps = channel.taps_per_antenna[antenna_index];
    const std::size_t count = source.size() - memory;
    std::vector<double> out(count);

    const bool rotating = force_time_variant || channel.doppler_fd > 0.0;
    if (!rotating) {
        for (std::size_t n = 0; n < count; ++n) {
            double acc = 0.0;
            for (std::size_t k = 0; k < taps.size(); ++k) {
                acc += taps[k] * source[n + memory - k];
            }
            out[n] = acc;
        }
        return out;
    }

    const double num_taps = static_cast<double>(taps.size());
    std::vector<double> rates(taps.size());
    for (std::size_t k = 0; k < taps.size(); ++k) {
        rates[k] = 2.0 * std::numbers::pi * ((num_taps - static_cast<double>(k)) / num_taps) * channel.doppler_fd;
    }
    for (std::size_t n = 0; n < count; ++n) {
        const double t = static_cast<double>(n);
        double acc = 0.0;
        for (std::size_t k = 0; k < taps.size(); ++k) {
            acc += (taps[k] * std::cos(rates[k] * t)) * source[n + memory - k];
        }
        out[n] = acc;
    }
    return out;
}

/**
 * Stacked channel matrix of size ML x (N + L): row a*M + i carries h_i(k) in column a + k,
 * so the stacked received vector equals this matrix times [s0(n) ... s0(n-N-L+1)].
 * Shorter channels are zero-padded to N.
 */
[[nodiscard]] inline Eigen::MatrixXd build_stacked_channel_matrix(const ChannelSpec& channel, std::size_t smoothing) {
    detail::validate_channel(channel);
    if (channel.doppler_fd != 0.0) {
        throw Error(ErrorCode::InvalidSpec, "stacked channel matrix needs a time-invariant channel");
    }
    if (smoothing < 1) {
        throw Error(ErrorCode::InvalidSpec, "L must be at least 1");
    }
    const std::size_t m_ant = channel.antennas();
    const std::size_t memory = channel.memory();
    Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_ant * smoothing),
                                                    static_cast<Eigen::Index>(memory + smoothing));
    for (std::size_t a = 0; a < smoothing; ++a) {
        for (std::size_t i = 0; i < m_ant; ++i) {
            const auto& taps = channel.taps_per_antenna[i];
            for (std::size_t k = 0; k < taps.size(); ++k) {
                stacked(static_cast<Eigen::Index>(a * m_ant + i), static_cast<Eigen::Index>(a + k)) = taps[k];
            }
        }
    }
    return stacked;
}

/// Amplitude factor that brings a signal of power `signal_power` to target_snr * noise_power.
[[nodiscard]] inline double snr_scale(double signal_power, double noise_power, double target_snr) {
    if (target_snr == 0.0) {
        return 0.0;
    }
    if (!(signal_power > 0.0)) {
        throw Error(ErrorCode::ZeroSignal, "cannot reach a positive SNR with a zero-power signal");
    }
    return std::sqrt(target_snr * noise_power / signal_power);
}

/**
 * x(n) = c s(n) + eta(n): scales `signal` (N_s + L - 1 samples) so its empirical power is
 * target_snr * noise_power, then adds fresh noise. target_snr = 0 yields pure noise.
 */
[[nodiscard]] inline SampleBuffer mix_at_snr(std::span<const double> signal, std::size_t n_s, std::size_t smoothing,
                                             double noise_power, double target_snr, RngStream& rng) {
    if (!(target_snr >= 0.0) || !(noise_power > 0.0)) {
        throw Error(ErrorCode::InvalidSpec, "need SNR >= 0 and a positive noise power");
    }
    const std::size_t total = n_s + smoothing - 1;
    std::vector<double> out = gen_noise(total, noise_power, rng);
    if (target_snr > 0.0) {
        if (signal.size() != total) {
            throw Error(ErrorCode::MalformedBuffer, "signal length must be N_s + L - 1");
        }
        const double scale = snr_scale(detail::mean_power(signal), noise_power, target_snr);
        for (std::size_t n = 0; n < total; ++n) {
            out[n] += scale * signal[n];
        }
    }
    return SampleBuffer(std::move(out), n_s, smoothing);
}

/// Multi-antenna mixing with one common scale, so the per-antenna average signal power
/// equals target_snr * noise_power and relative channel gains survive.
[[nodiscard]] inline MultiAntennaBuffer mix_at_snr(const std::vector<std::vector<double>>& signals, std::size_t n_s,
                                                   std::size_t smoothing, double noise_power, double target_snr,
                                                   RngStream& rng) {
    if (signals.empty()) {
        throw Error(ErrorCode::InvalidSpec, "at least one antenna signal is required");
    }
    if (!(target_snr >= 0.0) || !(noise_power > 0.0)) {
        throw Error(ErrorCode::InvalidSpec, "need SNR >= 0 and a positive noise power");
    }
    const std::size_t total = n_s + smoothing - 1;
    double scale = 0.0;
    if (target_snr > 0.0) {
        double power = 0.0;
        for (const auto& s : signals) {
            if (s.size() != total) {
                throw Error(ErrorCode::MalformedBuffer, "signal length must be N_s + L - 1");
            }
            power += detail::mean_power(s);
        }
        scale = snr_scale(power / static_cast<double>(signals.size()), noise_power, target_snr);
    }
    std::vector<SampleBuffer> channels;
    channels.reserve(signals.size());
    for (const auto& s : signals) {
        std::vector<double> out = gen_noise(total, noise_power, rng);
        if (scale != 0.0) {
            for (std::size_t n = 0; n < total; ++n) {
                out[n] += scale * s[n];
            }
        }
        channels.emplace_back(std::move(out), n_s, smoothing);
    }
    return MultiAntennaBuffer(std::move(channels));
}

/**
 * Normalised lag correlations of a noiseless signal, alpha_l for l = 1..L-1.
 *
 * lambda_s(l) is normalised by the geometric mean of the energies of the two windows it
 * pairs, which equals lambda_s(0) for a stationary signal and keeps |alpha_l| <= 1.
 */
[[nodiscard]] inline CorrelationProfile estimate_alpha_profile(std::span<const double> signal, std::size_t smoothing) {
    if (smoothing < 1 || signal.size() < smoothing) {
        throw Error(ErrorCode::MalformedBuffer, "signal shorter than L");
    }
    const SampleBuffer buffer = SampleBuffer::from_samples(std::vector<double>(signal.begin(), signal.end()), smoothing);
    const AutocorrVector acf = compute_autocorrelations(buffer);
    if (!(acf.values[0] > 0.0)) {
        throw Error(ErrorCode::ZeroSignal, "signal has zero power");
    }
    const std::size_t n_s = buffer.n_s();
    CorrelationProfile profile;
    profile.alphas.resize(smoothing - 1);
    for (std::size_t l = 1; l < smoothing; ++l) {
        double lagged_energy = 0.0;
        for (std::size_t m = 0; m < n_s; ++m) {
            const double v = buffer.at(static_cast<std::ptrdiff_t>(m) - static_cast<std::ptrdiff_t>(l));
            lagged_energy += v * v;
        }
        lagged_energy /= static_cast<double>(n_s);
        const double norm = std::sqrt(acf.values[0] * lagged_energy);
        profile.alphas[l - 1] = norm > 0.0 ? acf.values[l] / norm : 0.0;
    }
    return profile;
}

/// alpha = 10^(U/10), U ~ U[-B, B]: the detector's noise-power misestimate for one event.
[[nodiscard]] inline double draw_noise_uncertainty(double bound_db, RngStream& rng) {
    if (!(bound_db >= 0.0)) {
        throw Error(ErrorCode::InvalidSpec, "noise uncertainty bound must be non-negative");
    }
    if (bound_db == 0.0) {
        return 1.0;
    }
    return db_to_linear(rng.uniform(-bound_db, bound_db));
}

}  // namespace covsense
