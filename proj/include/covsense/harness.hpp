#pragma once

// Seeded Monte Carlo engine: empirical Pfa/Pd, threshold calibration by simulation,
// and parameter sweeps.
//
// Trial t of sweep point p always draws from RngStream(point_seed(base_seed, domain, p), t),
// so results do not depend on thread count or scheduling, and aggregation is an integer
// count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "covsense/covariance.hpp"
#include "covsense/detectors.hpp"
#include "covsense/error.hpp"
#include "covsense/prewhiten.hpp"
#include "covsense/rng.hpp"
#include "covsense/sigmodels.hpp"
#include "covsense/theory.hpp"

namespace covsense {

enum class DetectorType { cav, frobenius, energy };
enum class ThresholdSource { analytic, monte_carlo, explicit_value };
enum class Hypothesis { h0, h1 };
enum class SweepAxis { snr, smoothing, n_s, doppler, antennas, pfa, noise_uncertainty };

struct ExperimentSpec {
    DetectorType detector = DetectorType::cav;
    SignalSpec signal;
    std::size_t antennas = 1;
    std::size_t sources = 1;
    /// > 0: every source reaches every antenna through independent Gaussian taps redrawn per trial.
    std::size_t channel_taps = 0;
    /// Used instead of random taps when set.
    std::optional<ChannelSpec> fixed_channel;
    double doppler_fd = 0.0;
    std::size_t smoothing = 10;
    std::size_t n_s = 50000;
    std::vector<double> snr_list;  // linear
    double pfa_target = 0.1;
    double noise_uncertainty_db = 0.0;
    double noise_power = 1.0;
    ThresholdSource threshold_source = ThresholdSource::analytic;
    double explicit_threshold = 0.0;
    /// Allow the single-antenna closed-form threshold with L -> ML for M > 1.
    bool analytic_ml = false;
    std::size_t trials = 1000;
    std::size_t calibration_trials = 2000;
    std::uint64_t base_seed = 1;
    /// Colours the receiver noise; `whiten` then applies the matching covariance transform.
    std::optional<FilterSpec> noise_filter;
    bool whiten = false;
    /// Worker threads; 0 picks the hardware concurrency.
    unsigned threads = 0;
};

struct TrialOutcome {
    std::size_t trial_index = 0;
    Hypothesis hypothesis = Hypothesis::h0;
    double statistic = 0.0;
    double threshold = 0.0;
    bool detected = false;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

struct SweepPoint {
    double axis_value = 0.0;
    double snr = 0.0;  // linear
    std::size_t smoothing = 0;
    std::size_t n_s = 0;
    std::size_t antennas = 1;
    double doppler_fd = 0.0;
    double pfa_target = 0.0;
    double noise_uncertainty_db = 0.0;
    Hypothesis hypothesis = Hypothesis::h0;
    std::size_t trials = 0;
    std::size_t detections = 0;
    double threshold = 0.0;
    double estimate = 0.0;
    double stderr_ = 0.0;
};

struct SweepResult {
    std::string detector;
    std::string signal;
    SweepAxis axis = SweepAxis::snr;
    std::uint64_t base_seed = 0;
    std::vector<SweepPoint> points;
};

[[nodiscard]] inline const char* to_string(SweepAxis axis) noexcept {
    switch (axis) {
        case SweepAxis::snr: return "snr";
        case SweepAxis::smoothing: return "L";
        case SweepAxis::n_s: return "Ns";
        case SweepAxis::doppler: return "doppler";
        case SweepAxis::antennas: return "M";
        case SweepAxis::pfa: return "pfa";
        case SweepAxis::noise_uncertainty: return "noise_uncertainty_db";
    }
    return "?";
}

[[nodiscard]] inline const char* to_string(SignalVariant variant) noexcept {
    switch (variant) {
        case SignalVariant::none: return "none";
        case SignalVariant::wireless_mic_fm: return "mic";
        case SignalVariant::bpsk_iid: return "bpsk";
    }
    return "?";
}

/// "cav", "frob", "energy", or "energy-<B>dB" when noise uncertainty is modelled.
[[nodiscard]] inline std::string detector_label(DetectorType detector, double noise_uncertainty_db) {
    switch (detector) {
        case DetectorType::cav: return "cav";
        case DetectorType::frobenius: return "frob";
        case DetectorType::energy: {
            if (noise_uncertainty_db == 0.0) {
                return "energy";
            }
            char buf[64];
            std::snprintf(buf, sizeof buf, "energy-%gdB", noise_uncertainty_db);
            return buf;
        }
    }
    return "?";
}

namespace detail {

enum class SeedDomain : std::uint64_t { estimate = 1, calibrate = 2 };

inline std::uint64_t point_seed(std::uint64_t base_seed, SeedDomain domain, std::uint64_t point) {
    return mix64(mix64(base_seed) ^ mix64((static_cast<std::uint64_t>(domain) << 40) ^ point));
}

enum SubstreamTag : std::uint64_t { kNoise = 1, kSignal = 2, kChannel = 3, kUncertainty = 4 };

/// Runs fn(i) for i in [0, count) on up to `threads` workers; rethrows the lowest-index failure.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    for (auto& err : errors) {
        if (err) {
            std::rethrow_exception(err);
        }
    }
}

inline void validate_spec(const ExperimentSpec& spec) {
    if (spec.trials < 1) {
        throw Error(ErrorCode::InvalidSpec, "trials must be at least 1");
    }
    if (spec.antennas < 1 || spec.sources < 1) {
        throw Error(ErrorCode::InvalidSpec, "need at least one antenna and one source");
    }
    if (spec.smoothing < 1 || spec.n_s < 1) {
        throw Error(ErrorCode::InvalidSpec, "L and N_s must be at least 1");
    }
    if (!(spec.noise_power > 0.0)) {
        throw Error(ErrorCode::InvalidSpec, "noise power must be positive");
    }
    if (!(spec.noise_uncertainty_db >= 0.0)) {
        throw Error(ErrorCode::InvalidSpec, "noise uncertainty must be non-negative");
    }
    if (!(spec.pfa_target > 0.0 && spec.pfa_target < 1.0)) {
        throw Error(ErrorCode::InvalidSpec, "target Pfa must lie in (0, 1)");
    }
    for (double snr : spec.snr_list) {
        if (!(snr >= 0.0)) {
            throw Error(ErrorCode::InvalidSpec, "SNR values must be non-negative");
        }
    }
    if (!(spec.doppler_fd >= 0.0 && spec.doppler_fd < 0.5)) {
        throw Error(ErrorCode::InvalidSpec, "Doppler rate must lie in [0, 0.5)");
    }
    if (spec.fixed_channel && spec.fixed_channel->antennas() != spec.antennas) {
        throw Error(ErrorCode::InvalidSpec, "fixed channel antenna count differs from M");
    }
    if (spec.whiten) {
        if (!spec.noise_filter) {
            throw Error(ErrorCode::InvalidSpec, "whitening requires a noise filter");
        }
        if (spec.antennas != 1 || spec.detector == DetectorType::energy) {
            throw Error(ErrorCode::InvalidSpec, "whitening applies to single-antenna covariance detectors");
        }
    }
}

/// Noiseless received signal per antenna, N_s + L - 1 samples each.
inline std::vector<std::vector<double>> received_signals(const ExperimentSpec& spec, RngStream& signal_rng,
                                                         RngStream& channel_rng) {
    const std::size_t total = spec.n_s + spec.smoothing - 1;
    const bool through_channel = spec.fixed_channel.has_value() || spec.channel_taps > 0;
    std::vector<std::vector<double>> out(spec.antennas, std::vector<double>(total, 0.0));

    for (std::size_t src = 0; src < spec.sources; ++src) {
        ChannelSpec channel;
        if (spec.fixed_channel) {
            channel = *spec.fixed_channel;
            channel.doppler_fd = spec.doppler_fd;
        } else if (through_channel) {
            channel = draw_gaussian_channel(spec.antennas, spec.channel_taps, channel_rng, spec.doppler_fd);
        }
        const std::size_t memory = through_channel ? channel.memory() : 0;
        std::vector<double> source;
        switch (spec.signal.variant) {
            case SignalVariant::wireless_mic_fm:
                source = gen_wireless_mic(total + memory, spec.signal, signal_rng);
                break;
            case SignalVariant::bpsk_iid:
                source = gen_bpsk_source(total + memory, signal_rng);
                break;
            case SignalVariant::none:
                throw Error(ErrorCode::InvalidSpec, "signal-present trial without a signal model");
        }
        for (std::size_t i = 0; i < spec.antennas; ++i) {
            if (through_channel) {
                const std::vector<double> rx = apply_channel(source, channel, i);
                for (std::size_t n = 0; n < total; ++n) {
                    out[i][n] += rx[n];
                }
            } else {
                for (std::size_t n = 0; n < total; ++n) {
                    out[i][n] += source[n];
                }
            }
        }
    }
    return out;
}

inline std::vector<double> receiver_noise(const ExperimentSpec& spec, RngStream& noise_rng) {
    const std::size_t total = spec.n_s + spec.smoothing - 1;
    if (!spec.noise_filter) {
        return gen_noise(total, spec.noise_power, noise_rng);
    }
    const std::vector<double> white = gen_noise(total + spec.noise_filter->order(), spec.noise_power, noise_rng);
    return apply_filter(white, *spec.noise_filter);
}

/// Everything a trial needs that is fixed for one sweep point.
struct TrialContext {
    const ExperimentSpec* spec = nullptr;
    Hypothesis hypothesis = Hypothesis::h0;
    double snr = 0.0;
    double threshold = 0.0;
    std::uint64_t seed = 0;
    std::optional<WhiteningTransform> whitening;
};

inline TrialOutcome run_trial(const TrialContext& ctx, std::size_t trial_index) {
    const ExperimentSpec& spec = *ctx.spec;
    const RngStream root(ctx.seed, trial_index);
    RngStream noise_rng = root.substream(kNoise);
    RngStream signal_rng = root.substream(kSignal);
    RngStream channel_rng = root.substream(kChannel);
    RngStream uncertainty_rng = root.substream(kUncertainty);

    std::vector<std::vector<double>> signals;
    double scale = 0.0;
    if (ctx.hypothesis == Hypothesis::h1 && ctx.snr > 0.0) {
        signals = received_signals(spec, signal_rng, channel_rng);
        double power = 0.0;
        for (const auto& s : signals) {
            power += mean_power(s);
        }
        scale = snr_scale(power / static_cast<double>(signals.size()), spec.noise_power, ctx.snr);
    }

    std::vector<SampleBuffer> channels;
    channels.reserve(spec.antennas);
    for (std::size_t i = 0; i < spec.antennas; ++i) {
        std::vector<double> x = receiver_noise(spec, noise_rng);
        if (scale != 0.0) {
            for (std::size_t n = 0; n < x.size(); ++n) {
                x[n] += scale * signals[i][n];
            }
        }
        channels.emplace_back(std::move(x), spec.n_s, spec.smoothing);
    }
    const MultiAntennaBuffer buffer(std::move(channels));

    TrialOutcome outcome;
    outcome.trial_index = trial_index;
    outcome.hypothesis = ctx.hypothesis;
    outcome.seed = ctx.seed;
    outcome.stream_id = trial_index;

    if (spec.detector == DetectorType::energy) {
        const double assumed = draw_noise_uncertainty(spec.noise_uncertainty_db, uncertainty_rng) * spec.noise_power;
        outcome.statistic = energy_statistic(buffer);
        outcome.threshold = ctx.threshold * assumed;
    } else {
        CovarianceEstimate cov = compute_multiantenna_covariance(buffer);
        if (ctx.whitening) {
            cov = apply_whitening(cov, *ctx.whitening);
        }
        const DetectorStatistics stats =
            spec.detector == DetectorType::cav ? cav_statistics(cov) : frobenius_statistics(cov);
        outcome.statistic = stats.ratio;
        outcome.threshold = ctx.threshold;
    }
    outcome.detected = outcome.statistic > outcome.threshold;
    return outcome;
}

inline TrialContext make_context(const ExperimentSpec& spec, Hypothesis hypothesis, double snr, double threshold,
                                 std::uint64_t seed) {
    TrialContext ctx;
    ctx.spec = &spec;
    ctx.hypothesis = hypothesis;
    ctx.snr = snr;
    ctx.threshold = threshold;
    ctx.seed = seed;
    if (spec.whiten) {
        ctx.whitening = whitening_transform(*spec.noise_filter, spec.smoothing);
    }
    return ctx;
}

/// Index of the empirical (1 - pfa) quantile in a sorted sample of size n.
inline std::size_t quantile_index(std::size_t n, double pfa) {
    const double pos = std::ceil((1.0 - pfa) * static_cast<double>(n) - 1e-9);
    const auto k = static_cast<std::ptrdiff_t>(pos) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(n) - 1));
}

}  // namespace detail

/// Every trial outcome for one point, ordered by trial index.
[[nodiscard]] inline std::vector<TrialOutcome> run_trials(const ExperimentSpec& spec, Hypothesis hypothesis, double snr,
                                                          double threshold, std::uint64_t point_index = 0) {
    detail::validate_spec(spec);
    if (hypothesis == Hypothesis::h1 && snr > 0.0 && spec.signal.variant == SignalVariant::none) {
        throw Error(ErrorCode::InvalidSpec, "signal-present trials need a signal model");
    }
    const detail::TrialContext ctx = detail::make_context(
        spec, hypothesis, snr, threshold, detail::point_seed(spec.base_seed, detail::SeedDomain::estimate, point_index));
    std::vector<TrialOutcome> outcomes(spec.trials);
    detail::parallel_for(spec.trials, spec.threads,
                         [&](std::size_t t) { outcomes[t] = detail::run_trial(ctx, t); });
    return outcomes;
}

/**
 * Noise-only statistics for calibration, drawn from a seed domain disjoint from the
 * estimation trials. Energy statistics are normalised by the nominal noise power.
 */
[[nodiscard]] inline std::vector<double> noise_only_statistics(const ExperimentSpec& spec, std::size_t trials) {
    ExperimentSpec h0 = spec;
    h0.trials = trials;
    h0.noise_uncertainty_db = 0.0;
    detail::validate_spec(h0);
    const detail::TrialContext ctx = detail::make_context(
        h0, Hypothesis::h0, 0.0, 0.0, detail::point_seed(h0.base_seed, detail::SeedDomain::calibrate, 0));
    std::vector<double> stats(trials);
    detail::parallel_for(trials, h0.threads, [&](std::size_t t) {
        const TrialOutcome outcome = detail::run_trial(ctx, t);
        stats[t] = h0.detector == DetectorType::energy ? outcome.statistic / h0.noise_power : outcome.statistic;
    });
    return stats;
}

/// Empirical (1 - pfa_target) quantile of the noise-only test statistic.
[[nodiscard]] inline double calibrate_threshold_mc(const ExperimentSpec& spec) {
    const std::size_t trials = spec.calibration_trials;
    if (trials < 1) {
        throw Error(ErrorCode::InvalidSpec, "calibration needs at least one trial");
    }
    std::vector<double> stats = noise_only_statistics(spec, trials);
    std::sort(stats.begin(), stats.end());
    return stats[detail::quantile_index(stats.size(), spec.pfa_target)];
}

[[nodiscard]] inline double calibrate_threshold_mc(DetectorType detector, std::size_t smoothing, std::size_t n_s,
                                                   std::size_t antennas, double pfa_target, std::size_t trials,
                                                   std::uint64_t base_seed, unsigned threads = 0) {
    ExperimentSpec spec;
    spec.detector = detector;
    spec.smoothing = smoothing;
    spec.n_s = n_s;
    spec.antennas = antennas;
    spec.pfa_target = pfa_target;
    spec.calibration_trials = trials;
    spec.base_seed = base_seed;
    spec.threads = threads;
    return calibrate_threshold_mc(spec);
}

/// Threshold for `spec` per its threshold_source. Energy thresholds are factors on the assumed noise power.
[[nodiscard]] inline double resolve_threshold(const ExperimentSpec& spec) {
    switch (spec.threshold_source) {
        case ThresholdSource::explicit_value:
            return spec.explicit_threshold;
        case ThresholdSource::monte_carlo:
            return calibrate_threshold_mc(spec);
        case ThresholdSource::analytic:
            break;
    }
    if (spec.detector == DetectorType::energy) {
        return energy_threshold_factor(spec.pfa_target, spec.n_s * spec.antennas);
    }
    if (spec.detector == DetectorType::frobenius) {
        throw Error(ErrorCode::InvalidSpec, "no closed-form threshold for the Frobenius detector");
    }
    if (spec.antennas > 1 && !spec.analytic_ml) {
        throw Error(ErrorCode::InvalidSpec, "closed-form multi-antenna threshold needs analytic_ml");
    }
    try {
        return cav_threshold(DetectionDesign{spec.smoothing * spec.antennas, spec.n_s, spec.pfa_target, 0.0});
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidSpec, e.what());
    }
}

namespace detail {

inline SweepPoint run_point(const ExperimentSpec& spec, Hypothesis hypothesis, double snr, double threshold,
                            std::uint64_t point_index) {
    const std::vector<TrialOutcome> outcomes = run_trials(spec, hypothesis, snr, threshold, point_index);
    SweepPoint point;
    point.snr = hypothesis == Hypothesis::h0 ? 0.0 : snr;
    point.smoothing = spec.smoothing;
    point.n_s = spec.n_s;
    point.antennas = spec.antennas;
    point.doppler_fd = spec.doppler_fd;
    point.pfa_target = spec.pfa_target;
    point.noise_uncertainty_db = spec.noise_uncertainty_db;
    point.hypothesis = hypothesis;
    point.trials = outcomes.size();
    point.threshold = threshold;
    point.detections = static_cast<std::size_t>(
        std::count_if(outcomes.begin(), outcomes.end(), [](const TrialOutcome& o) { return o.detected; }));
    point.estimate = static_cast<double>(point.detections) / static_cast<double>(point.trials);
    point.stderr_ = std::sqrt(point.estimate * (1.0 - point.estimate) / static_cast<double>(point.trials));
    return point;
}

}  // namespace detail

/// Empirical false-alarm rate over `trials` noise-only sensing events.
[[nodiscard]] inline SweepPoint estimate_pfa(const ExperimentSpec& spec) {
    detail::validate_spec(spec);
    return detail::run_point(spec, Hypothesis::h0, 0.0, resolve_threshold(spec), 0);
}

/// Empirical detection rate at one SNR (linear).
[[nodiscard]] inline SweepPoint estimate_pd(const ExperimentSpec& spec, double snr) {
    detail::validate_spec(spec);
    if (spec.signal.variant == SignalVariant::none) {
        throw Error(ErrorCode::InvalidSpec, "detection probability needs a signal model");
    }
    if (!(snr >= 0.0)) {
        throw Error(ErrorCode::InvalidSpec, "SNR must be non-negative");
    }
    return detail::run_point(spec, Hypothesis::h1, snr, resolve_threshold(spec), 0);
}

/**
 * One estimate per axis value. Thresholds are re-derived whenever L, N_s, M or the
 * target Pfa changes; each point draws from its own seed. The estimate is Pfa for
 * signal model `none`, Pd otherwise. Off-axis SNR comes from snr_list[0].
 */
[[nodiscard]] inline SweepResult run_sweep(const ExperimentSpec& spec, SweepAxis axis, const std::vector<double>& values) {
    detail::validate_spec(spec);
    if (values.empty()) {
        throw Error(ErrorCode::InvalidSpec, std::string("no values for sweep axis ") + to_string(axis));
    }
    const Hypothesis hypothesis = spec.signal.variant == SignalVariant::none ? Hypothesis::h0 : Hypothesis::h1;
    if (hypothesis == Hypothesis::h1 && axis != SweepAxis::snr && spec.snr_list.empty()) {
        throw Error(ErrorCode::InvalidSpec, "signal sweeps need an SNR");
    }

    SweepResult result;
    result.detector = detector_label(spec.detector, spec.noise_uncertainty_db);
    result.signal = to_string(spec.signal.variant);
    result.axis = axis;
    result.base_seed = spec.base_seed;

    std::map<std::tuple<std::size_t, std::size_t, std::size_t, double>, double> thresholds;
    for (std::size_t p = 0; p < values.size(); ++p) {
        const double value = values[p];
        ExperimentSpec point_spec = spec;
        double snr = spec.snr_list.empty() ? 0.0 : spec.snr_list.front();
        auto as_count = [&](double v) {
            if (!(v >= 1.0) || v != std::floor(v)) {
                throw Error(ErrorCode::InvalidSpec, std::string("axis ") + to_string(axis) + " needs positive integers");
            }
            return static_cast<std::size_t>(v);
        };
        switch (axis) {
            case SweepAxis::snr: snr = value; break;
            case SweepAxis::smoothing: point_spec.smoothing = as_count(value); break;
            case SweepAxis::n_s: point_spec.n_s = as_count(value); break;
            case SweepAxis::doppler: point_spec.doppler_fd = value; break;
            case SweepAxis::antennas: point_spec.antennas = as_count(value); break;
            case SweepAxis::pfa: point_spec.pfa_target = value; break;
            case SweepAxis::noise_uncertainty: point_spec.noise_uncertainty_db = value; break;
        }
        detail::validate_spec(point_spec);
        if (hypothesis == Hypothesis::h1 && !(snr >= 0.0)) {
            throw Error(ErrorCode::InvalidSpec, "SNR must be non-negative");
        }

        const auto key = std::make_tuple(point_spec.smoothing, point_spec.n_s, point_spec.antennas,
                                         point_spec.pfa_target);
        auto it = thresholds.find(key);
        if (it == thresholds.end()) {
            it = thresholds.emplace(key, resolve_threshold(point_spec)).first;
        }
        SweepPoint point = detail::run_point(point_spec, hypothesis, snr, it->second, p);
        point.axis_value = value;
        result.points.push_back(point);
    }
    return result;
}

}  // namespace covsense
