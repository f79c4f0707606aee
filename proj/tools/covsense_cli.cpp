// covsense: covariance-based spectrum sensing from the command line.
//
//   covsense detect    --in FILE --L 10 (--pfa 0.1 | --threshold 1.04) [--detector cav|frob]
//   covsense theory    --pfa 0.1 --L 10 --Ns 50000 [--pd 0.9 --snr-db -20 --alpha-file FILE]
//   covsense calibrate --detector cav --L 10 --Ns 50000 --pfa 0.1 --trials 2000
//   covsense simulate  --signal mic --snr-db -26:-14:2 --out pd.csv | --preset fig1
//   covsense generate  --signal mic --snr-db -20 --L 10 --Ns 50000 --out x.txt
//
// Exit status: 0 signal absent, 10 signal present, 2 usage, 3 data, 4 numeric/domain.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covsense/covsense.hpp"

namespace cs = covsense;

namespace {

constexpr int kExitAbsent = 0;
constexpr int kExitPresent = 10;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(cs::ErrorCode code) {
    switch (code) {
        case cs::ErrorCode::Io:
        case cs::ErrorCode::MalformedBuffer:
        case cs::ErrorCode::AllZeroInput:
            return kExitData;
        case cs::ErrorCode::InvalidSpec:
            return kExitUsage;
        default:
            return kExitNumeric;
    }
}

void print_kv(const std::string& key, double value) { std::printf("%s=%.17g\n", key.c_str(), value); }
void print_kv(const std::string& key, std::uint64_t value) {
    std::printf("%s=%llu\n", key.c_str(), static_cast<unsigned long long>(value));
}
void print_kv(const std::string& key, const std::string& value) { std::printf("%s=%s\n", key.c_str(), value.c_str()); }

/// "a:b:step" (inclusive, tolerant of roundoff) or "v1,v2,...".
std::vector<double> parse_values(const std::string& text) {
    auto to_double = [&](const std::string& token) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != token.size()) {
            throw cs::Error(cs::ErrorCode::InvalidSpec, "cannot parse value '" + token + "'");
        }
        return v;
    };
    std::vector<double> out;
    if (text.empty()) {
        return out;
    }
    const auto first = text.find(':');
    if (first != std::string::npos) {
        const auto second = text.find(':', first + 1);
        if (second == std::string::npos) {
            throw cs::Error(cs::ErrorCode::InvalidSpec, "range must be a:b:step");
        }
        const double a = to_double(text.substr(0, first));
        const double b = to_double(text.substr(first + 1, second - first - 1));
        const double step = to_double(text.substr(second + 1));
        if (!(step != 0.0) || (b - a) / step < 0.0) {
            throw cs::Error(cs::ErrorCode::InvalidSpec, "range step does not reach the end point");
        }
        const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(a + static_cast<double>(i) * step);
        }
        return out;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto end = comma == std::string::npos ? text.size() : comma;
        out.push_back(to_double(text.substr(start, end - start)));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

cs::DetectorType parse_detector(const std::string& name) {
    if (name == "cav") {
        return cs::DetectorType::cav;
    }
    if (name == "frob") {
        return cs::DetectorType::frobenius;
    }
    if (name == "energy") {
        return cs::DetectorType::energy;
    }
    throw cs::Error(cs::ErrorCode::InvalidSpec, "unknown detector '" + name + "'");
}

cs::SignalVariant parse_signal(const std::string& name) {
    if (name == "mic") {
        return cs::SignalVariant::wireless_mic_fm;
    }
    if (name == "bpsk") {
        return cs::SignalVariant::bpsk_iid;
    }
    if (name == "none") {
        return cs::SignalVariant::none;
    }
    throw cs::Error(cs::ErrorCode::InvalidSpec, "unknown signal '" + name + "'");
}

cs::SweepAxis parse_axis(const std::string& name) {
    for (auto axis : {cs::SweepAxis::snr, cs::SweepAxis::smoothing, cs::SweepAxis::n_s, cs::SweepAxis::doppler,
                      cs::SweepAxis::antennas, cs::SweepAxis::pfa, cs::SweepAxis::noise_uncertainty}) {
        if (name == cs::to_string(axis)) {
            return axis;
        }
    }
    throw cs::Error(cs::ErrorCode::InvalidSpec, "unknown sweep axis '" + name + "'");
}

// ---------------------------------------------------------------- detect

struct DetectArgs {
    std::string in;
    bool binary = false;
    std::size_t smoothing = 0;
    std::optional<double> threshold;
    std::optional<double> pfa;
    std::string detector = "cav";
    std::string whiten_filter;
};

int run_detect(const DetectArgs& a) {
    if (a.threshold.has_value() == a.pfa.has_value()) {
        throw cs::Error(cs::ErrorCode::InvalidSpec, "give exactly one of --threshold and --pfa");
    }
    const cs::DetectorType detector = parse_detector(a.detector);
    if (detector == cs::DetectorType::energy) {
        throw cs::Error(cs::ErrorCode::InvalidSpec, "detect supports cav and frob");
    }
    const cs::SampleBuffer buffer = cs::SampleBuffer::from_samples(cs::io::read_samples(a.in, a.binary), a.smoothing);

    cs::CovarianceEstimate cov = cs::build_toeplitz_covariance(cs::compute_autocorrelations(buffer));
    if (!a.whiten_filter.empty()) {
        cov = cs::apply_whitening(cov, cs::whitening_transform(cs::io::read_filter_taps(a.whiten_filter), a.smoothing));
    }
    const cs::DetectorStatistics stats =
        detector == cs::DetectorType::cav ? cs::cav_statistics(cov) : cs::frobenius_statistics(cov);

    double threshold = 0.0;
    if (a.threshold) {
        threshold = *a.threshold;
    } else if (detector == cs::DetectorType::cav) {
        threshold = cs::cav_threshold({a.smoothing, buffer.n_s(), *a.pfa, 0.0});
    } else {
        throw cs::Error(cs::ErrorCode::InvalidDesign, "frob has no closed-form threshold; pass --threshold");
    }
    const cs::Decision decision = cs::decide(stats, threshold);
    print_kv("T_num", stats.t_num);
    print_kv("T_den", stats.t_den);
    print_kv("ratio", stats.ratio);
    print_kv("threshold", threshold);
    print_kv("Ns", static_cast<std::uint64_t>(buffer.n_s()));
    print_kv("verdict", decision.present ? "present" : "absent");
    return decision.present ? kExitPresent : kExitAbsent;
}

// ---------------------------------------------------------------- theory

struct TheoryArgs {
    double pfa = 0.1;
    std::size_t smoothing = 10;
    std::size_t n_s = 50000;
    std::optional<double> pd;
    std::optional<double> snr_db;
    std::string alpha_file;
};

int run_theory(const TheoryArgs& a) {
    const double gamma1 = cs::cav_threshold({a.smoothing, a.n_s, a.pfa, 0.0});
    print_kv("gamma1", gamma1);
    print_kv("ratio_h0", cs::predict_ratio_h0(a.smoothing, a.n_s));

    std::optional<cs::CorrelationProfile> profile;
    std::optional<double> upsilon;
    if (!a.alpha_file.empty()) {
        profile = cs::io::read_alpha_profile(a.alpha_file);
        upsilon = cs::correlation_strength(*profile, a.smoothing);
        print_kv("upsilon", *upsilon);
    }
    const std::optional<double> snr = a.snr_db ? std::optional<double>(cs::db_to_linear(*a.snr_db)) : std::nullopt;
    if (snr && upsilon) {
        print_kv("predicted_pd", cs::cav_pd(gamma1, *snr, *upsilon, a.n_s));
    }
    if (a.pd) {
        if (profile) {
            std::vector<std::size_t> candidates;
            for (std::size_t L = 2; L <= profile->alphas.size() + 1; ++L) {
                candidates.push_back(L);
            }
            const auto source = [&](std::size_t) { return *profile; };
            const auto best = cs::best_smoothing_factor(*a.pd, a.pfa, source, candidates, snr.value_or(1.0));
            if (snr) {
                print_kv("Nc", cs::required_samples_cav(*a.pd, a.pfa, a.smoothing, *upsilon, *snr));
            }
            print_kv("advantage_boundary", cs::cav_advantage_boundary(*a.pd, a.pfa, a.smoothing));
            print_kv("cav_advantage", cs::cav_advantage(*a.pd, a.pfa, a.smoothing, *upsilon) ? "true" : "false");
            print_kv("best_L", static_cast<std::uint64_t>(best.smoothing));
        }
        if (snr) {
            print_kv("Ne", cs::required_samples_energy(*a.pd, a.pfa, *snr));
        }
    }
    return 0;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
    std::string detector = "cav";
    std::size_t smoothing = 10;
    std::size_t n_s = 50000;
    std::size_t antennas = 1;
    double pfa = 0.1;
    std::size_t trials = 2000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

int run_calibrate(const CalibrateArgs& a) {
    const cs::DetectorType detector = parse_detector(a.detector);
    const double mc =
        cs::calibrate_threshold_mc(detector, a.smoothing, a.n_s, a.antennas, a.pfa, a.trials, a.seed, a.threads);
    print_kv("mc_threshold", mc);
    if (detector == cs::DetectorType::cav && a.antennas == 1) {
        print_kv("analytic_threshold", cs::cav_threshold({a.smoothing, a.n_s, a.pfa, 0.0}));
    }
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string preset;
    std::string detector = "cav";
    std::string signal = "mic";
    std::string snr_db;
    std::string smoothing = "10";
    std::string n_s = "50000";
    std::string antennas = "1";
    std::string pfa = "0.1";
    std::string noise_uncertainty_db = "0";
    std::string doppler = "0";
    std::string sweep = "snr";
    std::size_t trials = 1000;
    std::size_t calibration_trials = 2000;
    std::size_t channel_taps = 0;
    std::size_t sources = 1;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    bool analytic_ml = false;
    bool mc_threshold = false;
    std::optional<double> threshold;
    std::string noise_filter;
    bool whiten = false;
    std::string out;
};

struct Job {
    cs::ExperimentSpec spec;
    cs::SweepAxis axis = cs::SweepAxis::snr;
    std::vector<double> values;  // SNR axis values in dB
};

cs::SweepResult run_job(const Job& job) {
    std::vector<double> values = job.values;
    if (job.axis == cs::SweepAxis::snr) {
        for (double& v : values) {
            v = cs::db_to_linear(v);
        }
    }
    cs::SweepResult r = cs::run_sweep(job.spec, job.axis, values);
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        r.points[i].axis_value = job.values[i];
    }
    return r;
}

std::vector<double> range_db(double from, double to, double step) {
    std::vector<double> v;
    for (double x = from; x <= to + 1e-9; x += step) {
        v.push_back(x);
    }
    return v;
}

std::vector<Job> preset_jobs(const std::string& name, const SimulateArgs& a) {
    cs::ExperimentSpec base;
    base.trials = a.trials;
    base.calibration_trials = a.calibration_trials;
    base.base_seed = a.seed;
    base.threads = a.threads;

    cs::ExperimentSpec mic = base;
    mic.signal.variant = cs::SignalVariant::wireless_mic_fm;
    mic.smoothing = 10;
    mic.n_s = 50000;

    cs::ExperimentSpec multi = base;
    multi.signal.variant = cs::SignalVariant::bpsk_iid;
    multi.channel_taps = 5;
    multi.smoothing = 8;
    multi.n_s = 25000;
    multi.threshold_source = cs::ThresholdSource::monte_carlo;

    const auto with_detector = [](cs::ExperimentSpec s, cs::DetectorType d, double b = 0.0) {
        s.detector = d;
        s.noise_uncertainty_db = b;
        return s;
    };

    std::vector<Job> jobs;
    if (name == "table1") {
        cs::ExperimentSpec h0 = base;
        h0.signal.variant = cs::SignalVariant::none;
        jobs.push_back({h0, cs::SweepAxis::noise_uncertainty, {0.0}});
        for (double b : {0.0, 0.5, 1.0, 1.5, 2.0}) {
            jobs.push_back({with_detector(h0, cs::DetectorType::energy, b), cs::SweepAxis::noise_uncertainty, {b}});
        }
    } else if (name == "fig1") {
        const auto snrs = range_db(-26.0, -14.0, 2.0);
        jobs.push_back({mic, cs::SweepAxis::snr, snrs});
        for (double b : {0.0, 0.5, 1.0, 1.5, 2.0}) {
            jobs.push_back({with_detector(mic, cs::DetectorType::energy, b), cs::SweepAxis::snr, snrs});
        }
    } else if (name == "fig2") {
        mic.snr_list = {cs::db_to_linear(-20.0)};
        const std::vector<double> pfas{0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4};
        jobs.push_back({mic, cs::SweepAxis::pfa, pfas});
        jobs.push_back({with_detector(mic, cs::DetectorType::energy), cs::SweepAxis::pfa, pfas});
    } else if (name == "fig3") {
        mic.snr_list = {cs::db_to_linear(-20.0)};
        mic.pfa_target = 0.01;
        const std::vector<double> sizes{10000, 20000, 30000, 40000, 50000, 60000, 80000, 100000};
        jobs.push_back({mic, cs::SweepAxis::n_s, sizes});
        jobs.push_back({with_detector(mic, cs::DetectorType::energy), cs::SweepAxis::n_s, sizes});
    } else if (name == "fig4") {
        mic.snr_list = {cs::db_to_linear(-20.0)};
        mic.pfa_target = 0.01;
        jobs.push_back({mic, cs::SweepAxis::smoothing, {4, 6, 8, 10, 12, 14}});
    } else if (name == "fig6" || name == "fig8") {
        if (name == "fig8") {
            multi.sources = 3;
        }
        for (std::size_t m : {1u, 2u, 4u}) {
            cs::ExperimentSpec s = multi;
            s.antennas = m;
            jobs.push_back({s, cs::SweepAxis::snr, range_db(-24.0, -8.0, 2.0)});
        }
    } else if (name == "fig7") {
        multi.antennas = 2;
        for (double fd : {0.0, 1e-4, 1e-3, 5e-3, 1e-2}) {
            cs::ExperimentSpec s = multi;
            s.doppler_fd = fd;
            jobs.push_back({s, cs::SweepAxis::snr, range_db(-24.0, -8.0, 2.0)});
        }
    } else {
        throw cs::Error(cs::ErrorCode::InvalidSpec, "unknown preset '" + name + "'");
    }
    return jobs;
}

Job custom_job(const SimulateArgs& a) {
    Job job;
    job.axis = parse_axis(a.sweep);
    cs::ExperimentSpec& s = job.spec;
    s.detector = parse_detector(a.detector);
    s.signal.variant = parse_signal(a.signal);
    s.trials = a.trials;
    s.calibration_trials = a.calibration_trials;
    s.channel_taps = a.channel_taps;
    s.sources = a.sources;
    s.base_seed = a.seed;
    s.threads = a.threads;
    s.analytic_ml = a.analytic_ml;
    if (a.threshold) {
        s.threshold_source = cs::ThresholdSource::explicit_value;
        s.explicit_threshold = *a.threshold;
    } else if (a.mc_threshold) {
        s.threshold_source = cs::ThresholdSource::monte_carlo;
    }
    if (!a.noise_filter.empty()) {
        s.noise_filter = cs::io::read_filter_taps(a.noise_filter);
    }
    s.whiten = a.whiten;

    // Each axis flag may carry a list; only the swept one may hold more than one value.
    struct Field {
        cs::SweepAxis axis;
        const std::string* text;
        const char* flag;
    };
    const Field fields[] = {
        {cs::SweepAxis::snr, &a.snr_db, "--snr-db"},
        {cs::SweepAxis::smoothing, &a.smoothing, "--L"},
        {cs::SweepAxis::n_s, &a.n_s, "--Ns"},
        {cs::SweepAxis::antennas, &a.antennas, "--M"},
        {cs::SweepAxis::pfa, &a.pfa, "--pfa"},
        {cs::SweepAxis::noise_uncertainty, &a.noise_uncertainty_db, "--noise-uncertainty-db"},
        {cs::SweepAxis::doppler, &a.doppler, "--doppler"},
    };
    for (const Field& f : fields) {
        const std::vector<double> values = parse_values(*f.text);
        if (f.axis == job.axis) {
            if (values.empty()) {
                throw cs::Error(cs::ErrorCode::InvalidSpec, std::string("no values given for ") + f.flag);
            }
            job.values = values;
            continue;
        }
        if (values.size() > 1) {
            throw cs::Error(cs::ErrorCode::InvalidSpec, std::string(f.flag) + " takes one value unless swept");
        }
        if (values.empty()) {
            continue;
        }
        const double v = values.front();
        const auto count = [&] {
            if (!(v >= 1.0) || v != std::floor(v)) {
                throw cs::Error(cs::ErrorCode::InvalidSpec, std::string(f.flag) + " needs a positive integer");
            }
            return static_cast<std::size_t>(v);
        };
        switch (f.axis) {
            case cs::SweepAxis::snr: s.snr_list = {cs::db_to_linear(v)}; break;
            case cs::SweepAxis::smoothing: s.smoothing = count(); break;
            case cs::SweepAxis::n_s: s.n_s = count(); break;
            case cs::SweepAxis::antennas: s.antennas = count(); break;
            case cs::SweepAxis::pfa: s.pfa_target = v; break;
            case cs::SweepAxis::noise_uncertainty: s.noise_uncertainty_db = v; break;
            case cs::SweepAxis::doppler: s.doppler_fd = v; break;
        }
    }
    return job;
}

int run_simulate(const SimulateArgs& a) {
    const std::vector<Job> jobs = a.preset.empty() ? std::vector<Job>{custom_job(a)} : preset_jobs(a.preset, a);
    std::vector<cs::SweepResult> results;
    results.reserve(jobs.size());
    for (const Job& job : jobs) {
        results.push_back(run_job(job));
    }
    if (a.out.empty() || a.out == "-") {
        cs::io::write_sweep_csv(std::cout, results);
        std::cout.flush();
    } else {
        std::ofstream out(a.out);
        if (!out) {
            throw cs::Error(cs::ErrorCode::Io, "cannot write " + a.out);
        }
        cs::io::write_sweep_csv(out, results);
    }
    return 0;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::string signal = "mic";
    double snr_db = -20.0;
    std::size_t smoothing = 10;
    std::size_t n_s = 50000;
    double noise_power = 1.0;
    std::uint64_t seed = 1;
    bool binary = false;
    std::string out;
};

int run_generate(const GenerateArgs& a) {
    cs::ExperimentSpec spec;
    spec.signal.variant = parse_signal(a.signal);
    spec.smoothing = a.smoothing;
    spec.n_s = a.n_s;
    spec.noise_power = a.noise_power;
    spec.base_seed = a.seed;
    spec.trials = 1;
    const bool present = spec.signal.variant != cs::SignalVariant::none;
    const cs::RngStream root(cs::detail::point_seed(a.seed, cs::detail::SeedDomain::estimate, 0), 0);
    auto signal_rng = root.substream(cs::detail::kSignal);
    auto channel_rng = root.substream(cs::detail::kChannel);
    auto noise_rng = root.substream(cs::detail::kNoise);
    std::vector<double> signal;
    if (present) {
        signal = cs::detail::received_signals(spec, signal_rng, channel_rng).front();
    }
    const cs::SampleBuffer buffer =
        cs::mix_at_snr(signal, a.n_s, a.smoothing, a.noise_power, present ? cs::db_to_linear(a.snr_db) : 0.0, noise_rng);
    if (a.binary) {
        cs::io::write_samples_binary(a.out, buffer.samples());
    } else {
        cs::io::write_samples_text(a.out, buffer.samples());
    }
    const auto stats = cs::cav_statistics(cs::compute_autocorrelations(buffer));
    print_kv("samples", static_cast<std::uint64_t>(buffer.samples().size()));
    print_kv("ratio", stats.ratio);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Covariance-based spectrum sensing"};
    app.require_subcommand(1);

    DetectArgs det;
    auto* detect = app.add_subcommand("detect", "run a covariance detector on a sample file");
    detect->add_option("--in", det.in, "sample file (text, one value per line)")->required();
    detect->add_flag("--binary", det.binary, "input is little-endian float64");
    detect->add_option("--L", det.smoothing, "smoothing factor")->required()->check(CLI::PositiveNumber);
    detect->add_option("--threshold", det.threshold, "explicit threshold on T_num / T_den");
    detect->add_option("--pfa", det.pfa, "target false-alarm probability (closed-form threshold)");
    detect->add_option("--detector", det.detector, "cav or frob")->check(CLI::IsMember({"cav", "frob"}));
    detect->add_option("--whiten-filter", det.whiten_filter, "receive-filter taps to whiten against");

    TheoryArgs th;
    auto* theory = app.add_subcommand("theory", "evaluate the closed-form design formulas");
    theory->add_option("--pfa", th.pfa, "target false-alarm probability")->required();
    theory->add_option("--L", th.smoothing, "smoothing factor")->required()->check(CLI::PositiveNumber);
    theory->add_option("--Ns", th.n_s, "samples")->required()->check(CLI::PositiveNumber);
    theory->add_option("--pd", th.pd, "target detection probability");
    theory->add_option("--snr-db", th.snr_db, "SNR in dB");
    theory->add_option("--alpha-file", th.alpha_file, "correlation profile, lines 'l alpha_l'");

    CalibrateArgs cal;
    auto* calibrate = app.add_subcommand("calibrate", "Monte Carlo threshold for a target Pfa");
    calibrate->add_option("--detector", cal.detector, "cav, frob or energy")
        ->check(CLI::IsMember({"cav", "frob", "energy"}));
    calibrate->add_option("--L", cal.smoothing, "smoothing factor")->required()->check(CLI::PositiveNumber);
    calibrate->add_option("--Ns", cal.n_s, "samples per antenna")->required()->check(CLI::PositiveNumber);
    calibrate->add_option("--M", cal.antennas, "antennas")->check(CLI::PositiveNumber);
    calibrate->add_option("--pfa", cal.pfa, "target false-alarm probability")->required();
    calibrate->add_option("--trials", cal.trials, "noise-only trials")->check(CLI::PositiveNumber);
    calibrate->add_option("--seed", cal.seed, "base seed");
    calibrate->add_option("--threads", cal.threads, "worker threads, 0 = all cores");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo sweep written as CSV");
    simulate->add_option("--preset", sim.preset, "table1, fig1, fig2, fig3, fig4, fig6, fig7 or fig8")
        ->check(CLI::IsMember({"table1", "fig1", "fig2", "fig3", "fig4", "fig6", "fig7", "fig8"}));
    simulate->add_option("--detector", sim.detector, "cav, frob or energy");
    simulate->add_option("--signal", sim.signal, "mic, bpsk or none");
    simulate->add_option("--snr-db", sim.snr_db, "SNR in dB: a:b:step or a,b,...");
    simulate->add_option("--L", sim.smoothing, "smoothing factor(s)");
    simulate->add_option("--Ns", sim.n_s, "samples per antenna");
    simulate->add_option("--M", sim.antennas, "antennas");
    simulate->add_option("--pfa", sim.pfa, "target false-alarm probability");
    simulate->add_option("--noise-uncertainty-db", sim.noise_uncertainty_db, "energy-detector noise uncertainty B");
    simulate->add_option("--doppler", sim.doppler, "normalised Doppler rate");
    simulate->add_option("--sweep", sim.sweep, "axis: snr, L, Ns, M, pfa, doppler, noise_uncertainty_db");
    simulate->add_option("--trials", sim.trials, "trials per point")->check(CLI::PositiveNumber);
    simulate->add_option("--calibration-trials", sim.calibration_trials, "noise-only trials for MC thresholds")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--channel-taps", sim.channel_taps, "Gaussian channel taps per antenna (0 = none)");
    simulate->add_option("--sources", sim.sources, "independent sources")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed, "base seed");
    simulate->add_option("--threads", sim.threads, "worker threads, 0 = all cores");
    simulate->add_flag("--analytic-ml", sim.analytic_ml, "closed-form threshold with L -> ML for M > 1");
    auto* mc_flag = simulate->add_flag("--mc-threshold", sim.mc_threshold, "calibrate thresholds by Monte Carlo");
    simulate->add_option("--threshold", sim.threshold, "explicit threshold")->excludes(mc_flag);
    simulate->add_option("--noise-filter", sim.noise_filter, "colour the noise with these taps");
    simulate->add_flag("--whiten", sim.whiten, "whiten against --noise-filter");
    simulate->add_option("--out", sim.out, "CSV path, '-' or empty for stdout");

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "write one received buffer (N_s + L - 1 samples)");
    generate->add_option("--signal", gen.signal, "mic, bpsk or none")->check(CLI::IsMember({"mic", "bpsk", "none"}));
    generate->add_option("--snr-db", gen.snr_db, "SNR in dB");
    generate->add_option("--L", gen.smoothing, "smoothing factor")->check(CLI::PositiveNumber);
    generate->add_option("--Ns", gen.n_s, "samples")->check(CLI::PositiveNumber);
    generate->add_option("--noise-power", gen.noise_power, "noise power")->check(CLI::PositiveNumber);
    generate->add_option("--seed", gen.seed, "seed");
    generate->add_flag("--binary", gen.binary, "write little-endian float64");
    generate->add_option("--out", gen.out, "output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int status = app.exit(e);
        return status == 0 ? 0 : kExitUsage;
    }

    try {
        if (*detect) {
            return run_detect(det);
        }
        if (*theory) {
            return run_theory(th);
        }
        if (*calibrate) {
            return run_calibrate(cal);
        }
        if (*simulate) {
            return run_simulate(sim);
        }
        return run_generate(gen);
    } catch (const cs::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
}
