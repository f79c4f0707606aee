// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if every
// selected criterion passes. Usage: covsense_acceptance [--criterion N]... [--threads T]

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covsense/covsense.hpp"

namespace cs = covsense;

namespace {

unsigned g_threads = 0;

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) {
            detail += "; ";
        }
        detail += (ok ? "" : "!") + what;
    }
};

std::string fmt(const char* format, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double combined_se(const cs::SweepPoint& a, const cs::SweepPoint& b) { return std::hypot(a.stderr_, b.stderr_); }

cs::SignalSpec microphone() {
    cs::SignalSpec s;
    s.variant = cs::SignalVariant::wireless_mic_fm;
    return s;
}

cs::ExperimentSpec single_antenna(std::size_t L, std::size_t n_s, double pfa) {
    cs::ExperimentSpec s;
    s.smoothing = L;
    s.n_s = n_s;
    s.pfa_target = pfa;
    s.trials = 1000;
    s.calibration_trials = 2000;
    s.threads = g_threads;
    return s;
}

// L=10, N_s=50000, Pfa=0.1: CAV at the closed-form threshold and energy detection
// with noise-power uncertainty B in {0, 0.5, 1, 1.5, 2} dB.
Verdict table1_false_alarm() {
    Verdict v;
    const auto cav = cs::estimate_pfa(single_antenna(10, 50000, 0.1));
    v.require(std::abs(cav.estimate - 0.099) <= 0.03, fmt("cav Pfa %.3f (0.099 +/- 0.03)", cav.estimate));
    for (double b : {0.0, 0.5, 1.0, 1.5, 2.0}) {
        auto spec = single_antenna(10, 50000, 0.1);
        spec.detector = cs::DetectorType::energy;
        spec.noise_uncertainty_db = b;
        const auto p = cs::estimate_pfa(spec);
        if (b == 0.0) {
            v.require(std::abs(p.estimate - 0.102) <= 0.03, fmt("energy B=0 Pfa %.3f (0.102 +/- 0.03)", p.estimate));
        } else {
            v.require(p.estimate >= 0.30, fmt("energy B=%gdB Pfa %.3f (>= 0.30)", b, p.estimate));
        }
    }
    return v;
}

Verdict threshold_formula() {
    Verdict v;
    const std::pair<std::size_t, std::size_t> designs[] = {{10, 50000}, {8, 25000}};
    for (const auto& [L, n_s] : designs) {
        for (double pfa : {0.01, 0.1}) {
            const auto spec = single_antenna(L, n_s, pfa);
            const double analytic = cs::cav_threshold({L, n_s, pfa, 0.0});
            const auto p = cs::estimate_pfa(spec);
            v.require(std::abs(p.estimate - pfa) <= 0.03,
                      fmt("L=%zu Ns=%zu target %.2f: Pfa %.3f", L, n_s, pfa, p.estimate));
            const double mc = cs::calibrate_threshold_mc(spec);
            v.require(std::abs(mc - analytic) <= 0.005,
                      fmt("L=%zu Ns=%zu target %.2f: MC %.5f vs closed form %.5f", L, n_s, pfa, mc, analytic));
        }
    }
    return v;
}

Verdict h0_concentration() {
    Verdict v;
    const auto stats = cs::noise_only_statistics(single_antenna(10, 50000, 0.1), 1000);
    double mean = 0.0;
    for (double r : stats) {
        mean += r;
    }
    mean /= static_cast<double>(stats.size());
    const double predicted = cs::predict_ratio_h0(10, 50000);
    v.require(std::abs(mean - predicted) <= 0.005, fmt("mean ratio %.6f vs %.6f (+/- 0.005)", mean, predicted));
    return v;
}

Verdict narrowband_ordering() {
    Verdict v;
    const double snr = cs::db_to_linear(-20.0);
    auto spec = single_antenna(10, 50000, 0.1);
    spec.signal = microphone();
    const auto cav = cs::estimate_pd(spec, snr);
    spec.detector = cs::DetectorType::energy;
    const auto ed0 = cs::estimate_pd(spec, snr);
    spec.noise_uncertainty_db = 1.0;
    const auto ed1 = cs::estimate_pd(spec, snr);
    v.require(cav.estimate - ed0.estimate >= 2.0 * combined_se(cav, ed0),
              fmt("cav Pd %.3f vs energy Pd %.3f (2 SE = %.3f)", cav.estimate, ed0.estimate, 2.0 * combined_se(cav, ed0)));
    v.require(cav.estimate - ed1.estimate >= 0.2, fmt("energy B=1dB Pd %.3f (>= 0.2 below cav)", ed1.estimate));
    return v;
}

Verdict theory_vs_simulation() {
    Verdict v;
    auto spec = single_antenna(10, 50000, 0.1);
    spec.signal = microphone();
    cs::RngStream rng(spec.base_seed, 0);
    const auto reference = cs::gen_wireless_mic(200000, spec.signal, rng);
    const double upsilon = cs::correlation_strength(cs::estimate_alpha_profile(reference, 10), 10);
    const double threshold = cs::resolve_threshold(spec);
    for (double db : {-18.0, -20.0, -22.0}) {
        const double snr = cs::db_to_linear(db);
        const double predicted = cs::cav_pd(threshold, snr, upsilon, spec.n_s);
        const auto p = cs::estimate_pd(spec, snr);
        v.require(std::abs(p.estimate - predicted) <= 0.10,
                  fmt("%gdB: Pd %.3f vs predicted %.3f (+/- 0.10)", db, p.estimate, predicted));
    }
    return v;
}

Verdict smoothing_insensitivity() {
    Verdict v;
    auto spec = single_antenna(10, 50000, 0.01);
    spec.signal = microphone();
    spec.snr_list = {cs::db_to_linear(-20.0)};
    const auto r = cs::run_sweep(spec, cs::SweepAxis::smoothing, {8, 10, 12, 14});
    double lo = 1.0;
    double hi = 0.0;
    std::string values;
    for (const auto& p : r.points) {
        lo = std::min(lo, p.estimate);
        hi = std::max(hi, p.estimate);
        values += fmt(" L=%zu:%.3f", p.smoothing, p.estimate);
    }
    v.require(hi - lo < 0.15, fmt("spread %.3f (< 0.15);%s", hi - lo, values.c_str()));
    return v;
}

cs::ExperimentSpec dispersive_bpsk(std::size_t antennas) {
    auto spec = single_antenna(8, 25000, 0.1);
    spec.signal.variant = cs::SignalVariant::bpsk_iid;
    spec.channel_taps = 5;
    spec.antennas = antennas;
    spec.threshold_source = cs::ThresholdSource::monte_carlo;
    return spec;
}

Verdict antenna_ordering() {
    Verdict v;
    const double snr = cs::db_to_linear(-18.0);
    std::map<std::size_t, cs::SweepPoint> pd;
    for (std::size_t m : {1u, 2u, 4u}) {
        pd[m] = cs::estimate_pd(dispersive_bpsk(m), snr);
    }
    auto noise_only = dispersive_bpsk(1);
    noise_only.signal.variant = cs::SignalVariant::none;
    const auto pfa = cs::estimate_pfa(noise_only);
    v.require(pd[4].estimate - pd[2].estimate > 2.0 * combined_se(pd[4], pd[2]),
              fmt("-18dB: M=4 %.3f > M=2 %.3f", pd[4].estimate, pd[2].estimate));
    v.require(pd[2].estimate - pd[1].estimate > 2.0 * combined_se(pd[2], pd[1]),
              fmt("M=2 %.3f > M=1 %.3f", pd[2].estimate, pd[1].estimate));
    v.require(pd[1].estimate - pfa.estimate > 2.0 * combined_se(pd[1], pfa),
              fmt("M=1 Pd %.3f > Pfa %.3f", pd[1].estimate, pfa.estimate));
    return v;
}

Verdict doppler_trend() {
    Verdict v;
    auto spec = dispersive_bpsk(2);
    spec.snr_list = {cs::db_to_linear(-16.0)};
    const auto r = cs::run_sweep(spec, cs::SweepAxis::doppler, {0.0, 1e-3, 5e-3, 1e-2});
    std::string values;
    for (const auto& p : r.points) {
        values += fmt(" fd=%g:%.3f", p.doppler_fd, p.estimate);
    }
    bool ok = true;
    for (std::size_t i = 1; i < r.points.size(); ++i) {
        ok = ok && r.points[i].estimate <= r.points[i - 1].estimate + 2.0 * combined_se(r.points[i], r.points[i - 1]);
    }
    v.require(ok, fmt("non-increasing within 2 SE at -16dB, M=2;%s", values.c_str()));
    return v;
}

Verdict prewhitening() {
    Verdict v;
    auto spec = single_antenna(10, 50000, 0.1);
    spec.noise_filter = cs::FilterSpec{{1.0, 1.0}};
    const auto raw = cs::estimate_pfa(spec);
    spec.whiten = true;
    const auto white = cs::estimate_pfa(spec);
    v.require(raw.estimate > 0.2, fmt("unwhitened Pfa %.3f (> 0.2)", raw.estimate));
    v.require(std::abs(white.estimate - 0.1) <= 0.03, fmt("whitened Pfa %.3f (0.1 +/- 0.03)", white.estimate));
    return v;
}

Verdict analytic_spot_checks() {
    Verdict v;
    const double g = cs::cav_threshold({10, 50000, 0.1, 0.0});
    v.require(std::abs(g - 1.04055) <= 1e-4, fmt("gamma1 %.6f", g));
    const auto nc = cs::required_samples_cav(0.9, 0.1, 10, 2.0, 0.01);
    v.require(std::abs(static_cast<double>(nc) - 291912.0) <= 10.0, fmt("Nc %llu", static_cast<unsigned long long>(nc)));
    const auto ne = cs::required_samples_energy(0.9, 0.1, 0.01);
    v.require(std::abs(static_cast<double>(ne) - 131390.0) <= 10.0, fmt("Ne %llu", static_cast<unsigned long long>(ne)));
    const double boundary = cs::cav_advantage_boundary(0.9, 0.1, 10);
    v.require(std::abs(boundary - 2.981) <= 0.01, fmt("advantage boundary %.4f", boundary));
    return v;
}

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
    cs::RngStream rng(seed, 0);
    std::vector<double> x(n);
    for (double& s : x) {
        s = rng.normal();
    }
    return x;
}

double lag_sum(const cs::SampleBuffer& a, const cs::SampleBuffer& b, std::ptrdiff_t lag) {
    double acc = 0.0;
    for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(a.n_s()); ++m) {
        acc += a.at(m) * b.at(m - lag);
    }
    return acc / static_cast<double>(a.n_s());
}

Verdict property_suites() {
    Verdict v;

    // CAV decisions are unchanged by the noise scale.
    {
        auto spec = dispersive_bpsk(1);
        spec.n_s = 5000;
        spec.trials = 100;
        const auto a = cs::run_trials(spec, cs::Hypothesis::h1, 0.05, 1.03);
        spec.noise_power = 13.7;
        const auto b = cs::run_trials(spec, cs::Hypothesis::h1, 0.05, 1.03);
        bool same = true;
        for (std::size_t t = 0; t < a.size(); ++t) {
            same = same && a[t].detected == b[t].detected && std::abs(a[t].statistic - b[t].statistic) <= 1e-12;
        }
        v.require(same, "scale invariance");
    }

    // Symmetry, Toeplitz structure, both statistic routes, and the lag-sum definition.
    {
        bool structure = true;
        double route_gap = 0.0;
        double brute_gap = 0.0;
        for (std::size_t L : {1u, 3u, 8u}) {
            const auto buf = cs::SampleBuffer::from_samples(gaussian(120 + L, L), L);
            const auto acf = cs::compute_autocorrelations(buf);
            const auto cov = cs::build_toeplitz_covariance(acf);
            const auto& r = cov.entries;
            Eigen::MatrixXd brute(r.rows(), r.cols());
            for (Eigen::Index i = 0; i < r.rows(); ++i) {
                for (Eigen::Index j = 0; j < r.cols(); ++j) {
                    brute(i, j) = lag_sum(buf, buf, std::abs(i - j));
                }
            }
            brute_gap = std::max(brute_gap, (brute - r).cwiseAbs().maxCoeff());
            for (Eigen::Index i = 0; i < r.rows(); ++i) {
                for (Eigen::Index j = 0; j < r.cols(); ++j) {
                    structure = structure && r(i, j) == r(j, i) && (i == 0 || j == 0 || r(i, j) == r(i - 1, j - 1));
                }
            }
            const auto m = cs::cav_statistics(cov);
            const auto l = cs::cav_statistics(acf);
            route_gap = std::max({route_gap, std::abs(m.t_num - l.t_num), std::abs(m.t_den - l.t_den)});
        }
        v.require(structure, "symmetric Toeplitz");
        v.require(route_gap <= 1e-12, fmt("lag route gap %.1e", route_gap));

        std::vector<cs::SampleBuffer> ch;
        for (std::uint64_t i = 0; i < 3; ++i) {
            ch.push_back(cs::SampleBuffer::from_samples(gaussian(43, 90 + i), 4));
        }
        const cs::MultiAntennaBuffer mb(std::move(ch));
        const auto block = cs::compute_multiantenna_covariance(mb).entries;
        Eigen::MatrixXd brute(12, 12);
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t i = 0; i < 3; ++i) {
                for (std::size_t b = 0; b < 4; ++b) {
                    for (std::size_t j = 0; j < 3; ++j) {
                        const auto lag = static_cast<std::ptrdiff_t>(a) - static_cast<std::ptrdiff_t>(b);
                        brute(static_cast<Eigen::Index>(a * 3 + i), static_cast<Eigen::Index>(b * 3 + j)) =
                            lag >= 0 ? lag_sum(mb.channel(i), mb.channel(j), lag)
                                     : lag_sum(mb.channel(j), mb.channel(i), -lag);
                    }
                }
            }
        }
        brute_gap = std::max(brute_gap, (brute - block).cwiseAbs().maxCoeff());
        v.require(brute_gap <= 1e-12, fmt("brute-force gap %.1e", brute_gap));
    }

    // Q = sqrt(G).
    {
        double gap = 0.0;
        for (const cs::FilterSpec& f : {cs::FilterSpec{{1.0, 1.0}}, cs::FilterSpec{{1.0, -0.6, 0.2}}}) {
            const auto t = cs::whitening_transform(f, 10);
            gap = std::max(gap, (t.sqrt_gram * t.sqrt_gram - t.gram).cwiseAbs().maxCoeff());
        }
        v.require(gap <= 1e-9, fmt("Q*Q - G %.1e", gap));
    }

    // Bit reproducibility under different worker counts.
    {
        auto spec = dispersive_bpsk(2);
        spec.n_s = 3000;
        spec.trials = 64;
        spec.calibration_trials = 200;
        spec.threads = 1;
        const auto a = cs::run_sweep(spec, cs::SweepAxis::snr, {0.02, 0.1});
        spec.threads = 7;
        const auto b = cs::run_sweep(spec, cs::SweepAxis::snr, {0.02, 0.1});
        bool same = true;
        for (std::size_t i = 0; i < a.points.size(); ++i) {
            same = same && a.points[i].detections == b.points[i].detections &&
                   a.points[i].threshold == b.points[i].threshold;
        }
        v.require(same, "parallelism invariance");
    }
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"covsense acceptance suite"};
    std::vector<int> selected;
    app.add_option("--criterion", selected, "criterion number (repeatable); default all")->check(CLI::Range(1, 11));
    app.add_option("--threads", g_threads, "worker threads, 0 = hardware concurrency");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"table 1 false-alarm rates", table1_false_alarm},
        {"closed-form threshold validity", threshold_formula},
        {"noise-only ratio concentration", h0_concentration},
        {"narrowband detection ordering", narrowband_ordering},
        {"predicted vs simulated detection", theory_vs_simulation},
        {"smoothing-factor insensitivity", smoothing_insensitivity},
        {"antenna-count ordering", antenna_ordering},
        {"Doppler trend", doppler_trend},
        {"prewhitening", prewhitening},
        {"analytic spot checks", analytic_spot_checks},
        {"property suites", property_suites},
    };
    if (selected.empty()) {
        for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) {
            selected.push_back(i);
        }
    }

    bool all = true;
    for (int id : selected) {
        const auto& [name, run] = criteria[static_cast<std::size_t>(id - 1)];
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("error: ") + e.what();
        }
        all = all && v.pass;
        std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
