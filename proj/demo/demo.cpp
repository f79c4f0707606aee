// Minimal end-to-end use of the library: one noise-only and one microphone buffer,
// CAV statistics against the closed-form threshold, and the matching design numbers.

#include <cstdio>
#include <span>
#include <vector>

#include "covsense/covsense.hpp"

namespace cs = covsense;

int main() {
    constexpr std::size_t kL = 10;
    constexpr std::size_t kNs = 50000;
    constexpr double kPfa = 0.1;
    const double snr = cs::db_to_linear(-20.0);

    const double threshold = cs::cav_threshold({kL, kNs, kPfa, snr});
    std::printf("threshold gamma1        %.6f\n", threshold);
    std::printf("predicted H0 ratio      %.6f\n", cs::predict_ratio_h0(kL, kNs));

    cs::RngStream rng(2024, 0);
    auto noise_rng = rng.substream(1);
    auto signal_rng = rng.substream(2);

    const std::vector<double> mic = cs::gen_wireless_mic(kNs + kL - 1, cs::SignalSpec{}, signal_rng);
    const cs::SampleBuffer h0 = cs::mix_at_snr(std::span<const double>{}, kNs, kL, 1.0, 0.0, noise_rng);
    const cs::SampleBuffer h1 = cs::mix_at_snr(mic, kNs, kL, 1.0, snr, noise_rng);

    for (const auto& [name, buffer] : {std::pair{"noise only", &h0}, std::pair{"mic -20 dB", &h1}}) {
        const auto stats = cs::cav_statistics(cs::compute_autocorrelations(*buffer));
        const auto decision = cs::decide(stats, threshold);
        std::printf("%-12s T1/T2 = %.6f  %s\n", name, stats.ratio, decision.present ? "present" : "absent");
    }

    const cs::CorrelationProfile profile = cs::estimate_alpha_profile(mic, kL);
    const double upsilon = cs::correlation_strength(profile, kL);
    std::printf("Upsilon_L               %.4f\n", upsilon);
    std::printf("predicted Pd            %.4f\n", cs::cav_pd(threshold, snr, upsilon, kNs));
    std::printf("N_c for Pd 0.9          %llu\n",
                static_cast<unsigned long long>(cs::required_samples_cav(0.9, kPfa, kL, upsilon, snr)));
    std::printf("N_e for Pd 0.9          %llu\n",
                static_cast<unsigned long long>(cs::required_samples_energy(0.9, kPfa, snr)));
    return 0;
}
