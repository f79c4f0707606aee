#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "covsense/theory.hpp"

namespace cs = covsense;

namespace {

cs::ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const cs::Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no covsense::Error thrown";
    return cs::ErrorCode::Io;
}

}  // namespace

TEST(QFunction, KnownValues) {
    EXPECT_DOUBLE_EQ(cs::q_function(0.0), 0.5);
    EXPECT_NEAR(cs::q_function(1.2815515655446004), 0.1, 1e-12);
    EXPECT_NEAR(cs::q_function(-1.2815515655446004), 0.9, 1e-12);
    EXPECT_NEAR(cs::q_function(2.3263478740408408), 0.01, 1e-13);
}

TEST(QInverse, KnownValues) {
    EXPECT_NEAR(cs::q_inverse(0.1), 1.2815515655446004, 1e-10);
    EXPECT_NEAR(cs::q_inverse(0.9), -1.2815515655446004, 1e-10);
    EXPECT_NEAR(cs::q_inverse(0.01), 2.3263478740408408, 1e-10);
    EXPECT_EQ(cs::q_inverse(0.5), 0.0);
}

TEST(QInverse, RoundTripAndMonotone) {
    double previous = std::numeric_limits<double>::infinity();
    for (double p = 1e-9; p < 1.0; p = p < 0.5 ? p * 3.0 : 1.0 - (1.0 - p) / 3.0) {
        if (p >= 1.0 - 1e-9) {
            break;
        }
        const double t = cs::q_inverse(p);
        EXPECT_NEAR(cs::q_function(t), p, 1e-12 + 1e-9 * p) << p;
        EXPECT_LT(t, previous);
        previous = t;
    }
}

TEST(QInverse, DomainErrors) {
    EXPECT_EQ(code_of([] { (void)cs::q_inverse(0.0); }), cs::ErrorCode::DomainError);
    EXPECT_EQ(code_of([] { (void)cs::q_inverse(1.0); }), cs::ErrorCode::DomainError);
    EXPECT_EQ(code_of([] { (void)cs::q_inverse(1e-13); }), cs::ErrorCode::DomainError);
    EXPECT_EQ(code_of([] { (void)cs::q_inverse(std::nan("")); }), cs::ErrorCode::DomainError);
}

TEST(RatioPredictions, NoiseOnly) {
    EXPECT_NEAR(cs::predict_ratio_h0(10, 50000), 1.0321142340907499, 1e-12);
    EXPECT_EQ(cs::predict_ratio_h0(1, 50000), 1.0);
}

TEST(RatioPredictions, SignalPresent) {
    EXPECT_NEAR(cs::predict_ratio_h1(0.01, 9.0), 1.0891089108910891, 1e-12);
    EXPECT_EQ(cs::predict_ratio_h1(0.0, 9.0), 1.0);
    EXPECT_EQ(cs::predict_ratio_h1(INFINITY, 4.0), 5.0);
}

TEST(CavThreshold, ReferenceDesigns) {
    EXPECT_NEAR(cs::cav_threshold({10, 50000, 0.1, 0.0}), 1.0405481303438427, 1e-10);
    EXPECT_NEAR(cs::cav_threshold({10, 50000, 0.01, 0.0}), 1.0475266144982916, 1e-10);
    EXPECT_NEAR(cs::cav_threshold({8, 25000, 0.1, 0.0}), 1.0473289107784564, 1e-10);
    EXPECT_NEAR(cs::cav_threshold({8, 25000, 0.01, 0.0}), 1.0573241140631451, 1e-10);
}

TEST(CavThreshold, AboveNoiseOnlyMean) {
    for (std::size_t L : {1u, 4u, 10u, 16u}) {
        for (std::size_t n_s : {1000u, 50000u}) {
            for (double pfa : {0.001, 0.1, 0.4}) {
                EXPECT_GT(cs::cav_threshold({L, n_s, pfa, 0.0}), cs::predict_ratio_h0(L, n_s));
            }
        }
    }
}

TEST(CavThreshold, MonotoneInPfaAndSamples) {
    double prev = INFINITY;
    for (double pfa : {0.001, 0.01, 0.05, 0.1, 0.2, 0.45}) {
        const double t = cs::cav_threshold({10, 50000, pfa, 0.0});
        EXPECT_LT(t, prev);
        prev = t;
    }
    prev = INFINITY;
    for (std::size_t n : {1000u, 5000u, 50000u, 500000u}) {
        const double t = cs::cav_threshold({10, n, 0.1, 0.0});
        EXPECT_LT(t, prev);
        prev = t;
    }
}

TEST(CavThreshold, InvalidDesigns) {
    EXPECT_EQ(code_of([] { (void)cs::cav_threshold({10, 50000, 0.5, 0.0}); }), cs::ErrorCode::InvalidDesign);
    EXPECT_EQ(code_of([] { (void)cs::cav_threshold({10, 50000, 0.0, 0.0}); }), cs::ErrorCode::InvalidDesign);
    EXPECT_EQ(code_of([] { (void)cs::cav_threshold({10, 2, 0.1, 0.0}); }), cs::ErrorCode::InvalidDesign);
    EXPECT_EQ(code_of([] { (void)cs::cav_threshold({0, 50000, 0.1, 0.0}); }), cs::ErrorCode::InvalidDesign);
}

TEST(CavPfa, RoundTripsThreshold) {
    for (double pfa : {0.001, 0.01, 0.1, 0.3}) {
        for (std::size_t L : {2u, 10u}) {
            const double t = cs::cav_threshold({L, 40000, pfa, 0.0});
            EXPECT_NEAR(cs::cav_pfa(t, L, 40000), pfa, 1e-9);
        }
    }
    EXPECT_NEAR(cs::cav_pfa(cs::predict_ratio_h0(10, 50000), 10, 50000), 0.5, 1e-12);
    EXPECT_EQ(cs::cav_pfa(INFINITY, 10, 50000), 0.0);
}

TEST(CorrelationStrength, Examples) {
    EXPECT_NEAR(cs::correlation_strength({{0.5, 0.25}}, 3), 0.8333333333333334, 1e-15);
    EXPECT_NEAR(cs::correlation_strength({std::vector<double>(9, 1.0)}, 10), 9.0, 1e-12);
    EXPECT_NEAR(cs::correlation_strength({std::vector<double>(9, -1.0)}, 10), 9.0, 1e-12);
    EXPECT_EQ(cs::correlation_strength({{}}, 1), 0.0);
    EXPECT_THROW((void)cs::correlation_strength({{0.5}}, 4), cs::Error);
}

TEST(CavPd, ReferenceValues) {
    const double g = cs::cav_threshold({10, 50000, 0.1, 0.0});
    // Arguments 7.3789 and -3.1524 respectively.
    EXPECT_NEAR(cs::cav_pd(g, 0.01, 9.0, 50000), 0.99999999999992022, 1e-12);
    EXPECT_NEAR(cs::cav_pd(g, 0.01, 2.0, 50000), 8.0959028584877682e-4, 1e-9);
}

TEST(CavPd, SignalFreeReduction) {
    const double g = cs::cav_threshold({10, 50000, 0.1, 0.0});
    const double expected = 1.0 - cs::q_function((1.0 / g - 1.0) / std::sqrt(2.0 / 50000.0));
    EXPECT_NEAR(cs::cav_pd(g, 0.0, 5.0, 50000), expected, 1e-14);
}

TEST(CavPd, MonotoneInSnrAndUpsilon) {
    const double g = cs::cav_threshold({10, 50000, 0.01, 0.0});
    double prev = -1.0;
    for (double snr_db = -30.0; snr_db <= 0.0; snr_db += 1.0) {
        const double pd = cs::cav_pd(g, cs::db_to_linear(snr_db), 4.0, 50000);
        EXPECT_GE(pd, prev);
        prev = pd;
    }
    prev = -1.0;
    for (double ups = 0.0; ups <= 12.0; ups += 0.5) {
        const double pd = cs::cav_pd(g, 0.01, ups, 50000);
        EXPECT_GE(pd, prev);
        prev = pd;
    }
}

TEST(ExpectedT1, ReferenceValues) {
    EXPECT_NEAR(cs::expected_t1_h1(0.1, {{0.5, 0.25}}, 3, 1000, 2.0), 2.4979523611754211, 1e-12);
    EXPECT_NEAR(cs::expected_t1_h1(0.01, {{0.5, 0.25}}, 3, 1000, 1.0), 1.0623663716603647, 1e-12);
}

TEST(ExpectedT1, NoiseOnlyMatchesRatioPrediction) {
    const cs::CorrelationProfile p{std::vector<double>(9, 0.7)};
    EXPECT_NEAR(cs::expected_t1_h1(0.0, p, 10, 50000, 3.0), 3.0 * cs::predict_ratio_h0(10, 50000), 1e-12);
}

TEST(ExpectedT1, LargeSampleLimit) {
    const cs::CorrelationProfile p{{0.9, 0.6, 0.3}};
    const double snr = 0.5;
    const double limit = (1.0 + snr) + 2.0 * snr / 4.0 * (3 * 0.9 + 2 * 0.6 + 1 * 0.3);
    EXPECT_NEAR(cs::expected_t1_h1(snr, p, 4, 100000000000ULL, 1.0), limit, 1e-4);
}

TEST(RequiredSamples, CavReference) {
    const auto n = cs::required_samples_cav(0.9, 0.1, 10, 2.0, 0.01);
    EXPECT_NEAR(static_cast<double>(n), 291912.0, 10.0);
    EXPECT_EQ(n, 291910u);
}

TEST(RequiredSamples, EnergyReference) {
    EXPECT_EQ(cs::required_samples_energy(0.9, 0.1, 0.01), 131390u);
    EXPECT_EQ(cs::required_samples_energy(0.9, 0.1, 1.0), 14u);
    EXPECT_EQ(cs::required_samples_energy(0.3, 0.3, 0.1), 0u);
}

TEST(RequiredSamples, Errors) {
    EXPECT_EQ(code_of([] { (void)cs::required_samples_cav(0.9, 0.1, 10, 0.0, 0.01); }), cs::ErrorCode::DegenerateDesign);
    EXPECT_EQ(code_of([] { (void)cs::required_samples_cav(0.9, 0.1, 10, 2.0, 0.0); }), cs::ErrorCode::DegenerateDesign);
    EXPECT_EQ(code_of([] { (void)cs::required_samples_energy(0.9, 0.1, 0.0); }), cs::ErrorCode::DegenerateDesign);
    EXPECT_EQ(code_of([] { (void)cs::required_samples_cav(0.1, 0.9, 10, 2.0, 0.01); }), cs::ErrorCode::InvalidDesign);
}

TEST(RequiredSamples, ScalingProperties) {
    const double base = cs::required_samples_cav_real(0.9, 0.1, 10, 3.0, 0.01);
    EXPECT_NEAR(cs::required_samples_cav_real(0.9, 0.1, 10, 3.0, 0.02), base / 4.0, 1e-6 * base);
    EXPECT_NEAR(cs::required_samples_cav_real(0.9, 0.1, 10, 6.0, 0.01), base / 4.0, 1e-6 * base);
    EXPECT_LT(cs::required_samples_cav_real(0.9, 0.1, 10, 3.0, 0.01), cs::required_samples_cav_real(0.95, 0.1, 10, 3.0, 0.01));
}

// N_c is first order in Upsilon*SNR; the plug-back holds while that product is small.
TEST(RequiredSamples, PluggingBackMeetsTarget) {
    for (double pd : {0.8, 0.9, 0.99}) {
        for (double pfa : {0.01, 0.1}) {
            for (std::size_t L : {4u, 8u, 12u}) {
                for (double ups : {0.5, 1.0, 2.0, 5.0}) {
                    for (double snr_db : {-40.0, -35.0, -30.0}) {
                        const double snr = cs::db_to_linear(snr_db);
                        if (ups * snr > 2e-3) {
                            continue;
                        }
                        const auto n = cs::required_samples_cav(pd, pfa, L, ups, snr);
                        const double g = cs::cav_threshold({L, n, pfa, 0.0});
                        EXPECT_GE(cs::cav_pd(g, snr, ups, n), pd - 0.01)
                            << "pd=" << pd << " pfa=" << pfa << " L=" << L << " ups=" << ups << " snr_db=" << snr_db;
                    }
                }
            }
        }
    }
}

TEST(RequiredSamples, PlugBackShortfallShrinksWithStrength) {
    double previous = 1.0;
    for (double snr : {0.02, 0.01, 0.003, 0.001, 0.0003}) {
        const auto n = cs::required_samples_cav(0.9, 0.1, 10, 2.0, snr);
        const double pd = cs::cav_pd(cs::cav_threshold({10, n, 0.1, 0.0}), snr, 2.0, n);
        const double shortfall = 0.9 - pd;
        EXPECT_LT(shortfall, previous) << "snr=" << snr;
        previous = shortfall;
    }
    EXPECT_LT(previous, 0.002);
}

TEST(RequiredSamples, PlugBackAtReferenceDesign) {
    const auto n = cs::required_samples_cav(0.9, 0.1, 10, 2.0, 0.01);
    const double pd = cs::cav_pd(cs::cav_threshold({10, n, 0.1, 0.0}), 0.01, 2.0, n);
    EXPECT_NEAR(pd, 0.8779986466740848, 1e-9);
}

TEST(Advantage, Boundary) {
    EXPECT_NEAR(cs::cav_advantage_boundary(0.9, 0.1, 10), 2.9810776204592340, 1e-10);
    EXPECT_NEAR(cs::cav_advantage_boundary(0.9, 0.1, 10), 2.981, 0.01);
    EXPECT_TRUE(cs::cav_advantage(0.9, 0.1, 10, 9.0));
    EXPECT_FALSE(cs::cav_advantage(0.9, 0.1, 10, 2.0));
    EXPECT_FALSE(cs::cav_advantage(0.9, 0.1, 1, 100.0));
}

TEST(Advantage, ConsistentWithSampleCounts) {
    for (double ups : {1.5, 2.5, 3.5, 6.0, 9.0}) {
        const bool predicted = cs::cav_advantage(0.9, 0.1, 10, ups);
        const double nc = cs::required_samples_cav_real(0.9, 0.1, 10, ups, 0.01);
        const double ne = 2.0 * std::pow(cs::q_inverse(0.1) - cs::q_inverse(0.9), 2) / 1e-4;
        EXPECT_EQ(predicted, nc < ne) << ups;
    }
}

TEST(BestSmoothing, AllOnesPrefersLargest) {
    std::vector<std::size_t> candidates;
    for (std::size_t L = 2; L <= 14; ++L) {
        candidates.push_back(L);
    }
    const auto ones = [](std::size_t L) { return cs::CorrelationProfile{std::vector<double>(L - 1, 1.0)}; };
    EXPECT_EQ(cs::best_smoothing_factor(0.9, 0.1, ones, candidates).smoothing, 14u);
}

TEST(BestSmoothing, SingleLagPrefersThree) {
    std::vector<std::size_t> candidates;
    for (std::size_t L = 2; L <= 8; ++L) {
        candidates.push_back(L);
    }
    const auto first_only = [](std::size_t L) {
        cs::CorrelationProfile p{std::vector<double>(L - 1, 0.0)};
        p.alphas[0] = 1.0;
        return p;
    };
    const auto choice = cs::best_smoothing_factor(0.9, 0.1, first_only, candidates);
    EXPECT_EQ(choice.smoothing, 3u);
    EXPECT_EQ(choice.required_samples, cs::required_samples_cav(0.9, 0.1, 3, 4.0 / 3.0, 1.0));
}

TEST(BestSmoothing, Degenerate) {
    const std::vector<std::size_t> candidates{1, 2, 3};
    const auto zeros = [](std::size_t L) { return cs::CorrelationProfile{std::vector<double>(L == 0 ? 0 : L - 1, 0.0)}; };
    EXPECT_EQ(code_of([&] { (void)cs::best_smoothing_factor(0.9, 0.1, zeros, candidates); }),
              cs::ErrorCode::DegenerateDesign);
}

TEST(NoiseUncertainty, BoundAndInterval) {
    const std::vector<double> support{0.8, 1.0, 1.2};
    EXPECT_NEAR(cs::noise_uncertainty_bound(support), 10.0 * std::log10(1.25), 1e-12);
    const auto [lo, hi] = cs::noise_uncertainty_interval(2.0);
    EXPECT_NEAR(lo, 0.6309573444801932, 1e-12);
    EXPECT_NEAR(hi, 1.5848931924611136, 1e-12);
    EXPECT_NEAR(cs::noise_uncertainty_bound(std::vector<double>{lo, hi}), 2.0, 1e-12);
    EXPECT_THROW((void)cs::noise_uncertainty_bound(std::vector<double>{0.0}), cs::Error);
}

TEST(Decibels, RoundTrip) {
    for (double db : {-30.0, -20.0, 0.0, 3.0}) {
        EXPECT_NEAR(cs::linear_to_db(cs::db_to_linear(db)), db, 1e-12);
    }
    EXPECT_NEAR(cs::db_to_linear(-20.0), 0.01, 1e-15);
}
