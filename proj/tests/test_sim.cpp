#include "aebsurro/sim.hpp"
#include "kinematics_oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

using namespace aebsurro;

namespace {

double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

}  // namespace

TEST(Simulate, ConstantSpeedsWhenTargetNeverBrakes) {
    SimConfig cfg;
    cfg.horizon = 2.0;
    cfg.target_brake_onset = 10.0;
    const ParameterVector p{52, 48, -6, 40, 1, 1, 0};
    const auto s = simulate(p, cfg);
    ASSERT_EQ(s.steps(), 101u);
    for (std::size_t k = 0; k < s.steps(); ++k) {
        EXPECT_EQ(s[ego_speed][k], 52.0);
        EXPECT_EQ(s[target_speed][k], 48.0);
        EXPECT_EQ(s[ego_accel][k], 0.0);
    }
    EXPECT_NEAR(s[gap].back(), 40.0 - (4.0 / 3.6) * 2.0, 1e-9);
    EXPECT_FALSE(s.collision);
}

TEST(Simulate, Deterministic) {
    const ParameterVector p{51, 49, -6, 40, 1, 1, 0.2};
    const SimConfig cfg;
    const auto a = simulate(p, cfg);
    const auto b = simulate(p, cfg);
    EXPECT_TRUE(a == b);
    EXPECT_EQ(a.steps(), 401u);
}

TEST(Simulate, NominalMatchesClosedFormOracle) {
    const ParameterVector p{51, 49, -6, 40, 1, 1, 0.2};
    const SimConfig cfg;
    const auto s = simulate(p, cfg);
    const auto o = oracle::kinematics(p, cfg);
    for (std::size_t c = 0; c < kChannelCount; ++c)
        for (std::size_t k = 0; k < s.steps(); ++k)
            ASSERT_NEAR(s.channels[c][k], o.ch[c][k], 1e-9) << kChannelNames[c] << " @ " << k;
    EXPECT_EQ(s.collision, o.collision);
    // the scenario actually brakes
    EXPECT_LT(*std::min_element(s[ego_accel].begin(), s[ego_accel].end()), -1.0);
}

TEST(Simulate, RandomBoxMatchesOracleAndInvariants) {
    const SimConfig cfg;
    const auto params = sample_parameters(ParameterPriors::defaults(), 100, 7);
    int collisions = 0;
    for (const auto& p : params) {
        const auto s = simulate(p, cfg);
        const auto o = oracle::kinematics(p, cfg);
        for (std::size_t c = 0; c < kChannelCount; ++c)
            for (std::size_t k = 0; k < s.steps(); ++k)
                ASSERT_NEAR(s.channels[c][k], o.ch[c][k], 1e-9);
        EXPECT_EQ(s.collision, o.collision);
        collisions += s.collision;

        EXPECT_NEAR(s[gap][0], p.initial_gap, 1e-9);
        const double a_cmd = cfg.commanded_decel(p.front_brake_eff, p.rear_brake_eff);
        for (std::size_t k = 0; k < s.steps(); ++k) {
            EXPECT_GE(s[ego_speed][k], 0.0);
            EXPECT_GE(s[target_speed][k], 0.0);
            EXPECT_GE(s[gap][k], 0.0);
            EXPECT_GE(s[ego_accel][k], a_cmd - 1e-12);
            if (k + 1 < s.steps()) {
                const double replay =
                    std::max(0.0, s[gap][k] + cfg.dt * (s[target_speed][k] - s[ego_speed][k]) / 3.6);
                EXPECT_EQ(replay, s[gap][k + 1]);
                EXPECT_LE(std::abs(s[ego_accel][k + 1] - s[ego_accel][k]) / cfg.dt,
                          cfg.jerk_limit + 1e-9);
            }
        }
        // target: non-increasing after onset, at rest within the bound
        const std::size_t onset = cfg.step_at_or_after(cfg.target_brake_onset);
        for (std::size_t k = onset; k + 1 < s.steps(); ++k)
            EXPECT_LE(s[target_speed][k + 1], s[target_speed][k]);
        const double stop_by =
            cfg.target_brake_onset + p.target_speed0 / (3.6 * std::abs(p.target_brake_force)) + cfg.dt;
        const auto idx = static_cast<std::size_t>(std::floor(stop_by / cfg.dt + 1e-9));
        if (idx < s.steps()) {
            EXPECT_EQ(s[target_speed][idx], 0.0);
        }
    }
    RecordProperty("collisions", collisions);
}

TEST(Simulate, AccelZeroBeforeTriggerPlusLatency) {
    const ParameterVector p{50.5, 49.5, -5.5, 41, 1.2, 0.8, 0.4};
    const SimConfig cfg;
    const auto s = simulate(p, cfg);
    std::size_t first_nonzero = s.steps();
    for (std::size_t k = 0; k < s.steps(); ++k)
        if (s[ego_accel][k] != 0.0) {
            first_nonzero = k;
            break;
        }
    ASSERT_LT(first_nonzero, s.steps());
    // The ego speed is untouched up to that point.
    for (std::size_t k = 0; k <= first_nonzero; ++k) EXPECT_EQ(s[ego_speed][k], p.ego_speed0);
    // Braking cannot start before the target does plus the latency.
    EXPECT_GT(static_cast<double>(first_nonzero) * cfg.dt, cfg.target_brake_onset + p.aeb_latency);
}

TEST(Simulate, RejectsNonFiniteParameter) {
    ParameterVector p;
    p.initial_gap = std::nan("");
    try {
        simulate(p, SimConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::rejected_input);
    }
}

TEST(Simulate, RejectsBadConfig) {
    SimConfig cfg;
    cfg.horizon = 1.015;
    EXPECT_THROW(simulate(ParameterVector{}, cfg), Error);
    cfg = SimConfig{};
    cfg.brake_bias = {0.7, 0.31};
    EXPECT_THROW(simulate(ParameterVector{}, cfg), Error);
    cfg = SimConfig{};
    cfg.dt = 0.0;
    try {
        simulate(ParameterVector{}, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::configuration);
    }
}

TEST(Constraints, Examples) {
    const auto priors = ParameterPriors::defaults();
    EXPECT_TRUE(check_constraints({50.1, 49.9, -6, 40, 1, 1, 0.1}, priors).accepted);

    auto r = check_constraints({48, 52, -6, 40, 1, 1, 0.1}, priors);
    EXPECT_FALSE(r.accepted);
    EXPECT_EQ(r.reason, RejectReason::speed_ordering);

    r = check_constraints({50, 50, -6, 40, 1, 1, 0.1}, priors);
    EXPECT_FALSE(r.accepted);
    EXPECT_EQ(r.reason, RejectReason::speed_ordering);

    r = check_constraints({50.1, 49.9, -4, 40, 1, 1, 0.1}, priors);
    EXPECT_FALSE(r.accepted);
    EXPECT_EQ(r.reason, RejectReason::interval);

    r = check_constraints({50.1, 49.9, -6, 40, 0.39, 1, 0.1}, priors);
    EXPECT_FALSE(r.accepted);
    EXPECT_EQ(r.reason, RejectReason::interval);
    EXPECT_NE(r.detail.find("front_brake_eff"), std::string::npos);
}

TEST(Sampler, SeededAndConstrained) {
    const auto priors = ParameterPriors::defaults();
    const auto a = sample_parameters(priors, 500, 42);
    const auto b = sample_parameters(priors, 500, 42);
    const auto c = sample_parameters(priors, 500, 43);
    ASSERT_EQ(a.size(), 500u);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    for (const auto& p : a) {
        EXPECT_TRUE(check_constraints(p, priors).accepted);
        EXPECT_LT(p.target_brake_force, 0.0);
    }
}

TEST(Sampler, AcceptanceFractionIsHalf) {
    const auto priors = ParameterPriors::defaults();
    ParameterSampler sampler(priors, 11);
    int accepted = 0;
    for (int i = 0; i < 100000; ++i) accepted += check_constraints(sampler.draw_candidate(), priors).accepted;
    EXPECT_NEAR(accepted / 1e5, 0.5, 0.02);
}

TEST(Sampler, MarginalsKolmogorovSmirnov) {
    const auto priors = ParameterPriors::defaults();
    const auto draws = sample_parameters(priors, 10000, 5);
    for (std::size_t i = 0; i < kParamCount; ++i) {
        std::vector<double> xs;
        for (const auto& p : draws) xs.push_back(p.to_array()[i]);
        const double lo = priors.intervals[i].lo, hi = priors.intervals[i].hi;
        std::function<double(double)> cdf = [=](double x) { return (x - lo) / (hi - lo); };
        // Speeds are jointly uniform on the triangle ego > target.
        if (i == 0) cdf = [=](double x) { return std::pow((x - lo) / (hi - lo), 2); };
        if (i == 1) cdf = [=](double x) { return 1.0 - std::pow((hi - x) / (hi - lo), 2); };
        EXPECT_LT(ks_distance(xs, cdf), 0.02) << kParamNames[i];
    }
}

TEST(Sampler, StallsOnImpossiblePriors) {
    auto priors = ParameterPriors::defaults();
    priors.intervals[0] = {40.0, 45.0, std::nullopt};  // ego always slower than target
    EXPECT_THROW(
        {
            try {
                sample_parameters(priors, 1, 1);
            } catch (const Error& e) {
                EXPECT_EQ(e.kind(), ErrorKind::sampling_stalled);
                throw;
            }
        },
        Error);
}
