#pragma once

/*
 Reference simulator for a two-vehicle emergency-braking scenario.

 A lead vehicle ("target") cruises and then brakes at a constant rate; the
 following vehicle ("ego") cruises until its AEB fires on a time-to-collision
 threshold, waits out the AEB latency, then ramps its deceleration at a
 bounded jerk towards a commanded level set by the front/rear brake
 efficiencies. Integration is explicit Euler on a uniform grid.

 Channels, in order: ego speed [km/h], ego acceleration [m/s^2],
 target speed [km/h], gap [m].

 Once the ego is at rest its acceleration reading relaxes to 0 at the jerk
 limit while its speed stays at 0. The gap is floored at 0; a floor event
 sets the collision flag and both vehicles keep their own dynamics.
*/

#include "aebsurro/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace aebsurro {

inline constexpr std::size_t kParamCount = 7;
inline constexpr std::size_t kChannelCount = 4;
inline constexpr double kKmhPerMs = 3.6;

inline constexpr std::array<std::string_view, kParamCount> kParamNames = {
    "ego_speed0",       "target_speed0",   "target_brake_force", "initial_gap",
    "front_brake_eff",  "rear_brake_eff",  "aeb_latency"};

inline constexpr std::array<std::string_view, kChannelCount> kChannelNames = {
    "ego_speed", "ego_accel", "target_speed", "gap"};

enum Channel : std::size_t { ego_speed = 0, ego_accel = 1, target_speed = 2, gap = 3 };

struct ParameterVector {
    double ego_speed0 = 50.0;         // km/h
    double target_speed0 = 50.0;      // km/h
    double target_brake_force = -6.0; // m/s^2
    double initial_gap = 40.0;        // m
    double front_brake_eff = 1.0;
    double rear_brake_eff = 1.0;
    double aeb_latency = 0.0;         // s

    std::array<double, kParamCount> to_array() const {
        return {ego_speed0,      target_speed0,  target_brake_force, initial_gap,
                front_brake_eff, rear_brake_eff, aeb_latency};
    }

    static ParameterVector from_array(const std::array<double, kParamCount>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
    }

    bool operator==(const ParameterVector&) const = default;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    std::optional<double> nominal;

    bool contains(double v) const { return v >= lo && v <= hi; }
};

// Uniform priors, one closed interval per parameter in ParameterVector order.
struct ParameterPriors {
    std::array<Interval, kParamCount> intervals{};

    // Latency in seconds: 0 to 0.55.
    static ParameterPriors defaults() {
        ParameterPriors p;
        p.intervals = {{{48.0, 52.0, 50.0},
                        {48.0, 52.0, 50.0},
                        {-8.5, -5.0, -6.0},
                        {38.0, 42.0, 40.0},
                        {0.4, 1.6, 1.0},
                        {0.4, 1.6, 1.0},
                        {0.0, 0.55, std::nullopt}}};
        return p;
    }

    void validate() const {
        for (std::size_t i = 0; i < kParamCount; ++i) {
            const auto& iv = intervals[i];
            const std::string name(kParamNames[i]);
            if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo < iv.hi))
                fail(ErrorKind::configuration, "prior '" + name + "' needs finite lo < hi");
            if (iv.nominal && !(iv.lo <= *iv.nominal && *iv.nominal <= iv.hi))
                fail(ErrorKind::configuration, "prior '" + name + "' nominal outside interval");
        }
    }
};

struct SimConfig {
    double dt = 0.02;
    double horizon = 8.0;
    double target_brake_onset = 1.0;
    double aeb_ttc_threshold = 2.0;
    double base_ego_decel = -9.0;
    double jerk_limit = 30.0;
    std::array<double, 2> brake_bias = {0.7, 0.3};

    // Number of Euler steps; validate() guarantees horizon == steps * dt.
    std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }
    std::size_t samples() const { return steps() + 1; }

    // First grid index at or after t (tolerant to dt not being exactly representable).
    std::size_t step_at_or_after(double t) const {
        if (t <= 0.0) return 0;
        return static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
    }

    double commanded_decel(double front_eff, double rear_eff) const {
        return base_ego_decel * (brake_bias[0] * front_eff + brake_bias[1] * rear_eff);
    }

    void validate() const {
        auto bad = [](const char* what) { fail(ErrorKind::configuration, what); };
        if (!std::isfinite(dt) || dt <= 0.0) bad("sim.dt must be > 0");
        if (!std::isfinite(horizon) || horizon <= 0.0) bad("sim.horizon must be > 0");
        const double k = std::round(horizon / dt);
        if (k < 1.0 || std::abs(k * dt - horizon) > 1e-9 * std::max(1.0, horizon))
            bad("sim.horizon must be a positive multiple of sim.dt");
        if (!std::isfinite(target_brake_onset) || target_brake_onset < 0.0)
            bad("sim.target_brake_onset must be >= 0");
        if (!std::isfinite(aeb_ttc_threshold) || aeb_ttc_threshold <= 0.0)
            bad("sim.aeb_ttc_threshold must be > 0");
        if (!std::isfinite(base_ego_decel) || base_ego_decel >= 0.0)
            bad("sim.base_ego_decel must be negative");
        if (!std::isfinite(jerk_limit) || jerk_limit <= 0.0) bad("sim.jerk_limit must be > 0");
        if (brake_bias[0] < 0.0 || brake_bias[1] < 0.0 ||
            std::abs(brake_bias[0] + brake_bias[1] - 1.0) > 1e-12)
            bad("sim.brake_bias weights must be non-negative and sum to 1");
    }
};

struct ScenarioSeries {
    std::array<std::vector<double>, kChannelCount> channels;
    bool collision = false;

    std::size_t steps() const { return channels[0].size(); }
    const std::vector<double>& operator[](Channel c) const { return channels[c]; }
    std::vector<double>& operator[](Channel c) { return channels[c]; }

    bool operator==(const ScenarioSeries&) const = default;
};

inline ScenarioSeries simulate(const ParameterVector& p, const SimConfig& cfg) {
    cfg.validate();
    const auto values = p.to_array();
    for (std::size_t i = 0; i < kParamCount; ++i)
        if (!std::isfinite(values[i]))
            fail(ErrorKind::rejected_input,
                 "parameter '" + std::string(kParamNames[i]) + "' is not finite");

    const std::size_t n = cfg.samples();
    const double dt = cfg.dt;
    const double a_cmd = cfg.commanded_decel(p.front_brake_eff, p.rear_brake_eff);
    const std::size_t onset = cfg.step_at_or_after(cfg.target_brake_onset);

    ScenarioSeries out;
    for (auto& ch : out.channels) ch.resize(n);

    double v_ego = p.ego_speed0;
    double v_tgt = p.target_speed0;
    double g = p.initial_gap;
    double a_prev = 0.0;
    std::optional<std::size_t> trigger;

    for (std::size_t k = 0; k < n; ++k) {
        if (!trigger && v_ego > v_tgt && g / ((v_ego - v_tgt) / kKmhPerMs) < cfg.aeb_ttc_threshold)
            trigger = k;

        double a_ego = 0.0;
        if (v_ego <= 0.0) {
            a_ego = std::min(0.0, a_prev + cfg.jerk_limit * dt);
        } else if (trigger) {
            const double since_brake = static_cast<double>(k - *trigger) * dt - p.aeb_latency;
            if (since_brake > 0.0) a_ego = std::max(a_cmd, -cfg.jerk_limit * since_brake);
        }
        const double a_tgt = (k >= onset && v_tgt > 0.0) ? p.target_brake_force : 0.0;

        out.channels[ego_speed][k] = v_ego;
        out.channels[ego_accel][k] = a_ego;
        out.channels[target_speed][k] = v_tgt;
        out.channels[gap][k] = g;

        if (k + 1 == n) break;
        const double raw_gap = g + dt * (v_tgt - v_ego) / kKmhPerMs;
        if (raw_gap <= 0.0) out.collision = true;
        g = std::max(0.0, raw_gap);
        v_ego = std::max(0.0, v_ego + kKmhPerMs * dt * a_ego);
        v_tgt = std::max(0.0, v_tgt + kKmhPerMs * dt * a_tgt);
        a_prev = a_ego;
    }
    return out;
}

enum class RejectReason { none, interval, speed_ordering };

struct ConstraintCheck {
    bool accepted = true;
    RejectReason reason = RejectReason::none;
    std::string detail;

    explicit operator bool() const { return accepted; }
};

// Interval violations are reported before the speed-ordering rule.
inline ConstraintCheck check_constraints(const ParameterVector& p, const ParameterPriors& priors) {
    const auto values = p.to_array();
    for (std::size_t i = 0; i < kParamCount; ++i) {
        if (!std::isfinite(values[i]) || !priors.intervals[i].contains(values[i]))
            return {false, RejectReason::interval,
                    std::string(kParamNames[i]) + " outside [" +
                        std::to_string(priors.intervals[i].lo) + ", " +
                        std::to_string(priors.intervals[i].hi) + "]"};
    }
    if (!(p.ego_speed0 > p.target_speed0))
        return {false, RejectReason::speed_ordering, "ego_speed0 must exceed target_speed0"};
    return {};
}

// Draws independent uniform candidates from the priors.
class ParameterSampler {
public:
    ParameterSampler(ParameterPriors priors, std::uint64_t seed) : priors_(priors), rng_(seed) {
        priors_.validate();
    }

    ParameterVector draw_candidate() {
        std::array<double, kParamCount> v{};
        for (std::size_t i = 0; i < kParamCount; ++i) {
            std::uniform_real_distribution<double> u(priors_.intervals[i].lo,
                                                     priors_.intervals[i].hi);
            v[i] = u(rng_);
        }
        ++draws_;
        return ParameterVector::from_array(v);
    }

    ParameterVector draw_accepted() {
        constexpr std::uint64_t kMaxDraws = 1'000'000;
        for (std::uint64_t i = 0; i < kMaxDraws; ++i) {
            auto c = draw_candidate();
            if (check_constraints(c, priors_)) return c;
        }
        fail(ErrorKind::sampling_stalled,
             "no acceptable parameter vector after 1000000 draws");
    }

    std::uint64_t draws() const { return draws_; }

private:
    ParameterPriors priors_;
    std::mt19937_64 rng_;
    std::uint64_t draws_ = 0;
};

inline std::vector<ParameterVector> sample_parameters(const ParameterPriors& priors, std::size_t n,
                                                      std::uint64_t seed) {
    if (n == 0) fail(ErrorKind::out_of_range, "sample_parameters needs n >= 1");
    ParameterSampler sampler(priors, seed);
    std::vector<ParameterVector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.draw_accepted());
    return out;
}

}  // namespace aebsurro
