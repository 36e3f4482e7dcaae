#pragma once

// Test-only helpers: a random scenario generator for property tests and a
// fine-step maneuver simulation that shares no code with the closed-form model.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "overtake/kinematics.hpp"
#include "overtake/rng.hpp"

namespace overtake::testing {

inline double deg(double d)
{
    return d * std::numbers::pi / 180.0;
}

/// Full-information scenario with a broad spread of geometry. About 5% have
/// an overtaker no faster than the vehicles ahead and 10% have no oncoming car.
inline OvertakeScenario random_scenario(Rng& rng)
{
    OvertakeScenario s;
    s.theta = deg(rng.uniform(5.0, 20.0));
    s.road.lane_width = rng.uniform(3.0, 4.0);
    s.road.safety_gap = rng.uniform(5.0, 15.0);

    const double v1 = rng.uniform(15.0, 35.0);
    const double v23 = rng.bernoulli(0.05) ? rng.uniform(v1, v1 + 5.0) : rng.uniform(10.0, v1 - 0.5);
    s.c1 = {1, rng.uniform(-100.0, 100.0), Lane::Right, v1, rng.uniform(3.0, 18.0)};
    const double d12 = rng.uniform(1.0, 40.0);
    s.c2 = {2, 0.0, Lane::Right, v23, rng.uniform(3.0, 18.0)};
    s.c2.pos_x = s.c1.pos_x + d12 + s.c2.length;
    s.c3 = {3, 0.0, Lane::Right, v23, rng.uniform(3.0, 18.0)};
    s.c3.pos_x = s.c2.pos_x + rng.uniform(0.0, 60.0) + s.c3.length;
    if (!rng.bernoulli(0.1)) {
        s.c4 = VehicleState{4, s.c1.pos_x + rng.uniform(50.0, 1500.0), Lane::Opposite, rng.uniform(10.0, 35.0),
                            rng.uniform(3.0, 18.0)};
    }
    return s;
}

/// Steps lane-out at angle theta, the pass and lane-in, returning how long
/// the overtaker spends off its lane (+inf if the pass never ends within
/// `horizon`). Lane-in starts once the overtaker's rear leads c3's front by
/// the safety gap plus the c1-c2 gap change seen during lane-out.
inline double simulated_maneuver_time(const OvertakeScenario& s, double dt, double horizon = 3600.0)
{
    const double vx = s.c1.speed * std::cos(s.theta);
    const double vy = s.c1.speed * std::sin(s.theta);
    double t = 0.0;
    double x1 = s.c1.pos_x;
    double x2 = s.c2.pos_x;
    double x3 = s.c3.pos_x;
    double lateral = 0.0;
    int phase = 0;
    double margin = s.road.safety_gap;
    const double gap0 = x2 - x1;
    for (long k = 1; static_cast<double>(k) * dt <= horizon; ++k) {
        t = static_cast<double>(k) * dt;
        x1 += (phase == 1 ? s.c1.speed : vx) * dt;
        x2 += s.c2.speed * dt;
        x3 += s.c3.speed * dt;
        if (phase == 0) {
            lateral += vy * dt;
            if (lateral >= s.road.lane_width) {
                margin += std::abs((x2 - x1) - gap0);
                phase = 1;
            }
        } else if (phase == 2) {
            lateral -= vy * dt;
            if (lateral <= 0.0) {
                return t;
            }
        }
        if (phase == 1 && x1 - s.c1.length - x3 >= margin) {
            phase = 2;
        }
    }
    return std::numeric_limits<double>::infinity();
}

} // namespace overtake::testing
