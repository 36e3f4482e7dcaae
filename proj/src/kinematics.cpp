#include "overtake/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace overtake {

namespace {

void require(bool cond, const std::string& what)
{
    if (!cond) {
        throw InvalidScenario(what);
    }
}

bool nearly_equal(double a, double b)
{
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace

void VehicleState::validate() const
{
    require(std::isfinite(pos_x), "vehicle " + std::to_string(id) + ": non-finite position");
    require(std::isfinite(speed) && speed >= 0.0, "vehicle " + std::to_string(id) + ": speed must be >= 0");
    require(std::isfinite(length) && length > 0.0 && length <= kMaxVehicleLength,
            "vehicle " + std::to_string(id) + ": length must be in (0, 30] m");
}

void RoadGeometry::validate() const
{
    require(std::isfinite(lane_width) && lane_width > 0.0, "lane_width must be > 0");
    require(std::isfinite(safety_gap) && safety_gap >= 0.0, "safety_gap must be >= 0");
}

void OvertakeScenario::validate() const
{
    c1.validate();
    c2.validate();
    c3.validate();
    road.validate();
    require(theta > 0.0 && theta < std::numbers::pi / 2.0, "theta must be in (0, pi/2)");
    require(c1.lane == Lane::Right && c2.lane == Lane::Right && c3.lane == Lane::Right,
            "c1, c2 and c3 must travel on the right lane");
    require(c2.pos_x > c1.pos_x, "c2 must be ahead of c1");
    require(c3.pos_x >= c2.pos_x, "c3 must not be behind c2");
    require(nearly_equal(c2.speed, c3.speed), "c2 and c3 must travel at equal speed");
    if (c4) {
        c4->validate();
        require(c4->lane == Lane::Opposite, "c4 must travel on the opposite lane");
        require(c4->pos_x > c1.pos_x, "c4 must be ahead of c1");
    }
}

double distance_at_time(double d0, double speed_i, double speed_j, double tau)
{
    if (!(d0 >= 0.0) || !(speed_i >= 0.0) || !(speed_j >= 0.0) || !(tau >= 0.0)) {
        throw DomainError("distance_at_time: arguments must be non-negative");
    }
    return d0 + tau * std::abs(speed_i - speed_j);
}

double lane_change_time(double speed, double theta, double lane_width)
{
    if (!(speed > 0.0) || !(lane_width > 0.0)) {
        throw DomainError("lane_change_time: speed and lane width must be > 0");
    }
    if (!(theta > 0.0) || theta > std::numbers::pi / 2.0) {
        throw DomainError("lane_change_time: theta must be in (0, pi/2]");
    }
    const double lateral = speed * std::sin(theta);
    if (!(lateral > 0.0)) {
        throw DomainError("lane_change_time: vehicle never reaches the opposite lane");
    }
    const double t = lane_width / lateral;
    if (!std::isfinite(t)) {
        throw DomainError("lane_change_time: vehicle never reaches the opposite lane");
    }
    return t;
}

double pass_time(double opposite_lane_distance, double speed_overtaker, double speed_passed)
{
    const double closing = speed_overtaker - speed_passed;
    if (!(closing > 0.0)) {
        throw SlowerThanLead("overtaker is not faster than the vehicle being passed");
    }
    return opposite_lane_distance / closing;
}

TtoBreakdown compute_tto(const OvertakeScenario& s)
{
    s.validate();
    if (!(s.c1.speed > s.c3.speed)) {
        throw SlowerThanLead("overtaker is not faster than the farthest vehicle to pass");
    }

    TtoBreakdown out;
    out.t_lane_change = lane_change_time(s.c1.speed, s.theta, s.road.lane_width);
    const double forward = s.c1.speed * std::cos(s.theta);

    // Signed relative motion during lane-out; the gap to c2 may grow or shrink.
    const double d12_0 = s.c2.pos_x - s.c1.pos_x;
    const double d12_1 = d12_0 + (s.c2.speed - forward) * out.t_lane_change;
    out.delta_gap = std::abs(d12_1 - d12_0);

    const double d13_1 = (s.c3.pos_x - s.c1.pos_x) + (s.c3.speed - forward) * out.t_lane_change;
    out.opposite_lane_distance = d13_1 + s.c1.length + s.road.safety_gap + out.delta_gap;
    out.pass_time = pass_time(out.opposite_lane_distance, s.c1.speed, s.c3.speed);
    out.tto = total_time_to_overtake(out.t_lane_change, out.pass_time);
    return out;
}

double compute_ttc(double d14, double speed_overtaker, double speed_oncoming)
{
    if (!(d14 >= 0.0) || !(speed_overtaker >= 0.0) || !(speed_oncoming >= 0.0)) {
        throw DomainError("compute_ttc: arguments must be non-negative");
    }
    const double closing = speed_overtaker + speed_oncoming;
    if (!(closing > 0.0)) {
        throw DomainError("compute_ttc: both vehicles are stationary");
    }
    return d14 / closing;
}

SafetyAssessment assess_safety(const OvertakeScenario& s)
{
    s.validate();
    SafetyAssessment out;
    if (s.c4) {
        out.ttc = compute_ttc(s.c4->pos_x - s.c1.pos_x, s.c1.speed, s.c4->speed);
    }

    TtoBreakdown tto;
    try {
        tto = compute_tto(s);
    } catch (const SlowerThanLead&) {
        out.tto = std::numeric_limits<double>::infinity();
        out.verdict = Verdict::Unsafe;
        out.reason = UnsafeReason::SlowerThanLead;
        return out;
    }

    out.tto = tto.tto;
    out.t_lane_change = tto.t_lane_change;
    out.delta_gap = tto.delta_gap;
    out.opposite_lane_distance = tto.opposite_lane_distance;
    if (out.tto < out.ttc) {
        out.verdict = Verdict::Safe;
        out.reason = UnsafeReason::None;
    } else {
        out.verdict = Verdict::Unsafe;
        out.reason = UnsafeReason::TtoNotBelowTtc;
    }
    return out;
}

const char* to_string(Verdict v)
{
    return v == Verdict::Safe ? "Safe" : "Unsafe";
}

const char* to_string(UnsafeReason r)
{
    switch (r) {
    case UnsafeReason::None:
        return "none";
    case UnsafeReason::TtoNotBelowTtc:
        return "tto_not_below_ttc";
    case UnsafeReason::SlowerThanLead:
        return "slower_than_lead";
    }
    return "unknown";
}

const char* to_string(Lane l)
{
    return l == Lane::Right ? "right" : "opposite";
}

} // namespace overtake
