#pragma once

// Closed-form safety model for a multi-vehicle (2+) overtaking maneuver on a
// two-lane road. All positions are front-bumper longitudinal coordinates in
// meters; same-lane traffic moves towards +x, oncoming traffic towards -x.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace overtake {

using NodeId = std::uint32_t;

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class InvalidScenario : public DomainError {
public:
    using DomainError::DomainError;
};

/// The overtaker is not faster than the last vehicle it has to pass, so the
/// pass on the opposite lane never completes.
class SlowerThanLead : public DomainError {
public:
    using DomainError::DomainError;
};

enum class Lane { Right, Opposite };

inline constexpr double kMaxVehicleLength = 30.0;

struct VehicleState {
    NodeId id = 0;
    double pos_x = 0.0;
    Lane lane = Lane::Right;
    double speed = 0.0;
    double length = 4.0;

    /// Throws InvalidScenario unless speed >= 0 and 0 < length <= 30.
    void validate() const;
};

struct RoadGeometry {
    double lane_width = 3.5;
    double safety_gap = 10.0;

    void validate() const;
};

inline constexpr double kDefaultThetaRad = 10.0 * 3.14159265358979323846 / 180.0;

/// Four-role configuration: c1 overtakes, c2 is directly ahead of it, c3 is
/// the farthest same-lane vehicle to pass and c4 the nearest oncoming one.
struct OvertakeScenario {
    VehicleState c1;
    VehicleState c2;
    VehicleState c3;
    std::optional<VehicleState> c4;
    RoadGeometry road;
    double theta = kDefaultThetaRad;

    /// Checks ordering, lanes, angle range and the equal-speed assumption
    /// for c2 and c3. Throws InvalidScenario on the first violation.
    void validate() const;
};

enum class Verdict { Safe, Unsafe };

enum class UnsafeReason { None, TtoNotBelowTtc, SlowerThanLead };

struct SafetyAssessment {
    double tto = 0.0;
    double ttc = std::numeric_limits<double>::infinity();
    Verdict verdict = Verdict::Unsafe;
    UnsafeReason reason = UnsafeReason::None;
    double t_lane_change = 0.0;
    double delta_gap = 0.0;
    double opposite_lane_distance = 0.0;

    bool safe() const { return verdict == Verdict::Safe; }
};

struct TtoBreakdown {
    double tto = 0.0;
    double t_lane_change = 0.0;
    double delta_gap = 0.0;
    double opposite_lane_distance = 0.0;
    double pass_time = 0.0;
};

/// d0 + tau * |speed_i - speed_j|.
double distance_at_time(double d0, double speed_i, double speed_j, double tau);

/// Time to move one lane width sideways at angle theta.
double lane_change_time(double speed, double theta, double lane_width);

/// Time to cover `opposite_lane_distance` relative to the vehicle being passed.
double pass_time(double opposite_lane_distance, double speed_overtaker, double speed_passed);

/// Lane-out, pass, lane-in. Both lane changes take the same time.
inline double total_time_to_overtake(double t_lane_change, double t_pass)
{
    return 2.0 * t_lane_change + t_pass;
}

TtoBreakdown compute_tto(const OvertakeScenario& s);

/// +inf when there is no oncoming vehicle. Throws DomainError if both speeds are 0.
double compute_ttc(double d14, double speed_overtaker, double speed_oncoming);

SafetyAssessment assess_safety(const OvertakeScenario& s);

const char* to_string(Verdict v);
const char* to_string(UnsafeReason r);
const char* to_string(Lane l);

} // namespace overtake
