#pragma once

// Monte Carlo mis-prediction experiments: random four-vehicle scenarios, a
// fine-step ground-truth oracle, range censoring of the predictor's view and
// the communication-range sweep.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "overtake/kinematics.hpp"
#include "overtake/rng.hpp"

namespace overtake {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool operator==(const Interval&) const = default;
};

/// Speeds in km/h, distances in meters. Gaps are bumper to bumper, measured
/// from the overtaker's front: d12 to the rear of c2, d13 to the rear of c3.
/// The oncoming vehicle starts comm_range + oncoming_offset ahead of c1.
struct ScenarioSpec {
    std::string name;
    Interval overtaker_speed_kmh;
    Interval oncoming_speed_kmh;
    Interval passed_speed_kmh;
    Interval d12_m;
    Interval d13_m;
    Interval oncoming_offset_m{-15.0, 15.0};
    Interval length_m{3.5, 5.0};
    RoadGeometry road;
    double theta = kDefaultThetaRad;
    std::size_t count = 500;
    std::uint64_t seed = 1;

    void validate() const;
};

/// The six studies: three velocity bands and three distance bands.
std::vector<ScenarioSpec> builtin_specs();
std::optional<ScenarioSpec> builtin_spec(const std::string& name);

inline double kmh_to_ms(double kmh) { return kmh / 3.6; }

/// Draws one scenario. Gap draws that would make c2 and c3 overlap are
/// redrawn; throws DomainError after 1000 failed attempts.
OvertakeScenario generate_scenario(const ScenarioSpec& spec, double comm_range, Rng& rng);

struct GroundTruth {
    Verdict verdict = Verdict::Unsafe;
    /// Time c1 is fully back on its lane; +inf if it never gets there.
    double completion_time = 0.0;
    /// First instant the front bumpers of c1 and c4 meet while c1 is off its lane.
    double collision_time = 0.0;
};

inline constexpr double kGroundTruthStep = 0.01;
inline constexpr double kGroundTruthHorizon = 36000.0;

/// Forward simulation of lane-out, pass and lane-in. Lane-in starts once the
/// rear of c1 leads the front of c3 by the safety gap plus the c1-c2 gap
/// change observed during lane-out. A pass longer than the horizon counts
/// as never completing.
GroundTruth ground_truth(const OvertakeScenario& s, double dt = kGroundTruthStep);

/// What the overtaker can see within comm_range. nullopt when even c2 is out
/// of range (no overtake is attempted).
std::optional<OvertakeScenario> censor(const OvertakeScenario& s, double comm_range);

struct SweepPoint {
    double comm_range = 0.0;
    std::size_t total = 0;
    std::size_t mispredictions = 0;
    std::size_t false_safe = 0;
    std::size_t false_unsafe = 0;
    std::size_t excluded = 0;

    bool operator==(const SweepPoint&) const = default;
};

struct SweepResult {
    std::string name;
    bool with_localization = false;
    std::vector<SweepPoint> points;

    bool operator==(const SweepResult&) const = default;
};

struct SweepOptions {
    bool with_localization = false;
    /// 0 picks the hardware concurrency; 1 runs serially.
    unsigned threads = 0;
};

/// Inclusive grid lo, lo + step, ..., hi.
std::vector<double> make_range_grid(double lo, double hi, double step);

SweepResult run_sweep(const ScenarioSpec& spec, const std::vector<double>& range_grid, const SweepOptions& opts = {});

/// Mean mispredictions over points with range >= high_min divided by the mean
/// over points with range <= low_max.
double trend_ratio(const SweepResult& r, double low_max = 300.0, double high_min = 700.0);

/// Every consecutive increase of false_safe stays within `sigmas` binomial
/// standard errors of the difference.
bool false_safe_non_increasing(const SweepResult& r, double sigmas = 3.0);

/// Noisy GPS fixes for a short constant-speed run, fused by the Kalman
/// filter; returns the vehicle with estimated position and speed.
VehicleState localize(const VehicleState& v, double lane_y, Rng& rng);

} // namespace overtake
