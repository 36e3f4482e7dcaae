#include "overtake/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "overtake/localization.hpp"

namespace overtake {

namespace {

void check_interval(const Interval& in, const char* what)
{
    if (!std::isfinite(in.lo) || !std::isfinite(in.hi) || in.lo > in.hi) {
        throw DomainError(std::string("spec interval ") + what + " must satisfy lo <= hi");
    }
}

double draw(Rng& rng, const Interval& in)
{
    return rng.uniform(in.lo, in.hi);
}

ScenarioSpec make_spec(std::string name, Interval fast, Interval slow, Interval d12, Interval d13,
                       std::uint64_t seed)
{
    ScenarioSpec s;
    s.name = std::move(name);
    s.overtaker_speed_kmh = fast;
    s.oncoming_speed_kmh = fast;
    s.passed_speed_kmh = slow;
    s.d12_m = d12;
    s.d13_m = d13;
    s.seed = seed;
    return s;
}

constexpr Interval kShortD12{1.0, 8.0};
constexpr Interval kShortD13{9.0, 17.0};
constexpr Interval kHighFast{100.0, 120.0};
constexpr Interval kHighSlow{80.0, 90.0};

} // namespace

void ScenarioSpec::validate() const
{
    check_interval(overtaker_speed_kmh, "overtaker_speed_kmh");
    check_interval(oncoming_speed_kmh, "oncoming_speed_kmh");
    check_interval(passed_speed_kmh, "passed_speed_kmh");
    check_interval(d12_m, "d12_m");
    check_interval(d13_m, "d13_m");
    check_interval(oncoming_offset_m, "oncoming_offset_m");
    check_interval(length_m, "length_m");
    if (overtaker_speed_kmh.lo < 0.0 || oncoming_speed_kmh.lo < 0.0 || passed_speed_kmh.lo < 0.0) {
        throw DomainError("spec speeds must be >= 0");
    }
    if (d12_m.lo < 0.0 || d13_m.lo < 0.0) {
        throw DomainError("spec gaps must be >= 0");
    }
    if (length_m.lo <= 0.0 || length_m.hi > kMaxVehicleLength) {
        throw DomainError("spec lengths must lie in (0, 30] m");
    }
    if (count == 0) {
        throw DomainError("spec count must be > 0");
    }
    road.validate();
    if (!(theta > 0.0 && theta < std::acos(0.0))) {
        throw DomainError("spec theta must be in (0, pi/2)");
    }
}

std::vector<ScenarioSpec> builtin_specs()
{
    // Velocity studies hold the short-distance gaps; distance studies hold the
    // high-velocity band.
    return {
        make_spec("velocity-low", {50.0, 60.0}, {40.0, 50.0}, kShortD12, kShortD13, 20160601),
        make_spec("velocity-medium", {70.0, 80.0}, {60.0, 70.0}, kShortD12, kShortD13, 20160602),
        make_spec("velocity-high", kHighFast, kHighSlow, kShortD12, kShortD13, 20160603),
        make_spec("distance-short", kHighFast, kHighSlow, kShortD12, kShortD13, 20160604),
        make_spec("distance-medium", kHighFast, kHighSlow, {5.0, 14.0}, {15.0, 24.0}, 20160605),
        make_spec("distance-long", kHighFast, kHighSlow, {10.0, 34.0}, {35.0, 44.0}, 20160606),
    };
}

std::optional<ScenarioSpec> builtin_spec(const std::string& name)
{
    for (auto& s : builtin_specs()) {
        if (s.name == name) {
            return s;
        }
    }
    return std::nullopt;
}

OvertakeScenario generate_scenario(const ScenarioSpec& spec, double comm_range, Rng& rng)
{
    OvertakeScenario s;
    s.road = spec.road;
    s.theta = spec.theta;

    const double v1 = kmh_to_ms(draw(rng, spec.overtaker_speed_kmh));
    const double v4 = kmh_to_ms(draw(rng, spec.oncoming_speed_kmh));
    const double v23 = kmh_to_ms(draw(rng, spec.passed_speed_kmh));

    s.c1 = {1, 0.0, Lane::Right, v1, draw(rng, spec.length_m)};
    s.c2 = {2, 0.0, Lane::Right, v23, draw(rng, spec.length_m)};
    s.c3 = {3, 0.0, Lane::Right, v23, draw(rng, spec.length_m)};

    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        const double d12 = draw(rng, spec.d12_m);
        const double d13 = draw(rng, spec.d13_m);
        // c3's rear must not be behind c2's front.
        if (d13 < d12 + s.c2.length) {
            continue;
        }
        s.c2.pos_x = d12 + s.c2.length;
        s.c3.pos_x = d13 + s.c3.length;
        placed = true;
    }
    if (!placed) {
        throw DomainError("spec '" + spec.name + "': gap intervals cannot separate c2 and c3");
    }

    const double d14 = std::max(comm_range + draw(rng, spec.oncoming_offset_m), s.c3.pos_x + 1.0);
    s.c4 = VehicleState{4, d14, Lane::Opposite, v4, draw(rng, spec.length_m)};
    s.validate();
    return s;
}

GroundTruth ground_truth(const OvertakeScenario& s, double dt)
{
    s.validate();
    if (!(dt > 0.0)) {
        throw DomainError("ground_truth: dt must be > 0");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    GroundTruth out{Verdict::Unsafe, inf, inf};

    const double v1 = s.c1.speed;
    const double forward = v1 * std::cos(s.theta);
    const double lateral = v1 * std::sin(s.theta);
    const double lane = s.road.lane_width;

    double x1 = s.c1.pos_x;
    double x2 = s.c2.pos_x;
    double x3 = s.c3.pos_x;
    double x4 = s.c4 ? s.c4->pos_x : inf;
    double y = 0.0;
    const double d12_0 = x2 - x1;
    double gap_change = 0.0;

    enum class Phase { LaneOut, Pass, LaneIn, Done } phase = Phase::LaneOut;
    const auto max_steps = static_cast<std::uint64_t>(std::ceil(kGroundTruthHorizon / dt));

    for (std::uint64_t k = 0; k <= max_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (phase == Phase::Done) {
            out.completion_time = t;
            break;
        }
        if (s.c4 && x4 - x1 <= 0.0) {
            out.collision_time = t;
            return out;
        }

        switch (phase) {
        case Phase::LaneOut:
            x1 += forward * dt;
            y += lateral * dt;
            break;
        case Phase::Pass:
            x1 += v1 * dt;
            break;
        case Phase::LaneIn:
            x1 += forward * dt;
            y -= lateral * dt;
            break;
        case Phase::Done:
            break;
        }
        x2 += s.c2.speed * dt;
        x3 += s.c3.speed * dt;
        if (s.c4) {
            x4 -= s.c4->speed * dt;
        }

        if (phase == Phase::LaneOut && y >= lane) {
            gap_change = std::abs((x2 - x1) - d12_0);
            phase = Phase::Pass;
        }
        // c1 can never pull ahead and nothing is coming.
        if (phase == Phase::Pass && !s.c4 && v1 <= s.c3.speed) {
            return out;
        }
        if (phase == Phase::Pass && (x1 - s.c1.length) - x3 >= s.road.safety_gap + gap_change) {
            phase = Phase::LaneIn;
        } else if (phase == Phase::LaneIn && y <= 0.0) {
            phase = Phase::Done;
        }
    }

    if (phase == Phase::Done && std::isfinite(out.completion_time)) {
        out.verdict = Verdict::Safe;
    }
    return out;
}

std::optional<OvertakeScenario> censor(const OvertakeScenario& s, double comm_range)
{
    const auto visible = [&](const VehicleState& v) { return std::abs(v.pos_x - s.c1.pos_x) <= comm_range; };
    if (!visible(s.c2)) {
        return std::nullopt;
    }
    OvertakeScenario view = s;
    if (!visible(s.c3)) {
        view.c3 = s.c2;
    }
    if (s.c4 && !visible(*s.c4)) {
        view.c4.reset();
    }
    return view;
}

VehicleState localize(const VehicleState& v, double lane_y, Rng& rng)
{
    constexpr double dt = 0.1;
    constexpr std::size_t steps = 31;
    const double dir = v.lane == Lane::Right ? 1.0 : -1.0;
    const double vx = dir * v.speed;
    const double duration = dt * static_cast<double>(steps - 1);

    const Vec4 start(v.pos_x - vx * duration, lane_y, vx, 0.0);
    const auto trajectory = constant_acceleration_trajectory(start, Vec2::Zero(), dt, steps);
    TrackConfig cfg;
    cfg.dt = dt;
    const auto fused = track(trajectory, cfg, rng.next());

    VehicleState out = v;
    out.pos_x = fused.back().fused.s(0);
    out.speed = std::abs(fused.back().fused.s(2));
    return out;
}

namespace {

std::optional<OvertakeScenario> localized_view(const OvertakeScenario& view, Rng& rng)
{
    OvertakeScenario est = view;
    est.c1 = localize(view.c1, 0.0, rng);
    est.c2 = localize(view.c2, 0.0, rng);
    est.c3 = view.c3.id == view.c2.id ? est.c2 : localize(view.c3, 0.0, rng);
    const double shared = 0.5 * (est.c2.speed + est.c3.speed);
    est.c2.speed = shared;
    est.c3.speed = shared;
    if (view.c4) {
        est.c4 = localize(*view.c4, view.road.lane_width, rng);
    }
    try {
        est.validate();
    } catch (const InvalidScenario&) {
        return std::nullopt;
    }
    return est;
}

SweepPoint sweep_point(const ScenarioSpec& spec, double comm_range, std::size_t index, bool with_localization)
{
    Rng rng(mix_seed(spec.seed, index));
    Rng noise(mix_seed(spec.seed ^ 0x5EED10CA11ULL, index));

    SweepPoint p;
    p.comm_range = comm_range;
    for (std::size_t n = 0; n < spec.count; ++n) {
        const OvertakeScenario full = generate_scenario(spec, comm_range, rng);
        ++p.total;
        const Verdict truth = ground_truth(full).verdict;

        std::optional<OvertakeScenario> view = censor(full, comm_range);
        if (view && with_localization) {
            view = localized_view(*view, noise);
        }
        if (!view) {
            ++p.excluded;
            continue;
        }
        const Verdict predicted = assess_safety(*view).verdict;
        if (predicted == truth) {
            continue;
        }
        if (predicted == Verdict::Safe) {
            ++p.false_safe;
        } else {
            ++p.false_unsafe;
        }
    }
    p.mispredictions = p.false_safe + p.false_unsafe;
    return p;
}

} // namespace

std::vector<double> make_range_grid(double lo, double hi, double step)
{
    if (!(step > 0.0) || !(hi >= lo) || !(lo > 0.0)) {
        throw DomainError("range grid needs 0 < lo <= hi and step > 0");
    }
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(lo + static_cast<double>(i) * step);
    }
    return out;
}

SweepResult run_sweep(const ScenarioSpec& spec, const std::vector<double>& range_grid, const SweepOptions& opts)
{
    spec.validate();
    if (range_grid.empty()) {
        throw DomainError("run_sweep: empty range grid");
    }
    for (double r : range_grid) {
        if (!(r > 0.0)) {
            throw DomainError("run_sweep: communication ranges must be > 0");
        }
    }

    SweepResult out;
    out.name = spec.name;
    out.with_localization = opts.with_localization;
    out.points.resize(range_grid.size());

    unsigned threads = opts.threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : opts.threads;
    threads = std::min<unsigned>(threads, static_cast<unsigned>(range_grid.size()));

    if (threads <= 1) {
        for (std::size_t i = 0; i < range_grid.size(); ++i) {
            out.points[i] = sweep_point(spec, range_grid[i], i, opts.with_localization);
        }
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next++; i < range_grid.size(); i = next++) {
                        out.points[i] = sweep_point(spec, range_grid[i], i, opts.with_localization);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

double trend_ratio(const SweepResult& r, double low_max, double high_min)
{
    double low = 0.0;
    double high = 0.0;
    std::size_t n_low = 0;
    std::size_t n_high = 0;
    for (const auto& p : r.points) {
        if (p.comm_range <= low_max) {
            low += static_cast<double>(p.mispredictions);
            ++n_low;
        }
        if (p.comm_range >= high_min) {
            high += static_cast<double>(p.mispredictions);
            ++n_high;
        }
    }
    if (n_low == 0 || n_high == 0) {
        throw DomainError("trend_ratio: grid does not cover both ends");
    }
    low /= static_cast<double>(n_low);
    high /= static_cast<double>(n_high);
    if (low == 0.0) {
        return high == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return high / low;
}

bool false_safe_non_increasing(const SweepResult& r, double sigmas)
{
    for (std::size_t i = 1; i < r.points.size(); ++i) {
        const auto& prev = r.points[i - 1];
        const auto& cur = r.points[i];
        const double n_prev = static_cast<double>(prev.total);
        const double n_cur = static_cast<double>(cur.total);
        if (n_prev == 0.0 || n_cur == 0.0) {
            continue;
        }
        // Pooled rate under the null of no change between the two points.
        const double pooled = static_cast<double>(prev.false_safe + cur.false_safe) / (n_prev + n_cur);
        const double var = pooled * (1.0 - pooled) * (n_prev + n_cur);
        const double rise = static_cast<double>(cur.false_safe) - static_cast<double>(prev.false_safe);
        if (rise > sigmas * std::sqrt(var)) {
            return false;
        }
    }
    return true;
}

} // namespace overtake
