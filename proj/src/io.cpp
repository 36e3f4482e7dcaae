#include "overtake/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace overtake {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

const json& field(const json& j, const std::string& path, const std::string& key)
{
    if (!j.is_object()) {
        throw ParseError("field '" + (path.empty() ? std::string("<root>") : path) + "': expected an object");
    }
    const auto it = j.find(key);
    if (it == j.end()) {
        throw ParseError("field '" + join(path, key) + "': missing");
    }
    return *it;
}

double number(const json& j, const std::string& path, const std::string& key)
{
    const json& v = field(j, path, key);
    if (!v.is_number()) {
        throw ParseError("field '" + join(path, key) + "': expected a number");
    }
    return v.get<double>();
}

double number_or(const json& j, const std::string& path, const std::string& key, double fallback)
{
    return j.contains(key) ? number(j, path, key) : fallback;
}

std::uint64_t unsigned_or(const json& j, const std::string& path, const std::string& key, std::uint64_t fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw ParseError("field '" + join(path, key) + "': expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::string string_or(const json& j, const std::string& path, const std::string& key, const std::string& fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_string()) {
        throw ParseError("field '" + join(path, key) + "': expected a string");
    }
    return v.get<std::string>();
}

Interval interval(const json& j, const std::string& path, const std::string& key)
{
    const json& v = field(j, path, key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ParseError("field '" + join(path, key) + "': expected [lo, hi]");
    }
    Interval out{v[0].get<double>(), v[1].get<double>()};
    if (out.lo > out.hi) {
        throw ParseError("field '" + join(path, key) + "': lo > hi");
    }
    return out;
}

Interval interval_or(const json& j, const std::string& path, const std::string& key, Interval fallback)
{
    return j.contains(key) ? interval(j, path, key) : fallback;
}

Lane lane_from(const json& j, const std::string& path, Lane fallback)
{
    const std::string s = string_or(j, path, "lane", fallback == Lane::Right ? "right" : "opposite");
    if (s == "right") {
        return Lane::Right;
    }
    if (s == "opposite") {
        return Lane::Opposite;
    }
    throw ParseError("field '" + join(path, "lane") + "': expected \"right\" or \"opposite\"");
}

VehicleState vehicle_from(const json& j, const std::string& path, NodeId default_id, Lane default_lane)
{
    VehicleState v;
    v.id = static_cast<NodeId>(unsigned_or(j, path, "id", default_id));
    v.pos_x = number(j, path, "pos_x");
    v.lane = lane_from(j, path, default_lane);
    v.speed = number(j, path, "speed");
    v.length = number_or(j, path, "length", 4.0);
    return v;
}

json vehicle_to_json(const VehicleState& v)
{
    return {{"id", v.id}, {"pos_x", v.pos_x}, {"lane", to_string(v.lane)}, {"speed", v.speed}, {"length", v.length}};
}

double theta_from(const json& j, const std::string& path)
{
    if (j.contains("theta_rad")) {
        return number(j, path, "theta_rad");
    }
    if (j.contains("theta_deg")) {
        return number(j, path, "theta_deg") * std::numbers::pi / 180.0;
    }
    return kDefaultThetaRad;
}

RoadGeometry road_from(const json& j, const std::string& path)
{
    RoadGeometry r;
    r.lane_width = number_or(j, path, "lane_width_m", r.lane_width);
    r.safety_gap = number_or(j, path, "safety_gap_m", r.safety_gap);
    return r;
}

json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

} // namespace

json parse_json(const std::string& text, const std::string& source)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t end = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
    }
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path + ": cannot open file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json(buf.str(), path);
}

json message_to_json(const Message& m)
{
    return {{"kind", to_string(m.kind)},
            {"sender", m.sender},
            {"request_id", m.request_id},
            {"timestamp", m.timestamp},
            {"maneuver", {{"overtaker_id", m.maneuver.overtaker_id}, {"tto_s", m.maneuver.tto_s}}}};
}

Message message_from_json(const json& j)
{
    Message m;
    const std::string kind = string_or(j, "", "kind", "");
    if (kind == "Intent") {
        m.kind = MessageKind::Intent;
    } else if (kind == "Ack") {
        m.kind = MessageKind::Ack;
    } else if (kind == "Nack") {
        m.kind = MessageKind::Nack;
    } else {
        throw ParseError("field 'kind': expected Intent, Ack or Nack");
    }
    m.sender = static_cast<NodeId>(unsigned_or(j, "", "sender", 0));
    m.request_id = static_cast<std::uint32_t>(unsigned_or(j, "", "request_id", 0));
    m.timestamp = number(j, "", "timestamp");
    const json& man = field(j, "", "maneuver");
    m.maneuver.overtaker_id = static_cast<NodeId>(unsigned_or(man, "maneuver", "overtaker_id", 0));
    m.maneuver.tto_s = number(man, "maneuver", "tto_s");
    return m;
}

OvertakeScenario scenario_from_json(const json& j)
{
    OvertakeScenario s;
    s.theta = theta_from(j, "");
    if (j.contains("road")) {
        s.road = road_from(j.at("road"), "road");
    }
    const json& v = field(j, "", "vehicles");
    s.c1 = vehicle_from(field(v, "vehicles", "c1"), "vehicles.c1", 1, Lane::Right);
    s.c2 = vehicle_from(field(v, "vehicles", "c2"), "vehicles.c2", 2, Lane::Right);
    s.c3 = vehicle_from(field(v, "vehicles", "c3"), "vehicles.c3", 3, Lane::Right);
    if (v.contains("c4") && !v.at("c4").is_null()) {
        s.c4 = vehicle_from(v.at("c4"), "vehicles.c4", 4, Lane::Opposite);
    }
    s.validate();
    return s;
}

json scenario_to_json(const OvertakeScenario& s)
{
    json v = {{"c1", vehicle_to_json(s.c1)}, {"c2", vehicle_to_json(s.c2)}, {"c3", vehicle_to_json(s.c3)}};
    if (s.c4) {
        v["c4"] = vehicle_to_json(*s.c4);
    }
    return {{"theta_rad", s.theta},
            {"road", {{"lane_width_m", s.road.lane_width}, {"safety_gap_m", s.road.safety_gap}}},
            {"vehicles", v}};
}

json assessment_to_json(const SafetyAssessment& a)
{
    return {{"tto_s", finite_or_null(a.tto)},
            {"ttc_s", finite_or_null(a.ttc)},
            {"verdict", to_string(a.verdict)},
            {"reason", to_string(a.reason)},
            {"t_lane_change_s", a.t_lane_change},
            {"delta_gap_m", a.delta_gap},
            {"opposite_lane_distance_m", a.opposite_lane_distance}};
}

ScenarioSpec spec_from_json(const json& j)
{
    ScenarioSpec s;
    s.name = string_or(j, "", "name", "custom");
    s.overtaker_speed_kmh = interval(j, "", "overtaker_speed_kmh");
    s.oncoming_speed_kmh = interval(j, "", "oncoming_speed_kmh");
    s.passed_speed_kmh = interval(j, "", "passed_speed_kmh");
    s.d12_m = interval(j, "", "d12_m");
    s.d13_m = interval(j, "", "d13_m");
    s.oncoming_offset_m = interval_or(j, "", "oncoming_offset_m", s.oncoming_offset_m);
    s.length_m = interval_or(j, "", "length_m", s.length_m);
    s.road.lane_width = number_or(j, "", "lane_width_m", s.road.lane_width);
    s.road.safety_gap = number_or(j, "", "safety_gap_m", s.road.safety_gap);
    s.theta = theta_from(j, "");
    s.count = static_cast<std::size_t>(unsigned_or(j, "", "count", s.count));
    s.seed = unsigned_or(j, "", "seed", s.seed);
    s.validate();
    return s;
}

json spec_to_json(const ScenarioSpec& s)
{
    const auto iv = [](const Interval& i) { return json::array({i.lo, i.hi}); };
    return {{"name", s.name},
            {"overtaker_speed_kmh", iv(s.overtaker_speed_kmh)},
            {"oncoming_speed_kmh", iv(s.oncoming_speed_kmh)},
            {"passed_speed_kmh", iv(s.passed_speed_kmh)},
            {"d12_m", iv(s.d12_m)},
            {"d13_m", iv(s.d13_m)},
            {"oncoming_offset_m", iv(s.oncoming_offset_m)},
            {"length_m", iv(s.length_m)},
            {"lane_width_m", s.road.lane_width},
            {"safety_gap_m", s.road.safety_gap},
            {"theta_deg", s.theta * 180.0 / std::numbers::pi},
            {"count", s.count},
            {"seed", s.seed}};
}

ProtocolRun protocol_run_from_json(const json& j)
{
    ProtocolRun run;
    run.sim.comm_range = number_or(j, "", "comm_range_m", run.sim.comm_range);
    run.sim.loss_prob = number_or(j, "", "loss_prob", run.sim.loss_prob);
    if (j.contains("latency_s")) {
        const json& lat = j.at("latency_s");
        if (lat.is_number()) {
            run.sim.latency = {lat.get<double>(), lat.get<double>()};
        } else {
            const Interval i = interval(j, "", "latency_s");
            run.sim.latency = {i.lo, i.hi};
        }
    }
    run.sim.tick = number_or(j, "", "tick_s", run.sim.tick);
    run.sim.seed = unsigned_or(j, "", "seed", run.sim.seed);
    run.horizon = number_or(j, "", "horizon_s", run.horizon);

    if (j.contains("protocol")) {
        const json& p = j.at("protocol");
        run.world.protocol.response_timeout =
            number_or(p, "protocol", "response_timeout_s", run.world.protocol.response_timeout);
        run.world.protocol.max_retries = static_cast<std::uint32_t>(
            unsigned_or(p, "protocol", "max_retries", run.world.protocol.max_retries));
        run.world.protocol.commitment_factor =
            number_or(p, "protocol", "commitment_factor", run.world.protocol.commitment_factor);
    }

    const json& vehicles = field(j, "", "vehicles");
    if (!vehicles.is_array()) {
        throw ParseError("field 'vehicles': expected an array");
    }
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        const std::string path = "vehicles[" + std::to_string(i) + "]";
        VehicleState v = vehicle_from(vehicles[i], path, static_cast<NodeId>(i + 1), Lane::Right);
        v.validate();
        run.world.vehicles.push_back(v);
    }

    if (j.contains("intents")) {
        const json& intents = j.at("intents");
        if (!intents.is_array()) {
            throw ParseError("field 'intents': expected an array");
        }
        for (std::size_t i = 0; i < intents.size(); ++i) {
            const std::string path = "intents[" + std::to_string(i) + "]";
            ScriptedIntent in;
            in.node = static_cast<NodeId>(unsigned_or(intents[i], path, "node", 0));
            in.at = number(intents[i], path, "at");
            in.tto_s = number(intents[i], path, "tto_s");
            const std::string verdict = string_or(intents[i], path, "verdict", "Safe");
            if (verdict != "Safe" && verdict != "Unsafe") {
                throw ParseError("field '" + join(path, "verdict") + "': expected Safe or Unsafe");
            }
            in.verdict = verdict == "Safe" ? Verdict::Safe : Verdict::Unsafe;
            run.world.intents.push_back(in);
        }
    }
    run.sim.validate();
    run.world.protocol.validate();
    if (!(run.horizon > 0.0)) {
        throw ParseError("field 'horizon_s': must be > 0");
    }
    return run;
}

void write_sweep_csv(std::ostream& os, const SweepResult& r)
{
    os << kSweepCsvHeader << '\n';
    for (const auto& p : r.points) {
        std::ostringstream range;
        range.precision(10);
        range << p.comm_range;
        os << range.str() << ',' << p.total << ',' << p.mispredictions << ',' << p.false_safe << ','
           << p.false_unsafe << '\n';
    }
}

} // namespace overtake
