#pragma once

// File formats: scenario / spec / world documents (JSON), protocol messages
// (one JSON object per trace line) and the sweep CSV.

#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "overtake/harness.hpp"
#include "overtake/kinematics.hpp"
#include "overtake/netsim.hpp"
#include "overtake/protocol.hpp"

namespace overtake {

/// Malformed input. what() names the line or the offending field.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses JSON text; syntax errors report the 1-based line and column.
nlohmann::json parse_json(const std::string& text, const std::string& source);
nlohmann::json read_json_file(const std::string& path);

nlohmann::json message_to_json(const Message& m);
Message message_from_json(const nlohmann::json& j);

OvertakeScenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const OvertakeScenario& s);
nlohmann::json assessment_to_json(const SafetyAssessment& a);

ScenarioSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ScenarioSpec& s);

struct ProtocolRun {
    World world;
    SimConfig sim;
    double horizon = 10.0;
};

ProtocolRun protocol_run_from_json(const nlohmann::json& j);

inline constexpr const char* kSweepCsvHeader = "comm_range_m,total,mispredictions,false_safe,false_unsafe";

void write_sweep_csv(std::ostream& os, const SweepResult& r);

} // namespace overtake
