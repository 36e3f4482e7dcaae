#pragma once

// Overtaking-intention handshake. The overtaker broadcasts an Intent tagged
// with a request id; every neighbor answers Ack (commits to constant speed)
// or Nack (knows of a conflicting maneuver). Resends bump the request id and
// responses carrying any other id are discarded.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "overtake/kinematics.hpp"

namespace overtake {

enum class MessageKind { Intent, Ack, Nack };

struct ManeuverSummary {
    NodeId overtaker_id = 0;
    double tto_s = 0.0;

    bool operator==(const ManeuverSummary&) const = default;
};

struct Message {
    MessageKind kind = MessageKind::Intent;
    NodeId sender = 0;
    std::uint32_t request_id = 0;
    double timestamp = 0.0;
    ManeuverSummary maneuver;

    bool operator==(const Message&) const = default;
};

struct ProtocolConfig {
    double response_timeout = 0.5;
    std::uint32_t max_retries = 2;

    /// Responders stay committed for this multiple of the announced TTO.
    double commitment_factor = 1.5;

    bool operator==(const ProtocolConfig&) const = default;

    void validate() const;
};

enum class Decision { None, Proceed, Abort };

enum class OvertakerState { Idle, AwaitingResponses, Proceed, Abort };

/// Raised by initiate() when the safety model does not predict a safe maneuver.
class UnsafeInitiation : public DomainError {
public:
    using DomainError::DomainError;
};

struct OvertakerFsm {
    NodeId self = 0;
    OvertakerState state = OvertakerState::Idle;
    std::uint32_t current_request_id = 0;
    std::set<NodeId> neighbors;
    std::set<NodeId> pending;
    std::uint32_t retries_left = 0;
    double deadline = 0.0;
    double tto_s = 0.0;
    bool nack_received = false;
    ProtocolConfig cfg;

    bool operator==(const OvertakerFsm&) const = default;

    bool finished() const { return state == OvertakerState::Proceed || state == OvertakerState::Abort; }

    /// Handles an Ack/Nack. Responses for another request id, for another
    /// overtaker, or arriving outside AwaitingResponses leave the FSM untouched.
    Decision on_message(const Message& msg, double now);

    /// Called at or after the deadline. Returns the rebroadcast Intent, if any.
    /// `fresh_neighbors` replaces the neighbor set for the resend when given.
    std::optional<Message> on_timeout(const SafetyAssessment& fresh_assessment, double now, Decision& decision,
                                      const std::optional<std::set<NodeId>>& fresh_neighbors = std::nullopt);

    Message make_intent(double now) const;
};

struct Initiation {
    OvertakerFsm fsm;
    Message intent;
    Decision decision = Decision::None;
};

/// Starts a handshake with request id 0. An empty neighbor set proceeds at once.
Initiation initiate(NodeId self, const SafetyAssessment& assessment, const std::set<NodeId>& neighbors,
                    const ProtocolConfig& cfg, double now);

enum class ResponderState { Free, CommittedConstantSpeed, EngagedInManeuver };

/// A maneuver a node knows is (or may be) under way until `until`.
struct KnownManeuver {
    NodeId overtaker_id = 0;
    double until = 0.0;

    bool operator==(const KnownManeuver&) const = default;
};

struct ResponderFsm {
    NodeId self = 0;
    ResponderState state = ResponderState::Free;
    double commitment_until = 0.0;

    bool operator==(const ResponderFsm&) const = default;

    /// Drops an expired commitment or own maneuver.
    void expire(double now);
};

struct Response {
    ResponderFsm fsm;
    Message reply;
};

/// Nack if `knowledge` holds an unexpired maneuver by another overtaker or the
/// responder is itself overtaking; otherwise Ack and commit to constant speed.
Response responder_on_intent(const ResponderFsm& fsm, const Message& msg,
                             const std::vector<KnownManeuver>& knowledge, double now,
                             const ProtocolConfig& cfg = {});

const char* to_string(MessageKind k);
const char* to_string(Decision d);
const char* to_string(OvertakerState s);
const char* to_string(ResponderState s);

} // namespace overtake
