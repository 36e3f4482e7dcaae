#include "overtake/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace overtake {

void ProtocolConfig::validate() const
{
    if (!(response_timeout > 0.0) || !std::isfinite(response_timeout)) {
        throw DomainError("response_timeout must be > 0");
    }
    if (!(commitment_factor > 0.0)) {
        throw DomainError("commitment_factor must be > 0");
    }
}

Message OvertakerFsm::make_intent(double now) const
{
    Message m;
    m.kind = MessageKind::Intent;
    m.sender = self;
    m.request_id = current_request_id;
    m.timestamp = now;
    m.maneuver = {self, tto_s};
    return m;
}

Initiation initiate(NodeId self, const SafetyAssessment& assessment, const std::set<NodeId>& neighbors,
                    const ProtocolConfig& cfg, double now)
{
    cfg.validate();
    if (!assessment.safe()) {
        throw UnsafeInitiation("refusing to announce an overtake the safety model rejects");
    }

    Initiation out;
    auto& fsm = out.fsm;
    fsm.self = self;
    fsm.cfg = cfg;
    fsm.current_request_id = 0;
    fsm.neighbors = neighbors;
    fsm.neighbors.erase(self);
    fsm.pending = fsm.neighbors;
    fsm.retries_left = cfg.max_retries;
    fsm.tto_s = assessment.tto;
    fsm.deadline = now + cfg.response_timeout;
    out.intent = fsm.make_intent(now);

    if (fsm.pending.empty()) {
        fsm.state = OvertakerState::Proceed;
        out.decision = Decision::Proceed;
    } else {
        fsm.state = OvertakerState::AwaitingResponses;
    }
    return out;
}

Decision OvertakerFsm::on_message(const Message& msg, double /*now*/)
{
    if (state != OvertakerState::AwaitingResponses) {
        return Decision::None;
    }
    if (msg.kind == MessageKind::Intent || msg.maneuver.overtaker_id != self) {
        return Decision::None;
    }
    if (msg.request_id != current_request_id) {
        return Decision::None;
    }

    if (msg.kind == MessageKind::Nack) {
        nack_received = true;
        state = OvertakerState::Abort;
        return Decision::Abort;
    }

    if (pending.erase(msg.sender) == 0) {
        return Decision::None;
    }
    if (pending.empty()) {
        state = OvertakerState::Proceed;
        return Decision::Proceed;
    }
    return Decision::None;
}

std::optional<Message> OvertakerFsm::on_timeout(const SafetyAssessment& fresh_assessment, double now,
                                                Decision& decision,
                                                const std::optional<std::set<NodeId>>& fresh_neighbors)
{
    decision = Decision::None;
    if (state != OvertakerState::AwaitingResponses || now < deadline) {
        return std::nullopt;
    }
    if (retries_left == 0 || !fresh_assessment.safe()) {
        state = OvertakerState::Abort;
        decision = Decision::Abort;
        return std::nullopt;
    }

    --retries_left;
    ++current_request_id;
    if (fresh_neighbors) {
        neighbors = *fresh_neighbors;
        neighbors.erase(self);
    }
    // Responses to earlier ids never count towards the new request.
    pending = neighbors;
    tto_s = fresh_assessment.tto;
    deadline = now + cfg.response_timeout;
    Message intent = make_intent(now);
    if (pending.empty()) {
        state = OvertakerState::Proceed;
        decision = Decision::Proceed;
    }
    return intent;
}

void ResponderFsm::expire(double now)
{
    if (state != ResponderState::Free && now >= commitment_until) {
        state = ResponderState::Free;
    }
}

Response responder_on_intent(const ResponderFsm& fsm, const Message& msg,
                             const std::vector<KnownManeuver>& knowledge, double now, const ProtocolConfig& cfg)
{
    if (msg.kind != MessageKind::Intent) {
        throw DomainError("responder_on_intent: message is not an Intent");
    }

    Response out{fsm, {}};
    out.fsm.expire(now);

    const NodeId requester = msg.maneuver.overtaker_id;
    const bool conflict =
        out.fsm.state == ResponderState::EngagedInManeuver ||
        std::any_of(knowledge.begin(), knowledge.end(), [&](const KnownManeuver& k) {
            return k.overtaker_id != requester && k.until > now;
        });

    out.reply.sender = fsm.self;
    out.reply.request_id = msg.request_id;
    out.reply.timestamp = now;
    out.reply.maneuver = msg.maneuver;

    if (conflict) {
        out.reply.kind = MessageKind::Nack;
        return out;
    }

    out.reply.kind = MessageKind::Ack;
    out.fsm.state = ResponderState::CommittedConstantSpeed;
    out.fsm.commitment_until = std::max(out.fsm.commitment_until, now + cfg.commitment_factor * msg.maneuver.tto_s);
    return out;
}

const char* to_string(MessageKind k)
{
    switch (k) {
    case MessageKind::Intent:
        return "Intent";
    case MessageKind::Ack:
        return "Ack";
    case MessageKind::Nack:
        return "Nack";
    }
    return "?";
}

const char* to_string(Decision d)
{
    switch (d) {
    case Decision::None:
        return "None";
    case Decision::Proceed:
        return "Proceed";
    case Decision::Abort:
        return "Abort";
    }
    return "?";
}

const char* to_string(OvertakerState s)
{
    switch (s) {
    case OvertakerState::Idle:
        return "Idle";
    case OvertakerState::AwaitingResponses:
        return "AwaitingResponses";
    case OvertakerState::Proceed:
        return "Proceed";
    case OvertakerState::Abort:
        return "Abort";
    }
    return "?";
}

const char* to_string(ResponderState s)
{
    switch (s) {
    case ResponderState::Free:
        return "Free";
    case ResponderState::CommittedConstantSpeed:
        return "CommittedConstantSpeed";
    case ResponderState::EngagedInManeuver:
        return "EngagedInManeuver";
    }
    return "?";
}

} // namespace overtake
