#include "overtake/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <variant>

#include "overtake/io.hpp"

namespace overtake {

void SimConfig::validate() const
{
    if (!(comm_range > 0.0)) {
        throw DomainError("comm_range must be > 0");
    }
    if (!(loss_prob >= 0.0 && loss_prob <= 1.0)) {
        throw DomainError("loss_prob must be in [0, 1]");
    }
    if (!(tick > 0.0)) {
        throw DomainError("tick must be > 0");
    }
    if (!(latency.min >= 0.0) || !(latency.max >= latency.min)) {
        throw DomainError("latency interval must satisfy 0 <= min <= max");
    }
}

bool in_range(const VehicleState& a, const VehicleState& b, double comm_range)
{
    return std::abs(a.pos_x - b.pos_x) <= comm_range;
}

Channel::Channel(const SimConfig& cfg) : cfg_(cfg), rng_(mix_seed(cfg.seed, 0xC4A77E1ULL))
{
    cfg_.validate();
}

double Channel::sample_latency()
{
    if (cfg_.latency.max == cfg_.latency.min) {
        return cfg_.latency.min;
    }
    return rng_.uniform(cfg_.latency.min, cfg_.latency.max);
}

std::vector<ScheduledDelivery> Channel::broadcast(const VehicleState& sender, const std::vector<VehicleState>& nodes,
                                                  double now)
{
    dropped_.clear();
    std::vector<ScheduledDelivery> out;
    for (const auto& node : nodes) {
        if (node.id == sender.id || !in_range(sender, node, cfg_.comm_range)) {
            continue;
        }
        if (rng_.bernoulli(cfg_.loss_prob)) {
            dropped_.push_back(node.id);
            continue;
        }
        out.push_back({node.id, now + sample_latency()});
    }
    return out;
}

std::optional<ScheduledDelivery> Channel::unicast(const VehicleState& sender, const VehicleState& receiver,
                                                  double now)
{
    dropped_.clear();
    if (!in_range(sender, receiver, cfg_.comm_range)) {
        return std::nullopt;
    }
    if (rng_.bernoulli(cfg_.loss_prob)) {
        dropped_.push_back(receiver.id);
        return std::nullopt;
    }
    return ScheduledDelivery{receiver.id, now + sample_latency()};
}

std::string SimTrace::to_jsonl() const
{
    std::ostringstream os;
    for (const auto& r : records) {
        nlohmann::json line;
        line["t"] = r.time;
        line["node"] = r.node;
        line["event"] = r.event;
        line["payload"] = r.payload;
        os << line.dump() << '\n';
    }
    return os.str();
}

Decision SimTrace::final_decision(NodeId node) const
{
    const auto it = decisions.find(node);
    if (it == decisions.end() || it->second.empty()) {
        return Decision::None;
    }
    return it->second.back().second;
}

namespace {

struct Tick {};
struct Start {
    std::size_t intent;
};
struct Deliver {
    NodeId to;
    Message msg;
};
struct Timeout {
    NodeId node;
    std::uint32_t request_id;
};
using Event = std::variant<Tick, Start, Deliver, Timeout>;

struct Node {
    ResponderFsm responder;
    std::optional<OvertakerFsm> overtaker;
    std::vector<KnownManeuver> knowledge;
};

class Simulation {
public:
    Simulation(const World& world, const SimConfig& cfg, double horizon)
        : world_(world), cfg_(cfg), horizon_(horizon), channel_(cfg), vehicles_(world.vehicles)
    {
        for (const auto& v : vehicles_) {
            v.validate();
            if (nodes_.contains(v.id)) {
                throw DomainError("duplicate vehicle id " + std::to_string(v.id));
            }
            nodes_[v.id].responder.self = v.id;
        }
        for (const auto& in : world_.intents) {
            if (!nodes_.contains(in.node)) {
                throw DomainError("intent for unknown vehicle " + std::to_string(in.node));
            }
        }
    }

    SimTrace run()
    {
        schedule(cfg_.tick, Tick{});
        for (std::size_t i = 0; i < world_.intents.size(); ++i) {
            schedule(world_.intents[i].at, Start{i});
        }

        while (!queue_.empty() && queue_.next_time() <= horizon_) {
            auto [t, ev] = queue_.pop();
            if (t < now_) {
                throw SimulationError("event dispatched out of order");
            }
            now_ = t;
            std::visit([this](auto& e) { handle(e); }, ev);
        }
        trace_.final_vehicles = vehicles_;
        return std::move(trace_);
    }

private:
    void schedule(double at, Event ev)
    {
        if (at < now_) {
            throw SimulationError("event scheduled in the past");
        }
        queue_.push(at, std::move(ev));
    }

    void record(NodeId node, std::string event, nlohmann::json payload)
    {
        trace_.records.push_back({now_, node, std::move(event), std::move(payload)});
    }

    VehicleState& vehicle(NodeId id)
    {
        return *std::find_if(vehicles_.begin(), vehicles_.end(), [id](const auto& v) { return v.id == id; });
    }

    std::set<NodeId> neighbors_of(NodeId id)
    {
        std::set<NodeId> out;
        const auto& self = vehicle(id);
        for (const auto& v : vehicles_) {
            if (v.id != id && in_range(self, v, cfg_.comm_range)) {
                out.insert(v.id);
            }
        }
        return out;
    }

    SafetyAssessment assessment_for(NodeId id, const ScriptedIntent& scripted)
    {
        if (world_.assessor) {
            return world_.assessor(id, now_, vehicles_);
        }
        SafetyAssessment a;
        a.tto = scripted.tto_s;
        a.verdict = scripted.verdict;
        a.reason = scripted.verdict == Verdict::Safe ? UnsafeReason::None : UnsafeReason::TtoNotBelowTtc;
        return a;
    }

    void handle(const Tick&)
    {
        for (auto& v : vehicles_) {
            const double dir = v.lane == Lane::Right ? 1.0 : -1.0;
            v.pos_x += dir * v.speed * cfg_.tick;
        }
        ++ticks_;
        const double next = static_cast<double>(ticks_ + 1) * cfg_.tick;
        if (next <= horizon_) {
            schedule(next, Tick{});
        }
    }

    void handle(const Start& s)
    {
        const ScriptedIntent& scripted = world_.intents[s.intent];
        const NodeId id = scripted.node;
        Node& node = nodes_.at(id);
        node.responder.expire(now_);

        if (node.overtaker && !node.overtaker->finished()) {
            record(id, "refused", {{"reason", "handshake_in_progress"}});
            return;
        }
        if (node.responder.state != ResponderState::Free) {
            record(id, "refused", {{"reason", to_string(node.responder.state)}});
            return;
        }
        active_intent_[id] = s.intent;
        const SafetyAssessment assessment = assessment_for(id, scripted);
        if (!assessment.safe()) {
            record(id, "refused", {{"reason", "unsafe_assessment"}, {"tto_s", assessment.tto}});
            return;
        }

        Initiation init = initiate(id, assessment, neighbors_of(id), world_.protocol, now_);
        node.overtaker = init.fsm;
        node.responder.state = ResponderState::EngagedInManeuver;
        node.responder.commitment_until = std::numeric_limits<double>::infinity();
        set_own_maneuver(node, id, std::numeric_limits<double>::infinity());

        record(id, "state",
               {{"fsm", "overtaker"}, {"from", to_string(OvertakerState::Idle)}, {"to", to_string(init.fsm.state)},
                {"request_id", init.fsm.current_request_id},
                {"pending", std::vector<NodeId>(init.fsm.pending.begin(), init.fsm.pending.end())}});
        send_broadcast(id, init.intent);
        if (init.decision != Decision::None) {
            decide(id, init.decision);
        } else {
            schedule(init.fsm.deadline, Timeout{id, init.fsm.current_request_id});
        }
    }

    void handle(const Deliver& d)
    {
        Node& node = nodes_.at(d.to);
        record(d.to, "deliver", message_to_json(d.msg));
        if (d.msg.kind == MessageKind::Intent) {
            on_intent(d.to, node, d.msg);
        } else {
            on_response(d.to, node, d.msg);
        }
    }

    void on_intent(NodeId id, Node& node, const Message& msg)
    {
        prune(node);
        const ResponderState before = node.responder.state;
        Response resp = responder_on_intent(node.responder, msg, node.knowledge, now_, world_.protocol);
        node.responder = resp.fsm;
        if (resp.reply.kind == MessageKind::Ack) {
            set_known(node, msg.maneuver.overtaker_id, node.responder.commitment_until);
        }
        if (node.responder.state != before) {
            record(id, "state", {{"fsm", "responder"}, {"from", to_string(before)},
                                 {"to", to_string(node.responder.state)},
                                 {"until", node.responder.commitment_until}});
        }
        send_unicast(id, msg.sender, resp.reply);
    }

    void on_response(NodeId id, Node& node, const Message& msg)
    {
        if (!node.overtaker) {
            record(id, "discard", {{"reason", "not_an_overtaker"}, {"request_id", msg.request_id}});
            return;
        }
        const OvertakerFsm before = *node.overtaker;
        const Decision d = node.overtaker->on_message(msg, now_);
        if (*node.overtaker == before) {
            const char* reason = before.state != OvertakerState::AwaitingResponses ? "not_awaiting"
                                 : msg.request_id != before.current_request_id ? "stale_request_id"
                                                                               : "not_pending";
            record(id, "discard", {{"reason", reason}, {"request_id", msg.request_id}, {"from", msg.sender}});
            return;
        }
        if (node.overtaker->state != before.state) {
            record(id, "state", {{"fsm", "overtaker"}, {"from", to_string(before.state)},
                                 {"to", to_string(node.overtaker->state)},
                                 {"request_id", node.overtaker->current_request_id}});
        }
        if (d != Decision::None) {
            decide(id, d);
        }
    }

    void handle(const Timeout& t)
    {
        Node& node = nodes_.at(t.node);
        if (!node.overtaker || node.overtaker->state != OvertakerState::AwaitingResponses ||
            node.overtaker->current_request_id != t.request_id) {
            return;
        }
        OvertakerFsm& fsm = *node.overtaker;
        const SafetyAssessment fresh = assessment_for(t.node, world_.intents[active_intent_.at(t.node)]);
        const std::uint32_t old_id = fsm.current_request_id;
        const auto unanswered = std::vector<NodeId>(fsm.pending.begin(), fsm.pending.end());
        Decision d = Decision::None;
        const auto resend = fsm.on_timeout(fresh, now_, d, neighbors_of(t.node));

        record(t.node, "timeout", {{"request_id", old_id}, {"unanswered", unanswered},
                                   {"retries_left", fsm.retries_left}, {"fresh_verdict", to_string(fresh.verdict)}});
        if (resend) {
            record(t.node, "state",
                   {{"fsm", "overtaker"}, {"from", to_string(OvertakerState::AwaitingResponses)},
                    {"to", to_string(fsm.state)}, {"request_id", fsm.current_request_id},
                    {"pending", std::vector<NodeId>(fsm.pending.begin(), fsm.pending.end())}});
            send_broadcast(t.node, *resend);
            if (d == Decision::None) {
                schedule(fsm.deadline, Timeout{t.node, fsm.current_request_id});
            }
        } else {
            record(t.node, "state", {{"fsm", "overtaker"}, {"from", to_string(OvertakerState::AwaitingResponses)},
                                     {"to", to_string(fsm.state)}, {"request_id", fsm.current_request_id}});
        }
        if (d != Decision::None) {
            decide(t.node, d);
        }
    }

    void decide(NodeId id, Decision d)
    {
        Node& node = nodes_.at(id);
        const OvertakerFsm& fsm = *node.overtaker;
        record(id, "decision", {{"decision", to_string(d)}, {"request_id", fsm.current_request_id},
                                {"tto_s", fsm.tto_s}});
        trace_.decisions[id].emplace_back(now_, d);

        const ResponderState before = node.responder.state;
        if (d == Decision::Proceed) {
            node.responder.state = ResponderState::EngagedInManeuver;
            node.responder.commitment_until = now_ + fsm.tto_s;
            set_own_maneuver(node, id, node.responder.commitment_until);
        } else {
            node.responder.state = ResponderState::Free;
            node.responder.commitment_until = now_;
            std::erase_if(node.knowledge, [id](const KnownManeuver& k) { return k.overtaker_id == id; });
        }
        if (node.responder.state != before) {
            record(id, "state", {{"fsm", "responder"}, {"from", to_string(before)},
                                 {"to", to_string(node.responder.state)},
                                 {"until", node.responder.commitment_until}});
        }
    }

    void send_broadcast(NodeId from, const Message& msg)
    {
        record(from, "send", message_to_json(msg));
        const auto deliveries = channel_.broadcast(vehicle(from), vehicles_, now_);
        for (NodeId lost : channel_.last_dropped()) {
            auto payload = message_to_json(msg);
            payload["to"] = lost;
            record(from, "drop", payload);
        }
        for (const auto& d : deliveries) {
            schedule(d.at, Deliver{d.to, msg});
        }
    }

    void send_unicast(NodeId from, NodeId to, const Message& msg)
    {
        auto payload = message_to_json(msg);
        payload["to"] = to;
        record(from, "send", payload);
        const auto delivery = channel_.unicast(vehicle(from), vehicle(to), now_);
        if (!delivery) {
            payload["reason"] = channel_.last_dropped().empty() ? "out_of_range" : "lost";
            record(from, "drop", payload);
            return;
        }
        schedule(delivery->at, Deliver{to, msg});
    }

    void prune(Node& node)
    {
        std::erase_if(node.knowledge, [this](const KnownManeuver& k) { return k.until <= now_; });
    }

    static void set_known(Node& node, NodeId overtaker, double until)
    {
        for (auto& k : node.knowledge) {
            if (k.overtaker_id == overtaker) {
                k.until = std::max(k.until, until);
                return;
            }
        }
        node.knowledge.push_back({overtaker, until});
    }

    static void set_own_maneuver(Node& node, NodeId self, double until)
    {
        for (auto& k : node.knowledge) {
            if (k.overtaker_id == self) {
                k.until = until;
                return;
            }
        }
        node.knowledge.push_back({self, until});
    }

    const World& world_;
    SimConfig cfg_;
    double horizon_;
    Channel channel_;
    std::vector<VehicleState> vehicles_;
    std::map<NodeId, Node> nodes_;
    std::map<NodeId, std::size_t> active_intent_;
    EventQueue<Event> queue_;
    SimTrace trace_;
    double now_ = 0.0;
    std::uint64_t ticks_ = 0;
};

} // namespace

SimTrace run(const World& world, const SimConfig& cfg, double horizon)
{
    cfg.validate();
    world.protocol.validate();
    if (!(horizon > 0.0)) {
        throw DomainError("horizon must be > 0");
    }
    return Simulation(world, cfg, horizon).run();
}

} // namespace overtake
