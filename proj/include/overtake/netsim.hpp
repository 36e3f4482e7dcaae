#pragma once

// Single-threaded discrete-event kernel: clock, FIFO-stable event queue,
// range-limited lossy broadcast channel, constant-speed motion on a straight
// two-lane road and the intention handshake running on every node.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "overtake/kinematics.hpp"
#include "overtake/protocol.hpp"
#include "overtake/rng.hpp"

namespace overtake {

class SimulationError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Latency {
    double min = 0.02;
    double max = 0.02;
};

struct SimConfig {
    double comm_range = 500.0;
    double loss_prob = 0.0;
    Latency latency;
    double tick = 0.1;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Longitudinal distance test; lanes share the same x axis.
bool in_range(const VehicleState& a, const VehicleState& b, double comm_range);

/// Min-queue on (time, insertion sequence): equal times pop in insertion order.
template <typename Event>
class EventQueue {
public:
    void push(double time, Event ev)
    {
        heap_.push(Entry{time, next_seq_++, std::move(ev)});
    }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    double next_time() const { return heap_.top().time; }

    std::pair<double, Event> pop()
    {
        Entry e = heap_.top();
        heap_.pop();
        return {e.time, std::move(e.event)};
    }

private:
    struct Entry {
        double time;
        std::uint64_t seq;
        Event event;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const
        {
            if (a.time != b.time) {
                return a.time > b.time;
            }
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::uint64_t next_seq_ = 0;
};

struct ScheduledDelivery {
    NodeId to = 0;
    double at = 0.0;
};

/// Delivery model: in-range receivers get each message once with probability
/// 1 - loss_prob after a latency draw. Draws happen in receiver order.
class Channel {
public:
    explicit Channel(const SimConfig& cfg);

    std::vector<ScheduledDelivery> broadcast(const VehicleState& sender, const std::vector<VehicleState>& nodes,
                                             double now);
    std::optional<ScheduledDelivery> unicast(const VehicleState& sender, const VehicleState& receiver, double now);

    /// Receivers in range that were dropped by the most recent call.
    const std::vector<NodeId>& last_dropped() const { return dropped_; }

private:
    double sample_latency();

    SimConfig cfg_;
    Rng rng_;
    std::vector<NodeId> dropped_;
};

struct ScriptedIntent {
    NodeId node = 0;
    double at = 0.0;
    double tto_s = 0.0;
    Verdict verdict = Verdict::Safe;
};

using Assessor = std::function<SafetyAssessment(NodeId node, double now, const std::vector<VehicleState>& vehicles)>;

struct World {
    std::vector<VehicleState> vehicles;
    std::vector<ScriptedIntent> intents;
    ProtocolConfig protocol;

    /// Optional re-assessment used at initiation and after each timeout. When
    /// empty, the scripted TTO and verdict are reused.
    Assessor assessor;
};

struct TraceRecord {
    double time = 0.0;
    NodeId node = 0;
    std::string event;
    nlohmann::json payload;
};

struct SimTrace {
    std::vector<TraceRecord> records;
    std::map<NodeId, std::vector<std::pair<double, Decision>>> decisions;
    std::vector<VehicleState> final_vehicles;

    std::string to_jsonl() const;

    /// Most recent decision; Decision::None if the node never decided.
    Decision final_decision(NodeId node) const;
};

/// Deterministic in (world, cfg, horizon). Throws SimulationError if an event
/// would be scheduled before the current time.
SimTrace run(const World& world, const SimConfig& cfg, double horizon);

} // namespace overtake
