#pragma once

// Exhaustive exploration of the overtaker FSM for small neighbor sets.
// Each response (neighbor, request id) is delivered at most once, as Ack or
// Nack, in any order, interleaved with timeouts. At every reachable state every
// stale response is replayed and must leave the FSM untouched.

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "overtake/protocol.hpp"

namespace overtake::testing {

struct ExploreReport {
    std::size_t states = 0;
    std::size_t stale_checks = 0;
    std::size_t terminal_paths = 0;
    std::vector<std::string> violations;
};

namespace detail {

inline Message reply(MessageKind kind, NodeId from, std::uint32_t id, NodeId overtaker)
{
    Message m;
    m.kind = kind;
    m.sender = from;
    m.request_id = id;
    m.maneuver = {overtaker, 8.0};
    return m;
}

inline SafetyAssessment safe_assessment()
{
    SafetyAssessment a;
    a.tto = 8.0;
    a.ttc = 20.0;
    a.verdict = Verdict::Safe;
    return a;
}

class Explorer {
public:
    Explorer(std::set<NodeId> neighbors, std::uint32_t retries, ExploreReport& report)
        : neighbors_(std::move(neighbors)), retries_(retries), report_(report)
    {
    }

    void visit(const OvertakerFsm& fsm, std::set<std::pair<NodeId, std::uint32_t>>& used, int depth)
    {
        ++report_.states;
        if (depth > kMaxDepth) {
            fail("exploration exceeded depth bound");
            return;
        }
        if (fsm.state == OvertakerState::Proceed && (!fsm.pending.empty() || fsm.nack_received)) {
            fail("Proceed with pending neighbors or after a Nack");
        }
        if (fsm.finished()) {
            ++report_.terminal_paths;
        }

        for (std::uint32_t id = 0; id <= retries_; ++id) {
            for (NodeId n : neighbors_) {
                for (MessageKind k : {MessageKind::Ack, MessageKind::Nack}) {
                    const Message m = reply(k, n, id, fsm.self);
                    if (id != fsm.current_request_id || fsm.finished()) {
                        OvertakerFsm copy = fsm;
                        if (copy.on_message(m, 0.0) != Decision::None || !(copy == fsm)) {
                            fail("stale response changed the FSM");
                        }
                        ++report_.stale_checks;
                        continue;
                    }
                    if (used.contains({n, id})) {
                        continue;
                    }
                    OvertakerFsm next = fsm;
                    const Decision d = next.on_message(m, 0.0);
                    if (k == MessageKind::Nack && d != Decision::Abort) {
                        fail("current Nack did not abort");
                    }
                    used.insert({n, id});
                    visit(next, used, depth + 1);
                    used.erase({n, id});
                }
            }
        }

        if (!fsm.finished()) {
            OvertakerFsm next = fsm;
            Decision d = Decision::None;
            const auto resend = next.on_timeout(safe_assessment(), fsm.deadline, d);
            if (resend && next.current_request_id != fsm.current_request_id + 1) {
                fail("resend did not bump the request id");
            }
            if (!resend && d != Decision::Abort) {
                fail("timeout without resend did not abort");
            }
            visit(next, used, depth + 1);
        }
    }

private:
    static constexpr int kMaxDepth = 64;

    void fail(std::string what)
    {
        if (report_.violations.size() < 20) {
            report_.violations.push_back(std::move(what));
        }
    }

    std::set<NodeId> neighbors_;
    std::uint32_t retries_;
    ExploreReport& report_;
};

} // namespace detail

/// Explores 1..max_neighbors neighbors and 0..max_retries resends.
inline ExploreReport explore_overtaker(std::uint32_t max_neighbors = 3, std::uint32_t max_retries = 2)
{
    ExploreReport report;
    for (std::uint32_t count = 1; count <= max_neighbors; ++count) {
        for (std::uint32_t retries = 0; retries <= max_retries; ++retries) {
            std::set<NodeId> neighbors;
            for (NodeId n = 0; n < count; ++n) {
                neighbors.insert(10 + n);
            }
            ProtocolConfig cfg;
            cfg.max_retries = retries;
            const OvertakerFsm start = initiate(1, detail::safe_assessment(), neighbors, cfg, 0.0).fsm;
            std::set<std::pair<NodeId, std::uint32_t>> used;
            detail::Explorer(neighbors, retries, report).visit(start, used, 0);
        }
    }
    return report;
}

} // namespace overtake::testing
