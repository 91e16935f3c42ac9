#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "tobsim/core.hpp"
#include "tobsim/scenario.hpp"

namespace tobsim {

// One event per line in the JSONL file; `validator` is the acting/observing
// validator or kNoValidator for world-level events.

struct EvBlock {
    BlockId id;
    BlockId parent;
    ValidatorId creator;
    View view;
    std::string tag;
};
struct EvSend {  // one physical broadcast; msg_seq links RECV lines back here
    std::int64_t msg_seq;
    MsgKind kind;
    ValidatorId sender;  // claimed originator (survives forwards)
    View view;
    BlockId log;
    VrfValue vrf;
};
struct EvRecv {
    std::int64_t msg_seq;
};
struct EvWake {};
struct EvSleep {};
struct EvCorrupt {};
struct EvInputSent {
    View instance;
    BlockId log;
};
struct EvProposalSent {
    View view;
    BlockId log;
    VrfValue vrf;
};
struct EvVoteCast {
    View view;
    int round;  // 1, or 2 for the second voting round of the 5-delta protocol
    BlockId log;
};
struct EvInputRecorded {
    View instance;
    ValidatorId sender;
    BlockId log;
    View vote_view;  // equals instance except for expiring-vote bookkeeping
};
struct EvEquivocation {
    View instance;
    ValidatorId sender;
    BlockId log_a;
    BlockId log_b;
    View vote_view;
};
struct EvSnapshot {
    View instance;
    int marker;  // 1 = delta, 2 = 2*delta after the instance input phase
};
struct EvGaOutput {  // outputs are prefix-closed chains; only the tip is recorded
    View instance;
    int grade;
    BlockId log;
};
struct EvTally {  // per participated output phase: |S| and the filtered support map
    View instance;
    int grade;
    std::vector<ValidatorId> senders;
    std::vector<std::pair<ValidatorId, BlockId>> support;
};
struct EvDecided {
    View view;
    BlockId log;
};
struct EvVoteSuperseded {
    ValidatorId sender;
    View old_view;
    View new_view;
};
struct EvVoteExpired {
    View instance;
    ValidatorId sender;
    View vote_view;
};

using EventPayload =
    std::variant<EvBlock, EvSend, EvRecv, EvWake, EvSleep, EvCorrupt, EvInputSent,
                 EvProposalSent, EvVoteCast, EvInputRecorded, EvEquivocation, EvSnapshot,
                 EvGaOutput, EvTally, EvDecided, EvVoteSuperseded, EvVoteExpired>;

struct TraceEvent {
    Tick tick = 0;
    ValidatorId validator = kNoValidator;
    EventPayload payload;
};

const char* event_kind_name(const EventPayload& p);

struct Trace {
    Scenario scenario;
    std::uint64_t seed = 0;
    std::vector<TraceEvent> events;

    template <class T>
    const T* get(std::size_t i) const {
        return std::get_if<T>(&events[i].payload);
    }
};

std::string event_to_json_line(const TraceEvent& e);
TraceEvent event_from_json_line(const std::string& line);

void write_trace(const Trace& t, std::ostream& os);
void write_trace_file(const Trace& t, const std::string& path);
Trace read_trace(std::istream& is);
Trace read_trace_file(const std::string& path);

/// Serialized event stream without the header; used for byte-level
/// determinism and equivalence checks.
std::string events_to_string(const Trace& t);

}  // namespace tobsim
