#include "tobsim/trace.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace tobsim {

using nlohmann::json;

const char* event_kind_name(const EventPayload& p) {
    static constexpr const char* names[] = {
        "BLOCK",         "SEND",        "RECV",          "WAKE",
        "SLEEP",         "CORRUPT",     "INPUT_SENT",    "PROPOSAL_SENT",
        "VOTE_CAST",     "INPUT_RECORDED", "EQUIVOCATION_DETECTED", "SNAPSHOT_TAKEN",
        "GA_OUTPUT",     "GA_TALLY",    "DECIDED",       "VOTE_SUPERSEDED",
        "VOTE_EXPIRED"};
    return names[p.index()];
}

namespace {

json payload_to_json(const EventPayload& p) {
    json j;
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, EvBlock>) {
                j = {{"id", e.id}, {"parent", e.parent}, {"creator", e.creator},
                     {"view", e.view}, {"tag", e.tag}};
            } else if constexpr (std::is_same_v<T, EvSend>) {
                j = {{"seq", e.msg_seq}, {"mkind", e.kind == MsgKind::GaInput ? "input" : "proposal"},
                     {"sender", e.sender}, {"view", e.view}, {"log", e.log}, {"vrf", e.vrf}};
            } else if constexpr (std::is_same_v<T, EvRecv>) {
                j = {{"seq", e.msg_seq}};
            } else if constexpr (std::is_same_v<T, EvWake> || std::is_same_v<T, EvSleep> ||
                                 std::is_same_v<T, EvCorrupt>) {
                j = json::object();
            } else if constexpr (std::is_same_v<T, EvInputSent>) {
                j = {{"instance", e.instance}, {"log", e.log}};
            } else if constexpr (std::is_same_v<T, EvProposalSent>) {
                j = {{"view", e.view}, {"log", e.log}, {"vrf", e.vrf}};
            } else if constexpr (std::is_same_v<T, EvVoteCast>) {
                j = {{"view", e.view}, {"round", e.round}, {"log", e.log}};
            } else if constexpr (std::is_same_v<T, EvInputRecorded>) {
                j = {{"instance", e.instance}, {"sender", e.sender}, {"log", e.log},
                     {"vote_view", e.vote_view}};
            } else if constexpr (std::is_same_v<T, EvEquivocation>) {
                j = {{"instance", e.instance}, {"sender", e.sender}, {"log_a", e.log_a},
                     {"log_b", e.log_b}, {"vote_view", e.vote_view}};
            } else if constexpr (std::is_same_v<T, EvSnapshot>) {
                j = {{"instance", e.instance}, {"marker", e.marker}};
            } else if constexpr (std::is_same_v<T, EvGaOutput>) {
                j = {{"instance", e.instance}, {"grade", e.grade}, {"log", e.log}};
            } else if constexpr (std::is_same_v<T, EvTally>) {
                json sup = json::array();
                for (const auto& [v, b] : e.support) sup.push_back({v, b});
                j = {{"instance", e.instance}, {"grade", e.grade}, {"senders", e.senders},
                     {"support", sup}};
            } else if constexpr (std::is_same_v<T, EvDecided>) {
                j = {{"view", e.view}, {"log", e.log}};
            } else if constexpr (std::is_same_v<T, EvVoteSuperseded>) {
                j = {{"sender", e.sender}, {"old_view", e.old_view}, {"new_view", e.new_view}};
            } else if constexpr (std::is_same_v<T, EvVoteExpired>) {
                j = {{"instance", e.instance}, {"sender", e.sender}, {"vote_view", e.vote_view}};
            }
        },
        p);
    return j;
}

EventPayload payload_from_json(const std::string& kind, const json& j) {
    if (kind == "BLOCK")
        return EvBlock{j.at("id").get<BlockId>(), j.at("parent").get<BlockId>(),
                       j.at("creator").get<ValidatorId>(), j.at("view").get<View>(),
                       j.at("tag").get<std::string>()};
    if (kind == "SEND")
        return EvSend{j.at("seq").get<std::int64_t>(),
                      j.at("mkind").get<std::string>() == "input" ? MsgKind::GaInput : MsgKind::Proposal,
                      j.at("sender").get<ValidatorId>(), j.at("view").get<View>(),
                      j.at("log").get<BlockId>(), j.at("vrf").get<VrfValue>()};
    if (kind == "RECV") return EvRecv{j.at("seq").get<std::int64_t>()};
    if (kind == "WAKE") return EvWake{};
    if (kind == "SLEEP") return EvSleep{};
    if (kind == "CORRUPT") return EvCorrupt{};
    if (kind == "INPUT_SENT")
        return EvInputSent{j.at("instance").get<View>(), j.at("log").get<BlockId>()};
    if (kind == "PROPOSAL_SENT")
        return EvProposalSent{j.at("view").get<View>(), j.at("log").get<BlockId>(),
                              j.at("vrf").get<VrfValue>()};
    if (kind == "VOTE_CAST")
        return EvVoteCast{j.at("view").get<View>(), j.at("round").get<int>(), j.at("log").get<BlockId>()};
    if (kind == "INPUT_RECORDED")
        return EvInputRecorded{j.at("instance").get<View>(), j.at("sender").get<ValidatorId>(),
                               j.at("log").get<BlockId>(), j.at("vote_view").get<View>()};
    if (kind == "EQUIVOCATION_DETECTED")
        return EvEquivocation{j.at("instance").get<View>(), j.at("sender").get<ValidatorId>(),
                              j.at("log_a").get<BlockId>(), j.at("log_b").get<BlockId>(),
                              j.at("vote_view").get<View>()};
    if (kind == "SNAPSHOT_TAKEN")
        return EvSnapshot{j.at("instance").get<View>(), j.at("marker").get<int>()};
    if (kind == "GA_OUTPUT")
        return EvGaOutput{j.at("instance").get<View>(), j.at("grade").get<int>(),
                          j.at("log").get<BlockId>()};
    if (kind == "GA_TALLY") {
        EvTally t;
        t.instance = j.at("instance").get<View>();
        t.grade = j.at("grade").get<int>();
        t.senders = j.at("senders").get<std::vector<ValidatorId>>();
        for (const auto& e : j.at("support"))
            t.support.emplace_back(e[0].get<ValidatorId>(), e[1].get<BlockId>());
        return t;
    }
    if (kind == "DECIDED") return EvDecided{j.at("view").get<View>(), j.at("log").get<BlockId>()};
    if (kind == "VOTE_SUPERSEDED")
        return EvVoteSuperseded{j.at("sender").get<ValidatorId>(), j.at("old_view").get<View>(),
                                j.at("new_view").get<View>()};
    if (kind == "VOTE_EXPIRED")
        return EvVoteExpired{j.at("instance").get<View>(), j.at("sender").get<ValidatorId>(),
                             j.at("vote_view").get<View>()};
    throw ParseError("unknown trace event kind: " + kind);
}

}  // namespace

std::string event_to_json_line(const TraceEvent& e) {
    json j;
    j["tick"] = e.tick;
    j["validator"] = e.validator;
    j["kind"] = event_kind_name(e.payload);
    j["payload"] = payload_to_json(e.payload);
    return j.dump();
}

TraceEvent event_from_json_line(const std::string& line) {
    json j = json::parse(line);
    TraceEvent e;
    e.tick = j.at("tick").get<Tick>();
    e.validator = j.at("validator").get<ValidatorId>();
    e.payload = payload_from_json(j.at("kind").get<std::string>(), j.at("payload"));
    return e;
}

void write_trace(const Trace& t, std::ostream& os) {
    json header;
    header["kind"] = "HEADER";
    header["seed"] = t.seed;
    header["scenario"] = json::parse(scenario_to_json(t.scenario));
    os << header.dump() << "\n";
    for (const auto& e : t.events) os << event_to_json_line(e) << "\n";
}

void write_trace_file(const Trace& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_trace(t, f);
}

Trace read_trace(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty trace");
    json header = json::parse(line);
    if (header.value("kind", std::string{}) != "HEADER") throw ParseError("trace missing HEADER line");
    Trace t;
    t.seed = header.at("seed").get<std::uint64_t>();
    t.scenario = scenario_from_json(header.at("scenario").dump());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        t.events.push_back(event_from_json_line(line));
    }
    return t;
}

Trace read_trace_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open trace: " + path);
    return read_trace(f);
}

std::string events_to_string(const Trace& t) {
    std::ostringstream os;
    for (const auto& e : t.events) os << event_to_json_line(e) << "\n";
    return os.str();
}

}  // namespace tobsim
