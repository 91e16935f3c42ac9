#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "tobsim/sim.hpp"
#include "tobsim/tob.hpp"
#include "tobsim/verify.hpp"

using namespace tobsim;

namespace {

Scenario honest_scenario(int n, Tick delta, int views, std::uint64_t seed = 1) {
    Scenario sc;
    sc.n = n;
    sc.delta = delta;
    sc.protocol = Protocol::Tob2;
    sc.horizon = 5 * delta * views;
    sc.seed = seed;
    return sc;
}

template <class T>
std::vector<std::pair<TraceEvent, T>> events_of(const Trace& tr) {
    std::vector<std::pair<TraceEvent, T>> out;
    for (const auto& e : tr.events)
        if (const auto* p = std::get_if<T>(&e.payload)) out.emplace_back(e, *p);
    return out;
}

}  // namespace

TEST_CASE("view layout: two vote rounds, decide at four deltas") {
    Scenario sc = honest_scenario(4, 2, 6);
    Trace tr = run_scenario(sc);
    Tick span = 5 * sc.delta;
    for (auto& [e, v] : events_of<EvVoteCast>(tr)) {
        Tick ph = e.tick % span;
        if (v.round == 1) CHECK(ph == sc.delta);
        if (v.round == 2) CHECK(ph == 3 * sc.delta);
    }
    for (auto& [e, d] : events_of<EvDecided>(tr)) CHECK(e.tick % span == 4 * sc.delta);
    for (auto& [e, p] : events_of<EvProposalSent>(tr)) CHECK(e.tick % span == 0);
}

TEST_CASE("a view's proposal is decided within the same view at four deltas") {
    Scenario sc = honest_scenario(5, 3, 6, 9);
    Trace tr = run_scenario(sc);
    std::map<BlockId, std::pair<View, Tick>> proposal_block;
    for (auto& [e, p] : events_of<EvProposalSent>(tr))
        proposal_block.emplace(p.log, std::pair{p.view, e.tick});
    int real = 0;
    for (auto& [e, d] : events_of<EvDecided>(tr)) {
        if (d.log == kGenesis) continue;
        ++real;
        auto it = proposal_block.find(d.log);
        REQUIRE(it != proposal_block.end());
        CHECK(it->second.first == d.view);  // same view
        CHECK(e.tick == it->second.second + 4 * sc.delta);
    }
    CHECK(real > 0);
}

TEST_CASE("second vote round inputs the first round's grade-0 output") {
    Scenario sc = honest_scenario(4, 2, 4, 4);
    Trace tr = run_scenario(sc);
    // the round-2 vote equals the highest grade-0 output of the view's first GA
    std::map<std::tuple<ValidatorId, View>, BlockId> round2;
    for (auto& [e, v] : events_of<EvVoteCast>(tr))
        if (v.round == 2) round2[{e.validator, v.view}] = v.log;
    int checked = 0;
    for (auto& [e, out] : events_of<EvGaOutput>(tr)) {
        if (out.instance % 2 != 0 || out.grade != 0) continue;  // first GA, grade 0
        View view = out.instance / 2;
        auto it = round2.find({e.validator, view});
        if (it == round2.end()) continue;
        CHECK(it->second == out.log);
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("all honest round-one votes follow the unique best proposal") {
    Scenario sc = honest_scenario(6, 2, 5, 12);
    Trace tr = run_scenario(sc);
    std::map<View, std::set<BlockId>> votes1;
    for (auto& [e, v] : events_of<EvVoteCast>(tr))
        if (v.round == 1) votes1[v.view].insert(v.log);
    for (auto& [view, logs] : votes1) CHECK(logs.size() == 1);
}

TEST_CASE("sleeping through the first GA denies the decide but not later views") {
    Scenario sc = honest_scenario(4, 2, 6);
    Tick span = 5 * sc.delta;
    // validator 3 misses view 1's first GA snapshot tick t_1 + 2*delta
    Tick snap = span + 2 * sc.delta;
    sc.awake[3] = {Interval{0, snap}, Interval{snap + 1, sc.horizon}};
    Trace tr = run_scenario(sc);
    bool decided_v1 = false, decided_later = false;
    for (auto& [e, d] : events_of<EvDecided>(tr)) {
        if (e.validator != 3) continue;
        if (d.view == 1) decided_v1 = true;
        if (d.view >= 2) decided_later = true;
    }
    CHECK_FALSE(decided_v1);
    CHECK(decided_later);
}

TEST_CASE("clean honest traces verify with zero violations") {
    Scenario sc = honest_scenario(5, 2, 7, 21);
    Trace tr = run_scenario(sc);
    auto violations = verify_trace(tr);
    for (const auto& v : violations) CAPTURE(v.kind + ": " + v.detail);
    CHECK(violations.empty());
}

TEST_CASE("equivocating adversary cannot break safety at desk scale") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Scenario sc = honest_scenario(7, 2, 6, seed);
        sc.adversary.name = "equivocate_split";
        sc.corruptions.push_back(CorruptionEntry{5, -sc.delta});
        sc.corruptions.push_back(CorruptionEntry{6, -sc.delta});
        Trace tr = run_scenario(sc);
        auto violations = verify_trace(tr);
        for (const auto& v : violations) CAPTURE(v.kind + ": " + v.detail);
        CHECK(violations.empty());
    }
}
