#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "tobsim/sim.hpp"
#include "tobsim/tob.hpp"
#include "tobsim/verify.hpp"

using namespace tobsim;

namespace {

Scenario honest_scenario(int n, Tick delta, int views, std::uint64_t seed = 1) {
    Scenario sc;
    sc.n = n;
    sc.delta = delta;
    sc.protocol = Protocol::Tob1;
    sc.horizon = 4 * delta * views;
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

TEST_CASE("proposal book keeps the first log and discards equivocators") {
    BlockStore blocks;
    BlockId lock = blocks.add(kGenesis, 0, 0);
    BlockId p1 = blocks.add(lock, 1, 1);
    BlockId p2 = blocks.add(lock, 2, 1);
    BlockId off = blocks.add(kGenesis, 3, 1);  // does not extend the lock

    ProposalBook book;
    CHECK(book.note(1, p1, 9));
    CHECK_FALSE(book.note(1, p1, 9));  // duplicate: no re-forward
    CHECK(book.note(2, p2, 4));
    CHECK(book.note(3, off, 100));

    auto best = book.best_extending(blocks, lock);
    REQUIRE(best.has_value());
    CHECK(best->first == 1);  // highest VRF among lock-extending proposals
    CHECK(best->second.log == p1);

    // the would-be winner equivocates; its proposals are discarded
    BlockId p1b = blocks.add(lock, 1, 1);
    CHECK(book.note(1, p1b, 9));
    CHECK(book.equivocating(1));
    best = book.best_extending(blocks, lock);
    REQUIRE(best.has_value());
    CHECK(best->first == 2);

    // nothing extends a foreign lock
    CHECK_FALSE(book.best_extending(blocks, off ? blocks.add(off, 9, 2) : off).has_value());
}

TEST_CASE("view zero proposes an extension of genesis and decides genesis") {
    Scenario sc = honest_scenario(4, 2, 2);
    Trace tr = run_scenario(sc);
    bool saw_proposal = false;
    for (auto& [e, p] : events_of<EvProposalSent>(tr)) {
        if (p.view != 0) continue;
        saw_proposal = true;
        CHECK(e.tick == 0);
    }
    CHECK(saw_proposal);
    for (auto& [e, d] : events_of<EvDecided>(tr))
        if (d.view == 0) CHECK(d.log == kGenesis);  // vacuous decision at view 0
}

TEST_CASE("honest runs decide each proposal six deltas after proposing") {
    Scenario sc = honest_scenario(6, 3, 8);
    Trace tr = run_scenario(sc);
    std::map<View, Tick> proposed_at;
    std::map<BlockId, View> proposal_block;
    BlockStore blocks;
    std::map<BlockId, BlockId> parent;
    for (auto& [e, b] : events_of<EvBlock>(tr)) parent[b.id] = b.parent;
    for (auto& [e, p] : events_of<EvProposalSent>(tr)) {
        proposed_at.emplace(p.view, e.tick);
        proposal_block.emplace(p.log, p.view);
    }
    int real_decisions = 0;
    for (auto& [e, d] : events_of<EvDecided>(tr)) {
        if (d.log == kGenesis) continue;
        ++real_decisions;
        // walk to the newest block and find which view proposed it
        auto it = proposal_block.find(d.log);
        REQUIRE(it != proposal_block.end());
        CHECK(e.tick == proposed_at.at(it->second) + 6 * sc.delta);
        CHECK(it->second == d.view - 1);  // decided in the following view
    }
    CHECK(real_decisions > 0);
}

TEST_CASE("every validator casts exactly one vote per view when honest") {
    Scenario sc = honest_scenario(5, 1, 6);
    Trace tr = run_scenario(sc);
    std::map<std::pair<ValidatorId, View>, int> votes;
    for (auto& [e, v] : events_of<EvVoteCast>(tr)) ++votes[{e.validator, v.view}];
    for (View v = 0; v < 6; ++v)
        for (ValidatorId i = 0; i < sc.n; ++i) CHECK(votes[{i, v}] == 1);
}

TEST_CASE("a validator without the stability window casts no vote") {
    Scenario sc = honest_scenario(4, 2, 4);
    // validator 3 sleeps through t_1 - delta = 6, awake again for the vote tick 10
    sc.awake[3] = {Interval{0, 5}, Interval{9, sc.horizon}};
    Trace tr = run_scenario(sc);
    for (auto& [e, v] : events_of<EvVoteCast>(tr)) {
        if (e.validator == 3) CHECK(v.view != 1);
    }
    // it still participates in grade 0 (proposing) at the next view
    bool proposed_later = false;
    for (auto& [e, p] : events_of<EvProposalSent>(tr))
        if (e.validator == 3 && p.view >= 2) proposed_later = true;
    CHECK(proposed_later);
}

TEST_CASE("good leader oracle") {
    Scenario sc = honest_scenario(6, 2, 10, 77);
    // all honest and awake: the oracle must name someone for every view
    for (View v = 0; v < 10; ++v) CHECK(good_leader(sc, v).has_value());

    // corrupting the winner of view 3 flips that view to leaderless
    auto winner = *good_leader(sc, 3);
    Scenario corrupted = sc;
    corrupted.corruptions.push_back(CorruptionEntry{winner, 3 * 4 * sc.delta});
    CHECK_FALSE(good_leader(corrupted, 3).has_value());
}

TEST_CASE("local decisions never conflict in honest runs") {
    Scenario sc = honest_scenario(4, 1, 10, 3);
    Trace tr = run_scenario(sc);
    BlockStore blocks;
    for (auto& [e, b] : events_of<EvBlock>(tr)) blocks.add(b.parent, b.creator, b.view, b.tag);
    std::map<ValidatorId, BlockId> last;
    for (auto& [e, d] : events_of<EvDecided>(tr)) {
        auto it = last.find(e.validator);
        if (it != last.end()) CHECK(blocks.compatible(it->second, d.log));
        last[e.validator] = d.log;
    }
}

TEST_CASE("clean honest traces verify with zero violations") {
    Scenario sc = honest_scenario(5, 2, 8, 5);
    Trace tr = run_scenario(sc);
    auto violations = verify_trace(tr);
    for (const auto& v : violations) CAPTURE(v.kind + ": " + v.detail);
    CHECK(violations.empty());
}
