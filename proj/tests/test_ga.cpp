#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tobsim/ga.hpp"

using namespace tobsim;

namespace {

struct Fixture {
    BlockStore blocks;
    BlockId a, a2, b;  // [G,a,a2] and sibling [G,b]
    Fixture() {
        a = blocks.add(kGenesis, 0, 0);
        a2 = blocks.add(a, 0, 1);
        b = blocks.add(kGenesis, 1, 0);
    }
};

}  // namespace

TEST_CASE("message handling: record, equivocate, ignore") {
    Fixture f;
    GaInstance ga(GaKind::TwoGrade, 0, 0);
    auto r1 = ga.handle_input(3, f.a, 1);
    CHECK(r1.outcome == InputOutcome::Recorded);
    CHECK(r1.forward);
    // re-delivery of the identical log is dropped and not re-forwarded
    auto r1b = ga.handle_input(3, f.a, 2);
    CHECK(r1b.outcome == InputOutcome::Ignored);
    CHECK_FALSE(r1b.forward);
    // second distinct log: evidence recorded, still forwarded
    auto r2 = ga.handle_input(3, f.b, 2);
    CHECK(r2.outcome == InputOutcome::EquivocationRecorded);
    CHECK(r2.forward);
    CHECK(ga.records().count(3) == 0);
    CHECK(ga.evidence().count(3) == 1);
    // anything further from a known equivocator is ignored
    auto r3 = ga.handle_input(3, f.a2, 3);
    CHECK(r3.outcome == InputOutcome::Ignored);
    CHECK_FALSE(r3.forward);
}

TEST_CASE("conflicting inputs from distinct senders are not equivocation") {
    Fixture f;
    GaInstance ga(GaKind::TwoGrade, 0, 0);
    auto r1 = ga.handle_input(0, f.a, 1);
    auto r2 = ga.handle_input(1, f.b, 1);
    CHECK(r1.outcome == InputOutcome::Recorded);
    CHECK(r2.outcome == InputOutcome::Recorded);
    CHECK(r1.forward);
    CHECK(r2.forward);
    CHECK(ga.evidence().empty());
    CHECK(ga.sender_count() == 2);
}

TEST_CASE("sender count includes equivocators and survives the transition") {
    Fixture f;
    GaInstance ga(GaKind::TwoGrade, 0, 0);
    CHECK(ga.sender_count() == 0);
    for (ValidatorId v = 0; v < 4; ++v) ga.handle_input(v, f.a, 1);
    ga.handle_input(4, f.b, 1);
    CHECK(ga.sender_count() == 5);
    int before = ga.sender_count();
    ga.handle_input(4, f.a, 2);  // 4 becomes an equivocator
    CHECK(ga.sender_count() == before);
}

TEST_CASE("support counts descendants, snapshots filter by reception time") {
    Fixture f;
    GaInstance ga(GaKind::TwoGrade, 0, 0);
    ga.set_delta(2);
    ga.handle_input(0, f.a, 1);
    ga.handle_input(1, f.a2, 2);
    ga.handle_input(2, f.a, 4);  // after the snapshot tick
    ga.handle_input(3, f.b, 1);
    CHECK(ga.support(f.blocks, f.a, std::nullopt) == 3);
    CHECK(ga.support(f.blocks, kGenesis, std::nullopt) == 4);
    CHECK_THROWS_AS((void)ga.support(f.blocks, f.a, 1), MissingSnapshot);
    ga.take_snapshot(1, 2);
    CHECK(ga.support(f.blocks, f.a, 1) == 2);  // validator 2 arrived late
    // a counted sender equivocating drops support by one
    ga.handle_input(1, f.b, 5);
    CHECK(ga.support(f.blocks, f.a, 1) == 1);
    CHECK(ga.support(f.blocks, f.a, std::nullopt) == 2);
}

TEST_CASE("strict majority thresholds") {
    CHECK(majority(3, 5));
    CHECK_FALSE(majority(2, 4));
    CHECK_FALSE(majority(0, 0));
}

TEST_CASE("outputs are prefix-closed chains above the threshold") {
    Fixture f;
    GaInstance ga(GaKind::TwoGrade, 0, 0);
    ga.set_delta(1);
    // S = 5, three supporters of [G,a]
    ga.handle_input(0, f.a, 0);
    ga.handle_input(1, f.a, 0);
    ga.handle_input(2, f.a2, 0);
    ga.handle_input(3, f.b, 0);
    ga.handle_input(4, f.b, 0);
    auto outs = ga.outputs_for_grade(f.blocks, 0);
    REQUIRE(outs.has_value());
    CHECK(*outs == std::vector<BlockId>{kGenesis, f.a});  // 3 > 5/2, but a2 has only 1
}

TEST_CASE("no strict majority means no output") {
    Fixture f;
    GaInstance ga(GaKind::TwoGrade, 0, 0);
    ga.handle_input(0, f.a, 0);
    ga.handle_input(1, f.a, 0);
    ga.handle_input(2, f.b, 0);
    ga.handle_input(3, f.b, 0);
    auto outs = ga.outputs_for_grade(f.blocks, 0);
    REQUIRE(outs.has_value());
    CHECK(outs->size() == 1);  // only genesis: 4 > 2 but 2 > 2 fails for both forks
    CHECK(outs->front() == kGenesis);
}

TEST_CASE("grade participation requires the matching snapshot") {
    GaInstance two(GaKind::TwoGrade, 0, 0);
    CHECK(two.participation_allowed(0));
    CHECK_FALSE(two.participation_allowed(1));
    two.take_snapshot(1, 1);
    CHECK(two.participation_allowed(1));

    GaInstance three(GaKind::ThreeGrade, 0, 0);
    three.take_snapshot(1, 1);  // awake at delta and (say) 5*delta only
    CHECK(three.participation_allowed(0));
    CHECK_FALSE(three.participation_allowed(1));  // needs the 2*delta snapshot
    CHECK(three.participation_allowed(2));
    CHECK(three.required_marker(1) == 2);
    CHECK(three.required_marker(2) == 1);
}

TEST_CASE("phase schedule per kind") {
    GaInstance two(GaKind::TwoGrade, 7, 100);
    two.set_delta(4);
    CHECK(two.snapshot_tick(1) == 104);
    CHECK(two.output_tick(0) == 108);
    CHECK(two.output_tick(1) == 112);
    GaInstance three(GaKind::ThreeGrade, 7, 100);
    three.set_delta(4);
    CHECK(three.snapshot_tick(2) == 108);
    CHECK(three.output_tick(0) == 112);
    CHECK(three.output_tick(2) == 120);
}

TEST_CASE("validity at desk scale: honest majority all extending one log") {
    // four honest validators input extensions of [G,a], three adversaries stay
    // silent: every grade outputs [G,a]
    Fixture f;
    for (GaKind kind : {GaKind::TwoGrade, GaKind::ThreeGrade}) {
        GaInstance ga(kind, 0, 0);
        ga.set_delta(1);
        ga.handle_input(0, f.a, 0);
        ga.handle_input(1, f.a, 1);
        ga.handle_input(2, f.a2, 1);
        ga.handle_input(3, f.a2, 1);
        ga.take_snapshot(1, 1);
        if (kind == GaKind::ThreeGrade) ga.take_snapshot(2, 2);
        for (int g = 0; g < grade_count(kind); ++g) {
            auto outs = ga.outputs_for_grade(f.blocks, g);
            REQUIRE(outs.has_value());
            CHECK(std::find(outs->begin(), outs->end(), f.a) != outs->end());
        }
    }
}

TEST_CASE("late equivocation discovered between tallies shrinks later grades") {
    Fixture f;
    GaInstance ga(GaKind::ThreeGrade, 0, 0);
    ga.set_delta(1);
    ga.handle_input(0, f.a, 1);
    ga.handle_input(1, f.a, 1);
    ga.handle_input(2, f.a, 1);
    ga.handle_input(3, f.b, 1);
    ga.handle_input(4, f.b, 1);
    ga.take_snapshot(1, 1);
    ga.take_snapshot(2, 2);
    CHECK(ga.support(f.blocks, f.a, 2) == 3);
    // evidence against validator 2 lands between the grade-0 and grade-1 phases
    ga.handle_input(2, f.b, 4);
    CHECK(ga.support(f.blocks, f.a, 2) == 2);
    CHECK(ga.sender_count() == 5);
    auto g1 = ga.outputs_for_grade(f.blocks, 1);
    REQUIRE(g1.has_value());
    CHECK(std::find(g1->begin(), g1->end(), f.a) == g1->end());  // 2 > 5/2 fails now
}
