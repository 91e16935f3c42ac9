#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tobsim/core.hpp"
#include "tobsim/ga.hpp"

namespace tobsim::reftest {

// An exhaustively enumerable one-instance world over the log universe
// { "" (genesis), "a", "b" } with two conflicting single-block extensions.
// Honest validators are always awake; the last `role=1` validators are
// adversarial from tick 0 and deliver exactly the planned messages.

struct RefAdvSend {
    ValidatorId sender = 0;
    std::string log;       // "a" or "b"
    ValidatorId to = 0;
    Tick arrive = 1;       // >= 1
};

struct RefCase {
    int n = 5;
    Tick delta = 1;
    GaKind kind = GaKind::TwoGrade;
    std::vector<int> role;                        // per validator: 0 honest, 1 adversarial
    std::map<ValidatorId, std::string> inputs;    // honest input label ("" allowed = genesis)
    std::map<ValidatorId, Tick> send_delay;       // honest uniform network delay, in [0, delta]
    std::vector<RefAdvSend> adv;
};

// per honest validator, one label set per grade
using RefOutputs = std::map<ValidatorId, std::vector<std::set<std::string>>>;

/// Straight-from-definitions evaluation: replays arrivals and message
/// handling literally, then applies the majority formulas per grade.
RefOutputs reference_evaluate(const RefCase& c);

/// Runs the same world through the simulator and the instance engine, and
/// reads the outputs back from the trace.
RefOutputs engine_evaluate(const RefCase& c);

/// Consistency, graded delivery, validity, integrity and uniqueness, checked
/// directly on output label sets. Returns human-readable failures.
std::vector<std::string> check_properties(const RefCase& c, const RefOutputs& outs);

/// All enumerated cases for the exhaustive instance oracle at the given
/// adversary count; the multiset construction collapses validator symmetry.
std::vector<RefCase> enumerate_cases(GaKind kind, int n, int adversaries);

}  // namespace tobsim::reftest
