#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tobsim/core.hpp"
#include "tobsim/scenario.hpp"
#include "tobsim/trace.hpp"

namespace tobsim {

struct InsufficientTrace : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// pi >= eta makes the asynchrony analysis vacuous; rejected up front.
struct AsyncConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Participation-assumption constants, all in ticks; the forward-simulation
/// horizon T_f is always infinite (corruption is permanent).
struct SleepyParams {
    Tick t_b = 0;
    Tick t_s = 0;
    Tick t_c = 0;
    Rational rho{1, 1};
};

/// Declared model for each protocol: (inf, 5d, 2d, 5d, 1) for the 4-delta
/// TOB, (inf, 3d, 2d, 3d, 1) for the 5-delta TOB, and the GA-only variants
/// with no stability term.
SleepyParams declared_params(Protocol p, Tick delta);

struct CountWithWitness {
    int count = 0;
    std::vector<ValidatorId> witnesses;
};

/// Honest validators awake throughout [t1, t2] and uncorrupted by t3.
CountWithWitness h_count(const Scenario& sc, Tick t1, Tick t2, Tick t3);
/// Validators corrupted by t (monotone in t).
CountWithWitness f_count(const Scenario& sc, Tick t);

enum class Granularity { EveryTick, PhaseOnly };

struct TickRecord {
    Tick t = 0;
    int h = 0;
    int f = 0;
    bool ok = true;
};

struct ComplianceReport {
    std::vector<TickRecord> records;
    bool overall = true;
    Tick evaluated_until = 0;  // exclusive; later ticks lack the look-ahead and stay unevaluated
    std::optional<Tick> first_failure;
    std::vector<ValidatorId> h_witness;  // at the first failure
    std::vector<ValidatorId> f_witness;
};

ComplianceReport check_sleepy(const Scenario& sc, const SleepyParams& params,
                              Granularity g = Granularity::EveryTick);

/// Synchronous condition for the expiring-votes protocol: stale-but-unexpired
/// voters count as adversarial on the right-hand side.
ComplianceReport check_lmd_sync(const Scenario& sc, Granularity g = Granularity::EveryTick);

struct AsyncViewRecord {
    View v = 0;
    int lhs = 0;
    int rhs = 0;
    bool ok = true;
    std::vector<ValidatorId> lhs_witness;
    std::vector<ValidatorId> rhs_witness;
};

struct AsyncReport {
    ComplianceReport sync;  // the synchronous condition, checked everywhere
    std::vector<AsyncViewRecord> views;
    bool wake_assumption_ok = true;
    std::vector<ValidatorId> not_awake;  // survivors violating the wake assumption
    bool overall = true;
};

/// Checks the single-asynchrony-window conditions. Throws AsyncConfigError
/// when pi >= eta or the scenario has no window.
AsyncReport check_async(const Scenario& sc);

/// Dispatches to the protocol's declared model (and the window conditions
/// when one is configured).
bool schedule_compliant(const Scenario& sc);

struct Violation {
    std::string kind;  // SAFETY, REORG, CONSISTENCY, ...
    Tick tick = 0;
    std::string detail;
};

/// Replays every claimed guarantee against the trace: the five GA properties
/// plus tally-inclusion chains per instance, TOB safety / reorg resilience /
/// lock induction / decide-lock-candidate, the synchrony contract,
/// authenticity, and the asynchrony-window properties for expiring-vote runs.
std::vector<Violation> verify_trace(const Trace& trace);

struct Metrics {
    double best_case_latency = 0;   // ticks, proposal to first decision
    double avg_case_latency = 0;    // ticks, over synthetic uniform submissions
    double block_time = 0;          // ticks between consecutive proposal slots
    double votes_per_decision = 0;  // voting-round slots per proposal slot
    double good_leader_rate = 0;
    int decided_proposals = 0;
};

Metrics compute_metrics(const Trace& trace, int latency_samples = 10000);

/// The view's proposer-election oracle: the stably honest validator holding
/// the view's top VRF draw, or nullopt when the top draw belongs to the
/// adversary's side.
std::optional<ValidatorId> good_leader(const Scenario& sc, View v);

}  // namespace tobsim
