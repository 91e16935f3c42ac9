#pragma once

#include <map>
#include <optional>
#include <vector>

#include "tobsim/core.hpp"

namespace tobsim {

/// Thrown by support() when the requested snapshot was never taken.
struct MissingSnapshot : std::logic_error {
    using std::logic_error::logic_error;
};

/// Thrown when an output phase would emit two conflicting logs. That is
/// impossible for well-formed state, so reaching it means a soundness bug.
struct IncompatibleOutput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class GaKind { TwoGrade, ThreeGrade };

inline int grade_count(GaKind k) { return k == GaKind::TwoGrade ? 2 : 3; }

enum class InputOutcome { Recorded, EquivocationRecorded, Ignored };

struct HandleResult {
    InputOutcome outcome = InputOutcome::Ignored;
    bool forward = false;  // rebroadcast this input (up to two distinct logs per sender)
};

struct InputRecord {
    BlockId log = kGenesis;
    Tick received_at = 0;
};

/// One validator's state for one graded-agreement instance.
///
/// V maps senders to their unique non-equivocating input and its reception
/// time; E holds equivocation evidence. A sender is in exactly one of the
/// two maps once heard from. Snapshots are tick markers: V at time a is
/// recovered by filtering the live V by received_at <= a, which is valid
/// because entries never change their log, they only drop to evidence.
class GaInstance {
public:
    GaInstance(GaKind kind, View tag, Tick started_at)
        : kind_(kind), tag_(tag), started_at_(started_at) {}

    GaKind kind() const { return kind_; }
    View tag() const { return tag_; }
    Tick started_at() const { return started_at_; }

    HandleResult handle_input(ValidatorId sender, BlockId log, Tick now);

    /// marker is 1 (delta) or 2 (2*delta, three-grade only).
    Tick snapshot_tick(int marker) const { return started_at_ + marker * delta_hint_; }
    void set_delta(Tick delta) { delta_hint_ = delta; }
    Tick delta() const { return delta_hint_; }
    void take_snapshot(int marker, Tick now);
    bool has_snapshot(int marker) const { return snapshots_.count(marker) != 0; }

    /// Output-phase tick for a grade: two-grade outputs at 2d, 3d; three-grade
    /// at 3d, 4d, 5d after the input phase.
    Tick output_tick(int grade) const;
    Tick end_tick() const { return output_tick(grade_count(kind_) - 1); }

    /// Snapshot marker a grade's tally filters by (0 = none, live V).
    int required_marker(int grade) const;

    /// Awake-history requirement for a grade, expressed as "has the required
    /// snapshot"; grade 0 only requires being awake now.
    bool participation_allowed(int grade) const;

    /// Senders whose recorded input extends `log`, restricted to reception
    /// time <= the marker when one is given. Equals |V^marker ∩ V| restricted
    /// to descendants of `log`.
    int support(const BlockStore& blocks, BlockId log, std::optional<int> marker) const;

    int sender_count() const { return static_cast<int>(v_.size() + e_.size()); }

    /// All logs passing the strict-majority threshold for the grade, sorted by
    /// height (a prefix-closed chain), or nullopt when the validator may not
    /// participate. Throws IncompatibleOutput if the passing set is not a chain.
    std::optional<std::vector<BlockId>> outputs_for_grade(const BlockStore& blocks, int grade) const;

    const std::map<ValidatorId, InputRecord>& records() const { return v_; }
    const std::map<ValidatorId, std::pair<BlockId, BlockId>>& evidence() const { return e_; }

    /// Entries of V^marker ∩ V as (sender, log) pairs, for instrumentation.
    std::vector<std::pair<ValidatorId, BlockId>> filtered_entries(std::optional<int> marker) const;
    std::vector<ValidatorId> sender_set() const;

private:
    std::optional<Tick> marker_tick(std::optional<int> marker) const;

    GaKind kind_;
    View tag_;
    Tick started_at_;
    Tick delta_hint_ = 1;
    std::map<ValidatorId, InputRecord> v_;
    std::map<ValidatorId, std::pair<BlockId, BlockId>> e_;
    std::map<int, Tick> snapshots_;
};

/// Strict majority on exact integers: twice the support must exceed |S|.
inline bool majority(int support, int senders) { return 2 * support > senders; }

/// Highest element of a prefix-closed output chain, if any.
std::optional<BlockId> highest_output(const BlockStore& blocks,
                                      const std::optional<std::vector<BlockId>>& outputs);

}  // namespace tobsim
