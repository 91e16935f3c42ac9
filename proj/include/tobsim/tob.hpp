#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "tobsim/core.hpp"
#include "tobsim/engine.hpp"
#include "tobsim/ga.hpp"
#include "tobsim/lmd.hpp"

namespace tobsim {

/// Raised when a validator's new decision conflicts with one of its own
/// earlier decisions. Must never fire on a schedule satisfying the
/// participation assumption; disabled when an asynchrony window exists.
struct SafetyViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Instance timing. GA_v of the 4-delta protocol starts at t_v + delta and
// ends at t_{v+1} + 2*delta. The 5-delta protocol runs two two-grade
// instances per view, tagged 2v and 2v+1.
inline Tick tob1_view_start(View v, Tick delta) { return v * 4 * delta; }
inline Tick tob1_instance_start(View v, Tick delta) { return tob1_view_start(v, delta) + delta; }
inline Tick tob2_view_start(View v, Tick delta) { return v * 5 * delta; }
inline View tob2_ga1_tag(View v) { return 2 * v; }
inline View tob2_ga2_tag(View v) { return 2 * v + 1; }

/// Per-view proposal bookkeeping: first log per sender is the candidate
/// proposal; a second distinct log marks the sender as equivocating and all
/// its proposals are discarded at vote time. Each distinct (sender, log) is
/// rebroadcast once.
class ProposalBook {
public:
    struct Entry {
        BlockId log = kGenesis;
        VrfValue vrf = 0;
    };

    /// Returns true when the proposal is new and must be forwarded.
    bool note(ValidatorId sender, BlockId log, VrfValue vrf);
    bool equivocating(ValidatorId sender) const { return equivocators_.count(sender) != 0; }

    /// Highest-VRF non-equivocating proposal whose log extends `lock`.
    std::optional<std::pair<ValidatorId, Entry>> best_extending(const BlockStore& blocks,
                                                                BlockId lock) const;

private:
    std::map<ValidatorId, std::vector<Entry>> seen_;
    std::set<ValidatorId> equivocators_;
};

/// Tally state behind the single-vote TOB: either one GaInstance per view or
/// a shared expiring-vote book.
class VoteBackend {
public:
    virtual ~VoteBackend() = default;

    struct Handled {
        InputOutcome outcome = InputOutcome::Ignored;
        bool forward = false;
        BlockId prior_log = kGenesis;          // stored log when an equivocation was recorded
        std::optional<View> superseded_view;   // expiring-vote bookkeeping only
    };

    virtual Handled on_vote(View inst, ValidatorId sender, BlockId log, Tick now) = 0;
    virtual void snapshot(View inst, int marker, Tick now) = 0;
    virtual bool participation(View inst, int grade) const = 0;
    virtual std::optional<std::vector<BlockId>> outputs(const BlockStore& blocks, View inst,
                                                        int grade) const = 0;
    virtual std::vector<ValidatorId> senders(View inst) const = 0;
    virtual std::vector<std::pair<ValidatorId, BlockId>> support_entries(View inst,
                                                                         int grade) const = 0;
    /// Senders whose newest vote has aged out of this instance's window;
    /// reported once per (instance, sender).
    virtual std::vector<std::pair<ValidatorId, View>> newly_expired(View inst) = 0;
};

std::unique_ptr<VoteBackend> make_instance_backend(Tick delta);
std::unique_ptr<VoteBackend> make_book_backend(Tick delta, View eta);

/// The 4-delta single-vote protocol; also hosts the expiring-votes variant
/// behind the backend so both run the exact same phase logic.
class TobSingleEngine : public ValidatorEngine {
public:
    TobSingleEngine(const Scenario& sc, ValidatorId self);

    void on_message(Ctx& ctx, const Message& m) override;
    void on_phase(Ctx& ctx) override;

    BlockId decided() const { return decided_; }
    VoteBackend& backend() { return *backend_; }

private:
    void propose(Ctx& ctx, View v);
    void vote(Ctx& ctx, View v);
    void decide(Ctx& ctx, View v);
    std::optional<std::vector<BlockId>> prior_outputs(Ctx& ctx, View v, int grade);

    ValidatorId self_;
    Tick delta_;
    bool lmd_ = false;
    View eta_ = 0;
    bool enforce_monotone_ = true;
    std::unique_ptr<VoteBackend> backend_;
    std::map<View, ProposalBook> proposals_;
    BlockId decided_ = kGenesis;
};

/// The 5-delta protocol with two two-grade agreement rounds per view.
class TobDoubleEngine : public ValidatorEngine {
public:
    TobDoubleEngine(const Scenario& sc, ValidatorId self);

    void on_message(Ctx& ctx, const Message& m) override;
    void on_phase(Ctx& ctx) override;

    BlockId decided() const { return decided_; }

private:
    GaInstance& ensure(View tag);
    std::optional<std::vector<BlockId>> read_outputs(Ctx& ctx, View tag, int grade);
    void handle_ga_input(Ctx& ctx, const Message& m);

    ValidatorId self_;
    Tick delta_;
    std::map<View, GaInstance> instances_;  // keyed by tob2 tag
    std::map<View, ProposalBook> proposals_;
    BlockId decided_ = kGenesis;
};

/// Single standalone graded-agreement instance started at tick 0.
class GaStandaloneEngine : public ValidatorEngine {
public:
    GaStandaloneEngine(const Scenario& sc, ValidatorId self, std::optional<BlockId> input);

    void on_message(Ctx& ctx, const Message& m) override;
    void on_phase(Ctx& ctx) override;

    const GaInstance& instance() const { return inst_; }

private:
    ValidatorId self_;
    GaInstance inst_;
    std::optional<BlockId> input_;
};

}  // namespace tobsim
