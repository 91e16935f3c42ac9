#pragma once

#include <map>
#include <optional>
#include <vector>

#include "tobsim/core.hpp"
#include "tobsim/ga.hpp"

namespace tobsim {

struct VoteHandleResult {
    InputOutcome outcome = InputOutcome::Ignored;
    bool forward = false;
    // set when the new vote replaced the sender's previous latest (higher view)
    std::optional<View> superseded_view;
};

/// Per-validator vote book for the expiring-votes protocol variant. Votes are
/// keyed by (sender, view); tallies for instance v consult only views in
/// [v - eta, v] and count each sender's latest unexpired non-equivocating
/// vote. Equivocation evidence is kept per view and excludes its sender from
/// any tally whose window covers that view.
class VoteBook {
public:
    explicit VoteBook(View eta) : eta_(eta) {}

    View eta() const { return eta_; }
    bool never_expires() const { return eta_ == kEtaInfinite; }
    View window_start(View current) const {
        return never_expires() ? 0 : std::max<View>(0, current - eta_);
    }

    VoteHandleResult handle_vote(ValidatorId sender, View vote_view, BlockId log, Tick now);

    bool equivocated_in_window(ValidatorId sender, View current) const;

    /// The sender's recorded vote of maximal view within [current - eta,
    /// current], unless it equivocated in that window.
    std::optional<std::pair<BlockId, View>> latest_unexpired(ValidatorId sender, View current) const;

    /// A vote counts when it was received by the marker, is still its
    /// sender's latest unexpired vote, the sender has no in-window
    /// equivocation, and the vote's log extends `log`.
    int support(const BlockStore& blocks, BlockId log, std::optional<Tick> marker,
                View current) const;

    int sender_count(View current) const;
    std::vector<ValidatorId> sender_set(View current) const;
    std::vector<std::pair<ValidatorId, BlockId>> filtered_entries(std::optional<Tick> marker,
                                                                  View current) const;

    /// Tally-facing output computation mirroring GaInstance::outputs_for_grade.
    std::vector<BlockId> outputs(const BlockStore& blocks, std::optional<Tick> marker,
                                 View current) const;

    /// Senders with a recorded vote but none inside the window; used for the
    /// VOTE_EXPIRED introspection markers.
    std::vector<std::pair<ValidatorId, View>> expired_senders(View current) const;

    const std::map<std::pair<ValidatorId, View>, InputRecord>& records() const { return v_; }

private:
    struct LatestRec {
        BlockId log;
        View view;
        Tick received_at;
    };
    std::optional<LatestRec> latest_rec(ValidatorId sender, View current) const;

    View eta_;
    std::map<std::pair<ValidatorId, View>, InputRecord> v_;
    // per sender: evidence keyed by the view it happened in (first pair kept)
    std::map<ValidatorId, std::map<View, std::pair<BlockId, BlockId>>> e_;
};

}  // namespace tobsim
