#include <algorithm>

#include "tobsim/tob.hpp"

namespace tobsim {

bool ProposalBook::note(ValidatorId sender, BlockId log, VrfValue vrf) {
    auto& logs = seen_[sender];
    for (const auto& e : logs) {
        if (e.log == log) return false;
    }
    logs.push_back(Entry{log, vrf});
    if (logs.size() >= 2) equivocators_.insert(sender);
    return true;
}

std::optional<std::pair<ValidatorId, ProposalBook::Entry>> ProposalBook::best_extending(
    const BlockStore& blocks, BlockId lock) const {
    std::optional<std::pair<ValidatorId, Entry>> best;
    for (const auto& [sender, logs] : seen_) {
        if (equivocators_.count(sender)) continue;
        const Entry& e = logs.front();
        if (!blocks.is_prefix(lock, e.log)) continue;
        if (!best || vrf_beats(e.vrf, sender, best->second.vrf, best->first))
            best = std::pair{sender, e};
    }
    return best;
}

namespace {

class InstanceBackend : public VoteBackend {
public:
    explicit InstanceBackend(Tick delta) : delta_(delta) {}

    GaInstance& ensure(View inst) {
        auto it = insts_.find(inst);
        if (it == insts_.end()) {
            it = insts_.emplace(inst, GaInstance(GaKind::ThreeGrade, inst,
                                                 tob1_instance_start(inst, delta_)))
                     .first;
            it->second.set_delta(delta_);
        }
        return it->second;
    }
    const GaInstance* find(View inst) const {
        auto it = insts_.find(inst);
        return it == insts_.end() ? nullptr : &it->second;
    }

    Handled on_vote(View inst, ValidatorId sender, BlockId log, Tick now) override {
        auto& ga = ensure(inst);
        BlockId prior = kGenesis;
        if (auto it = ga.records().find(sender); it != ga.records().end()) prior = it->second.log;
        auto r = ga.handle_input(sender, log, now);
        return Handled{r.outcome, r.forward, prior, {}};
    }
    void snapshot(View inst, int marker, Tick now) override { ensure(inst).take_snapshot(marker, now); }
    bool participation(View inst, int grade) const override {
        const auto* ga = find(inst);
        return grade == 0 || (ga && ga->participation_allowed(grade));
    }
    std::optional<std::vector<BlockId>> outputs(const BlockStore& blocks, View inst,
                                                int grade) const override {
        const auto* ga = find(inst);
        if (!ga) {
            if (grade != 0) return std::nullopt;
            return std::vector<BlockId>{};
        }
        return ga->outputs_for_grade(blocks, grade);
    }
    std::vector<ValidatorId> senders(View inst) const override {
        const auto* ga = find(inst);
        return ga ? ga->sender_set() : std::vector<ValidatorId>{};
    }
    std::vector<std::pair<ValidatorId, BlockId>> support_entries(View inst, int grade) const override {
        const auto* ga = find(inst);
        if (!ga) return {};
        int m = ga->required_marker(grade);
        return ga->filtered_entries(m == 0 ? std::optional<int>{} : std::optional<int>{m});
    }
    std::vector<std::pair<ValidatorId, View>> newly_expired(View) override { return {}; }

private:
    Tick delta_;
    std::map<View, GaInstance> insts_;
};

class BookBackend : public VoteBackend {
public:
    BookBackend(Tick delta, View eta) : delta_(delta), book_(eta) {}

    Handled on_vote(View inst, ValidatorId sender, BlockId log, Tick now) override {
        BlockId prior = kGenesis;
        if (auto it = book_.records().find({sender, inst}); it != book_.records().end())
            prior = it->second.log;
        auto r = book_.handle_vote(sender, inst, log, now);
        return Handled{r.outcome, r.forward, prior, r.superseded_view};
    }
    void snapshot(View inst, int marker, Tick now) override { markers_[inst].emplace(marker, now); }
    bool participation(View inst, int grade) const override {
        int m = required_marker(grade);
        if (m == 0) return true;
        auto it = markers_.find(inst);
        return it != markers_.end() && it->second.count(m) != 0;
    }
    std::optional<std::vector<BlockId>> outputs(const BlockStore& blocks, View inst,
                                                int grade) const override {
        if (!participation(inst, grade)) return std::nullopt;
        return book_.outputs(blocks, marker_tick(inst, grade), inst);
    }
    std::vector<ValidatorId> senders(View inst) const override { return book_.sender_set(inst); }
    std::vector<std::pair<ValidatorId, BlockId>> support_entries(View inst, int grade) const override {
        return book_.filtered_entries(marker_tick(inst, grade), inst);
    }
    std::vector<std::pair<ValidatorId, View>> newly_expired(View inst) override {
        std::vector<std::pair<ValidatorId, View>> fresh;
        for (auto [sender, view] : book_.expired_senders(inst)) {
            if (reported_.insert({inst, sender}).second) fresh.emplace_back(sender, view);
        }
        return fresh;
    }

private:
    // Same marker layout as the three-grade instance: grade 1 filters by the
    // 2-delta marker, grade 2 by the delta marker.
    static int required_marker(int grade) { return grade == 0 ? 0 : (grade == 1 ? 2 : 1); }
    std::optional<Tick> marker_tick(View inst, int grade) const {
        int m = required_marker(grade);
        if (m == 0) return std::nullopt;
        auto it = markers_.find(inst);
        if (it == markers_.end() || !it->second.count(m))
            throw MissingSnapshot("snapshot " + std::to_string(m) + " was not taken");
        return it->second.at(m);
    }

    Tick delta_;
    VoteBook book_;
    std::map<View, std::map<int, Tick>> markers_;
    std::set<std::pair<View, ValidatorId>> reported_;
};

}  // namespace

std::unique_ptr<VoteBackend> make_instance_backend(Tick delta) {
    return std::make_unique<InstanceBackend>(delta);
}
std::unique_ptr<VoteBackend> make_book_backend(Tick delta, View eta) {
    return std::make_unique<BookBackend>(delta, eta);
}

TobSingleEngine::TobSingleEngine(const Scenario& sc, ValidatorId self)
    : self_(self), delta_(sc.delta) {
    lmd_ = sc.protocol == Protocol::Tob1Lmd;
    eta_ = lmd_ ? sc.eta.value_or(0) : 0;
    // Local decisions can legitimately conflict while the network is
    // partitioned; the offline checker owns safety in that case.
    enforce_monotone_ = !sc.asynchrony.has_value();
    backend_ = lmd_ ? make_book_backend(delta_, eta_) : make_instance_backend(delta_);
}

void TobSingleEngine::on_message(Ctx& ctx, const Message& m) {
    if (m.kind == MsgKind::Proposal) {
        if (proposals_[m.view].note(m.sender, m.log, m.vrf)) ctx.broadcast(m);
        return;
    }
    auto h = backend_->on_vote(m.view, m.sender, m.log, ctx.now);
    if (h.outcome == InputOutcome::Recorded) {
        ctx.emit(EvInputRecorded{m.view, m.sender, m.log, m.view});
        if (eta_ != 0 && h.superseded_view)
            ctx.emit(EvVoteSuperseded{m.sender, *h.superseded_view, m.view});
    } else if (h.outcome == InputOutcome::EquivocationRecorded) {
        ctx.emit(EvEquivocation{m.view, m.sender, h.prior_log, m.log, m.view});
    }
    if (h.forward) ctx.broadcast(m);
}

void TobSingleEngine::on_phase(Ctx& ctx) {
    Tick span = 4 * delta_;
    View v = ctx.now / span;
    Tick ph = ctx.now % span;
    if (ph == 2 * delta_) {
        backend_->snapshot(v, 1, ctx.now);
        ctx.emit(EvSnapshot{v, 1});
    } else if (ph == 3 * delta_) {
        backend_->snapshot(v, 2, ctx.now);
        ctx.emit(EvSnapshot{v, 2});
    }
    if (ph == 0) propose(ctx, v);
    else if (ph == delta_) vote(ctx, v);
    else if (ph == 2 * delta_) decide(ctx, v);
}

std::optional<std::vector<BlockId>> TobSingleEngine::prior_outputs(Ctx& ctx, View v, int grade) {
    if (v == 0) return std::vector<BlockId>{kGenesis};  // virtual instance below view 0
    View inst = v - 1;
    if (!backend_->participation(inst, grade)) return std::nullopt;
    if (eta_ != 0) {
        for (auto [sender, view] : backend_->newly_expired(inst))
            ctx.emit(EvVoteExpired{inst, sender, view});
    }
    auto outs = backend_->outputs(ctx.blocks(), inst, grade);
    ctx.emit(EvTally{inst, grade, backend_->senders(inst), backend_->support_entries(inst, grade)});
    if (outs && !outs->empty()) ctx.emit(EvGaOutput{inst, grade, outs->back()});
    return outs;
}

void TobSingleEngine::propose(Ctx& ctx, View v) {
    auto outs = prior_outputs(ctx, v, 0);
    auto candidate = highest_output(ctx.blocks(), outs);
    if (!candidate) return;
    BlockId nb = ctx.new_block(*candidate, v);
    Message m{MsgKind::Proposal, self_, v, nb, ctx.vrf_of(self_, v)};
    proposals_[v].note(self_, nb, m.vrf);
    ctx.broadcast(m);
    ctx.emit(EvProposalSent{v, nb, m.vrf});
}

void TobSingleEngine::vote(Ctx& ctx, View v) {
    auto outs = prior_outputs(ctx, v, 1);
    auto lock = highest_output(ctx.blocks(), outs);
    if (!lock) return;
    BlockId choice = *lock;
    if (auto best = proposals_[v].best_extending(ctx.blocks(), *lock)) choice = best->second.log;
    backend_->on_vote(v, self_, choice, ctx.now);
    ctx.broadcast(Message{MsgKind::GaInput, self_, v, choice, 0});
    ctx.emit(EvVoteCast{v, 1, choice});
}

void TobSingleEngine::decide(Ctx& ctx, View v) {
    auto outs = prior_outputs(ctx, v, 2);
    auto d = highest_output(ctx.blocks(), outs);
    if (!d) return;
    if (ctx.blocks().conflicting(*d, decided_) && enforce_monotone_)
        throw SafetyViolation("validator " + std::to_string(self_) +
                              " decided a log conflicting with its earlier decision");
    if (ctx.blocks().height(*d) > ctx.blocks().height(decided_)) decided_ = *d;
    ctx.emit(EvDecided{v, *d});
}

}  // namespace tobsim
