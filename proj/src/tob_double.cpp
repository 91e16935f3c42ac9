#include "tobsim/tob.hpp"

namespace tobsim {

TobDoubleEngine::TobDoubleEngine(const Scenario& sc, ValidatorId self)
    : self_(self), delta_(sc.delta) {}

GaInstance& TobDoubleEngine::ensure(View tag) {
    auto it = instances_.find(tag);
    if (it == instances_.end()) {
        View v = tag / 2;
        Tick start = tob2_view_start(v, delta_) + (tag % 2 == 0 ? delta_ : 3 * delta_);
        it = instances_.emplace(tag, GaInstance(GaKind::TwoGrade, tag, start)).first;
        it->second.set_delta(delta_);
    }
    return it->second;
}

void TobDoubleEngine::handle_ga_input(Ctx& ctx, const Message& m) {
    auto& ga = ensure(m.view);
    BlockId prior = kGenesis;
    if (auto it = ga.records().find(m.sender); it != ga.records().end()) prior = it->second.log;
    auto r = ga.handle_input(m.sender, m.log, ctx.now);
    if (r.outcome == InputOutcome::Recorded)
        ctx.emit(EvInputRecorded{m.view, m.sender, m.log, m.view});
    else if (r.outcome == InputOutcome::EquivocationRecorded)
        ctx.emit(EvEquivocation{m.view, m.sender, prior, m.log, m.view});
    if (r.forward) ctx.broadcast(m);
}

void TobDoubleEngine::on_message(Ctx& ctx, const Message& m) {
    if (m.kind == MsgKind::Proposal) {
        if (proposals_[m.view].note(m.sender, m.log, m.vrf)) ctx.broadcast(m);
        return;
    }
    handle_ga_input(ctx, m);
}

std::optional<std::vector<BlockId>> TobDoubleEngine::read_outputs(Ctx& ctx, View tag, int grade) {
    if (tag < 0) return std::vector<BlockId>{kGenesis};  // virtual instance below view 0
    auto it = instances_.find(tag);
    if (it == instances_.end()) {
        if (grade != 0) return std::nullopt;
        ctx.emit(EvTally{tag, grade, {}, {}});
        return std::vector<BlockId>{};
    }
    auto& ga = it->second;
    if (!ga.participation_allowed(grade)) return std::nullopt;
    auto outs = ga.outputs_for_grade(ctx.blocks(), grade);
    int marker = ga.required_marker(grade);
    ctx.emit(EvTally{tag, grade, ga.sender_set(),
                     ga.filtered_entries(marker == 0 ? std::optional<int>{} : std::optional<int>{marker})});
    if (outs && !outs->empty()) ctx.emit(EvGaOutput{tag, grade, outs->back()});
    return outs;
}

void TobDoubleEngine::on_phase(Ctx& ctx) {
    Tick span = 5 * delta_;
    View v = ctx.now / span;
    Tick ph = ctx.now % span;
    if (ph == 2 * delta_) {
        ensure(tob2_ga1_tag(v)).take_snapshot(1, ctx.now);
        ctx.emit(EvSnapshot{tob2_ga1_tag(v), 1});
    } else if (ph == 4 * delta_) {
        ensure(tob2_ga2_tag(v)).take_snapshot(1, ctx.now);
        ctx.emit(EvSnapshot{tob2_ga2_tag(v), 1});
    }
    if (ph == 0) {
        // propose on top of the grade-0 output of the previous view's second GA
        auto outs = read_outputs(ctx, v == 0 ? -1 : tob2_ga2_tag(v - 1), 0);
        auto candidate = highest_output(ctx.blocks(), outs);
        if (!candidate) return;
        BlockId nb = ctx.new_block(*candidate, v);
        Message m{MsgKind::Proposal, self_, v, nb, ctx.vrf_of(self_, v)};
        proposals_[v].note(self_, nb, m.vrf);
        ctx.broadcast(m);
        ctx.emit(EvProposalSent{v, nb, m.vrf});
    } else if (ph == delta_) {
        // first voting round: lock on grade 1 of GA_{v-1,2}, input to GA_{v,1}
        auto outs = read_outputs(ctx, v == 0 ? -1 : tob2_ga2_tag(v - 1), 1);
        auto lock = highest_output(ctx.blocks(), outs);
        if (!lock) return;
        BlockId choice = *lock;
        if (auto best = proposals_[v].best_extending(ctx.blocks(), *lock)) choice = best->second.log;
        View tag = tob2_ga1_tag(v);
        ensure(tag).handle_input(self_, choice, ctx.now);
        ctx.broadcast(Message{MsgKind::GaInput, self_, tag, choice, 0});
        ctx.emit(EvVoteCast{v, 1, choice});
    } else if (ph == 3 * delta_) {
        // second voting round: grade 0 of GA_{v,1} feeds GA_{v,2}
        auto outs = read_outputs(ctx, tob2_ga1_tag(v), 0);
        auto choice = highest_output(ctx.blocks(), outs);
        if (!choice) return;
        View tag = tob2_ga2_tag(v);
        ensure(tag).handle_input(self_, *choice, ctx.now);
        ctx.broadcast(Message{MsgKind::GaInput, self_, tag, *choice, 0});
        ctx.emit(EvVoteCast{v, 2, *choice});
    } else if (ph == 4 * delta_) {
        // decide grade 1 of GA_{v,1}
        auto outs = read_outputs(ctx, tob2_ga1_tag(v), 1);
        auto d = highest_output(ctx.blocks(), outs);
        if (!d) return;
        if (ctx.blocks().conflicting(*d, decided_))
            throw SafetyViolation("validator " + std::to_string(self_) +
                                  " decided a log conflicting with its earlier decision");
        if (ctx.blocks().height(*d) > ctx.blocks().height(decided_)) decided_ = *d;
        ctx.emit(EvDecided{v, *d});
    }
}

GaStandaloneEngine::GaStandaloneEngine(const Scenario& sc, ValidatorId self,
                                       std::optional<BlockId> input)
    : self_(self),
      inst_(sc.protocol == Protocol::Ga2 ? GaKind::TwoGrade : GaKind::ThreeGrade, 0, 0),
      input_(input) {
    inst_.set_delta(sc.delta);
}

void GaStandaloneEngine::on_message(Ctx& ctx, const Message& m) {
    if (m.kind != MsgKind::GaInput) return;
    BlockId prior = kGenesis;
    if (auto it = inst_.records().find(m.sender); it != inst_.records().end())
        prior = it->second.log;
    auto r = inst_.handle_input(m.sender, m.log, ctx.now);
    if (r.outcome == InputOutcome::Recorded)
        ctx.emit(EvInputRecorded{0, m.sender, m.log, 0});
    else if (r.outcome == InputOutcome::EquivocationRecorded)
        ctx.emit(EvEquivocation{0, m.sender, prior, m.log, 0});
    if (r.forward) ctx.broadcast(m);
}

void GaStandaloneEngine::on_phase(Ctx& ctx) {
    if (ctx.now == 0 && input_) {
        inst_.handle_input(self_, *input_, 0);
        ctx.broadcast(Message{MsgKind::GaInput, self_, 0, *input_, 0});
        ctx.emit(EvInputSent{0, *input_});
    }
    int markers = inst_.kind() == GaKind::TwoGrade ? 1 : 2;
    for (int m = 1; m <= markers; ++m) {
        if (ctx.now == inst_.snapshot_tick(m)) {
            inst_.take_snapshot(m, ctx.now);
            ctx.emit(EvSnapshot{0, m});
        }
    }
    for (int g = 0; g < grade_count(inst_.kind()); ++g) {
        if (ctx.now != inst_.output_tick(g)) continue;
        if (!inst_.participation_allowed(g)) continue;
        auto outs = inst_.outputs_for_grade(ctx.blocks(), g);
        int marker = inst_.required_marker(g);
        ctx.emit(EvTally{0, g, inst_.sender_set(),
                         inst_.filtered_entries(marker == 0 ? std::optional<int>{}
                                                            : std::optional<int>{marker})});
        if (outs && !outs->empty()) ctx.emit(EvGaOutput{0, g, outs->back()});
    }
}

}  // namespace tobsim
