#include <algorithm>

#include "tobsim/sim.hpp"
#include "tobsim/tob.hpp"

namespace tobsim {

namespace {

Tick uniform_delay(StratCtx& ctx) {
    return static_cast<Tick>(ctx.rng() % static_cast<std::uint64_t>(ctx.sc.delta + 1));
}

std::vector<ValidatorId> honest_ids(const StratCtx& ctx) {
    std::vector<ValidatorId> out;
    for (ValidatorId v = 0; v < ctx.sc.n; ++v) {
        if (!std::binary_search(ctx.corrupted.begin(), ctx.corrupted.end(), v)) out.push_back(v);
    }
    return out;
}

/// GA instances whose input phase (fresh) or first snapshot tick (late) is
/// now; the late hits land equivocation evidence between tallies.
struct InputPhaseHit {
    View inst;
    bool late;
};

std::vector<InputPhaseHit> input_phases_at(const Scenario& sc, Tick now) {
    std::vector<InputPhaseHit> hits;
    Tick d = sc.delta;
    switch (sc.protocol) {
        case Protocol::Ga2:
        case Protocol::Ga3: {
            if (now == 0) hits.push_back({0, false});
            if (now == d) hits.push_back({0, true});
            if (sc.protocol == Protocol::Ga3 && now == 2 * d) hits.push_back({0, true});
            break;
        }
        case Protocol::Tob1:
        case Protocol::Tob1Lmd: {
            Tick span = 4 * d;
            View v = now / span;
            Tick ph = now % span;
            if (ph == d) hits.push_back({v, false});
            if (ph == 2 * d) hits.push_back({v, true});
            break;
        }
        case Protocol::Tob2: {
            Tick span = 5 * d;
            View v = now / span;
            Tick ph = now % span;
            if (ph == d) hits.push_back({tob2_ga1_tag(v), false});
            if (ph == 2 * d) hits.push_back({tob2_ga1_tag(v), true});
            if (ph == 3 * d) hits.push_back({tob2_ga2_tag(v), false});
            if (ph == 4 * d) hits.push_back({tob2_ga2_tag(v), true});
            break;
        }
    }
    return hits;
}

std::optional<View> propose_phase_at(const Scenario& sc, Tick now) {
    int span_d = view_delta_span(sc.protocol);
    if (span_d == 0) return std::nullopt;
    Tick span = span_d * sc.delta;
    if (now % span != 0) return std::nullopt;
    return now / span;
}

class RandomDelayStrategy : public Strategy {
public:
    Tick delay(StratCtx& ctx, const Message&, ValidatorId, ValidatorId) override {
        return uniform_delay(ctx);
    }
};

// Corrupted validators stay mute; only the network delays vary.
class SilentStrategy : public RandomDelayStrategy {};

class WithholdMaxDelayStrategy : public Strategy {
public:
    Tick delay(StratCtx& ctx, const Message&, ValidatorId, ValidatorId) override {
        return ctx.sc.delta;
    }
};

/// At every input phase each corrupted id sends one log to the first half of
/// the honest validators and a conflicting one to the rest; one snapshot
/// interval later the halves are crossed so evidence surfaces between
/// tallies. Proposal phases get the same treatment.
class EquivocateSplitStrategy : public Strategy {
public:
    Tick delay(StratCtx& ctx, const Message&, ValidatorId, ValidatorId) override {
        return uniform_delay(ctx);
    }

    void act(StratCtx& ctx, std::vector<AdvDelivery>& out) override {
        if (ctx.corrupted.empty()) return;
        auto honest = honest_ids(ctx);
        if (honest.empty()) return;
        std::size_t half = (honest.size() + 1) / 2;

        for (auto hit : input_phases_at(ctx.sc, ctx.now)) {
            auto [a, b] = fork_for(ctx, hit.inst, MsgKind::GaInput);
            for (ValidatorId c : ctx.corrupted) {
                for (std::size_t i = 0; i < honest.size(); ++i) {
                    bool first_half = i < half;
                    BlockId log = (first_half != hit.late) ? a : b;
                    out.push_back(AdvDelivery{Message{MsgKind::GaInput, c, hit.inst, log, 0},
                                              honest[i], ctx.now + 1});
                }
            }
        }
        if (auto v = propose_phase_at(ctx.sc, ctx.now)) {
            auto [a, b] = fork_for(ctx, *v, MsgKind::Proposal);
            for (ValidatorId c : ctx.corrupted) {
                for (std::size_t i = 0; i < honest.size(); ++i) {
                    BlockId log = i < half ? a : b;
                    out.push_back(
                        AdvDelivery{Message{MsgKind::Proposal, c, *v, log, 0}, honest[i], ctx.now + 1});
                }
            }
        }
    }

private:
    /// Two conflicting extensions of whatever honest log is visible right
    /// now, memoized per instance so the late wave equivocates for real.
    std::pair<BlockId, BlockId> fork_for(StratCtx& ctx, View inst, MsgKind kind) {
        auto key = std::pair{inst, kind};
        if (auto it = forks_.find(key); it != forks_.end()) return it->second;
        BlockId base = kGenesis;
        for (const auto& [by, m] : ctx.tick_sends) {
            if (m.kind != kind) continue;
            if (kind == MsgKind::GaInput && m.view != inst) continue;
            if (kind == MsgKind::Proposal && m.view != inst) continue;
            base = (kind == MsgKind::Proposal) ? ctx.blocks.parent(m.log) : m.log;
            break;
        }
        std::string stem = (kind == MsgKind::Proposal ? "p" : "eq");
        ValidatorId creator = ctx.corrupted.front();
        BlockId a = ctx.make_block(base, creator, inst, stem + "A:" + std::to_string(inst));
        BlockId b = ctx.make_block(base, creator, inst, stem + "B:" + std::to_string(inst));
        auto fork = std::pair{a, b};
        forks_.emplace(key, fork);
        return fork;
    }

    std::map<std::pair<View, MsgKind>, std::pair<BlockId, BlockId>> forks_;
};

/// Inside the asynchrony window every protocol message is pushed past the
/// window's end while the corrupted ids keep equivocating at full speed.
class AsyncPartitionStrategy : public EquivocateSplitStrategy {
public:
    Tick delay(StratCtx& ctx, const Message& m, ValidatorId by, ValidatorId to) override {
        if (ctx.sc.asynchrony) {
            Tick start = ctx.sc.async_start_tick();
            Tick end = ctx.sc.async_end_tick();
            if (ctx.now >= start && ctx.now < end) return (end - ctx.now) + uniform_delay(ctx);
        }
        return EquivocateSplitStrategy::delay(ctx, m, by, to);
    }
};

}  // namespace

std::unique_ptr<Strategy> make_strategy(const AdversaryConfig& cfg) {
    if (cfg.name == "random_delay") return std::make_unique<RandomDelayStrategy>();
    if (cfg.name == "silent") return std::make_unique<SilentStrategy>();
    if (cfg.name == "withhold_max_delay") return std::make_unique<WithholdMaxDelayStrategy>();
    if (cfg.name == "equivocate_split") return std::make_unique<EquivocateSplitStrategy>();
    if (cfg.name == "async_partition") return std::make_unique<AsyncPartitionStrategy>();
    throw ConfigInvalid("unknown adversary strategy: " + cfg.name);
}

}  // namespace tobsim
