#include "tobsim/sim.hpp"

#include <algorithm>

#include "tobsim/tob.hpp"

namespace tobsim {

BlockStore& Ctx::blocks() { return w_->blocks_; }
const Scenario& Ctx::scenario() const { return w_->sc_; }
VrfValue Ctx::vrf_of(ValidatorId v, View view) const { return vrf_value(w_->vrf_seed_, v, view); }
BlockId Ctx::new_block(BlockId parent, View view, const std::string& tag) {
    return w_->make_block(parent, self, view, tag);
}
void Ctx::broadcast(const Message& m) {
    std::int64_t seq = w_->note_send(self, m, now);
    w_->tick_sends_.emplace_back(self, m);
    w_->tick_send_meta_.push_back(seq);
}
void Ctx::emit(EventPayload p) {
    w_->trace_.events.push_back(TraceEvent{now, self, std::move(p)});
}

World::World(Scenario sc) : sc_(std::move(sc)) {
    validate(sc_);
    trace_.scenario = sc_;
    trace_.seed = sc_.seed;
    rng_delay_.seed(derive_seed(sc_.seed, "delays"));
    rng_adv_.seed(derive_seed(sc_.seed, "adversary"));
    vrf_seed_ = derive_seed(sc_.seed, "vrf");
    strategy_ = make_strategy(sc_.adversary);

    std::map<ValidatorId, BlockId> inputs;
    for (const auto& [v, tags] : sc_.inputs) {
        BlockId b = kGenesis;
        for (const auto& tag : tags) b = make_block(b, kNoValidator, -1, tag);
        inputs.emplace(v, b);
    }
    vals_.reserve(sc_.n);
    for (ValidatorId v = 0; v < sc_.n; ++v) {
        ValidatorState st;
        st.awake = sc_.awake_at(v, 0);
        std::optional<BlockId> in;
        if (auto it = inputs.find(v); it != inputs.end()) in = it->second;
        st.engine = make_engine(sc_, v, in);
        vals_.push_back(std::move(st));
    }
}

BlockId World::make_block(BlockId parent, ValidatorId creator, View view, const std::string& tag) {
    if (!tag.empty()) {
        auto before = blocks_.size();
        BlockId id = blocks_.add_tagged(parent, tag);
        if (blocks_.size() != before)
            trace_.events.push_back(TraceEvent{now_, creator, EvBlock{id, parent, creator, view, tag}});
        return id;
    }
    BlockId id = blocks_.add(parent, creator, view, tag);
    trace_.events.push_back(TraceEvent{now_, creator, EvBlock{id, parent, creator, view, tag}});
    return id;
}

std::int64_t World::note_send(ValidatorId by, const Message& m, Tick t) {
    std::int64_t seq = send_seq_++;
    trace_.events.push_back(TraceEvent{t, by, EvSend{seq, m.kind, m.sender, m.view, m.log, m.vrf}});
    return seq;
}

bool World::in_async_window(Tick t) const {
    if (!sc_.asynchrony) return false;
    return t >= sc_.async_start_tick() && t < sc_.async_end_tick();
}

Tick World::clamp_arrival(Tick now, Tick raw_arrive) const {
    Tick a = std::max(raw_arrive, now + 1);
    if (!in_async_window(now)) a = std::min(a, now + sc_.delta);
    return a;
}

void World::apply_delivery(const PendingDelivery& d, Tick t) {
    trace_.events.push_back(TraceEvent{t, d.to, EvRecv{d.msg_seq}});
    Ctx ctx(*this, t, d.to);
    vals_[d.to].engine->on_message(ctx, d.msg);
}

void World::step(Tick t) {
    now_ = t;
    tick_sends_.clear();
    tick_send_meta_.clear();

    // wake/sleep transitions; queued messages land at the first awake tick
    for (ValidatorId v = 0; v < sc_.n; ++v) {
        auto& st = vals_[v];
        bool aw = sc_.awake_at(v, t);
        if (aw == st.awake) continue;
        st.awake = aw;
        if (st.corrupted) continue;
        trace_.events.push_back(
            TraceEvent{t, v, aw ? EventPayload{EvWake{}} : EventPayload{EvSleep{}}});
        if (aw) {
            auto queued = std::move(st.queued);
            st.queued.clear();
            for (auto& d : queued) apply_delivery(d, t);
        }
    }

    // due deliveries
    if (auto it = in_flight_.find(t); it != in_flight_.end()) {
        auto batch = std::move(it->second);
        in_flight_.erase(it);
        for (auto& d : batch) {
            auto& st = vals_[d.to];
            if (st.corrupted) continue;
            if (!st.awake) {
                st.queued.push_back(std::move(d));
                continue;
            }
            apply_delivery(d, t);
        }
    }

    // corruption scheduled delta earlier becomes effective now
    for (ValidatorId v = 0; v < sc_.n; ++v) {
        auto& st = vals_[v];
        if (st.corrupted) continue;
        auto from = sc_.corrupted_from(v);
        if (from && *from == t) {
            st.corrupted = true;
            st.queued.clear();
            corrupted_list_.insert(
                std::lower_bound(corrupted_list_.begin(), corrupted_list_.end(), v), v);
            trace_.events.push_back(TraceEvent{t, v, EvCorrupt{}});
        }
    }

    // phase actions (snapshots, output phases, propose/vote/decide)
    for (ValidatorId v = 0; v < sc_.n; ++v) {
        auto& st = vals_[v];
        if (st.corrupted || !st.awake) continue;
        Ctx ctx(*this, t, v);
        st.engine->on_phase(ctx);
    }

    StratCtx sctx{t,
                  sc_,
                  blocks_,
                  rng_adv_,
                  corrupted_list_,
                  tick_sends_,
                  [this](BlockId parent, ValidatorId creator, View view, const std::string& tag) {
                      return make_block(parent, creator, view, tag);
                  }};

    // the adversary observes all of this tick's sends before acting
    std::vector<AdvDelivery> adv;
    strategy_->act(sctx, adv);
    std::map<std::tuple<MsgKind, ValidatorId, View, BlockId>, std::int64_t> adv_seq;
    for (auto& a : adv) {
        if (!std::binary_search(corrupted_list_.begin(), corrupted_list_.end(), a.msg.sender))
            throw ConfigInvalid("adversary injected a message for an uncorrupted sender");
        if (a.msg.kind == MsgKind::Proposal)
            a.msg.vrf = vrf_value(vrf_seed_, a.msg.sender, a.msg.view);
        auto key = a.msg.key();
        auto it = adv_seq.find(key);
        std::int64_t seq = (it != adv_seq.end()) ? it->second : note_send(a.msg.sender, a.msg, t);
        adv_seq.emplace(key, seq);
        if (a.to == a.msg.sender) continue;
        route(PendingDelivery{seq, a.msg, a.msg.sender, a.to, t}, clamp_arrival(t, a.arrive));
    }

    // per-recipient delays for this tick's protocol sends
    for (std::size_t i = 0; i < tick_sends_.size(); ++i) {
        const auto& [by, msg] = tick_sends_[i];
        std::int64_t seq = tick_send_meta_[i];
        for (ValidatorId to = 0; to < sc_.n; ++to) {
            if (to == by) continue;
            Tick d = strategy_->delay(sctx, msg, by, to);
            route(PendingDelivery{seq, msg, by, to, t}, clamp_arrival(t, t + d));
        }
    }
}

void World::route(PendingDelivery d, Tick arrive) {
    if (arrive >= sc_.horizon) return;
    in_flight_[arrive].push_back(std::move(d));
}

Trace World::run() {
    for (Tick t = 0; t < sc_.horizon; ++t) step(t);
    return std::move(trace_);
}

Trace run_scenario(const Scenario& sc) {
    World w(sc);
    return w.run();
}

std::unique_ptr<ValidatorEngine> make_engine(const Scenario& sc, ValidatorId self,
                                             std::optional<BlockId> ga_input) {
    switch (sc.protocol) {
        case Protocol::Ga2:
        case Protocol::Ga3:
            return std::make_unique<GaStandaloneEngine>(sc, self, ga_input);
        case Protocol::Tob1:
        case Protocol::Tob1Lmd:
            return std::make_unique<TobSingleEngine>(sc, self);
        case Protocol::Tob2:
            return std::make_unique<TobDoubleEngine>(sc, self);
    }
    throw ConfigInvalid("unknown protocol");
}

}  // namespace tobsim
