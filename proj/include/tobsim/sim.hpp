#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "tobsim/core.hpp"
#include "tobsim/engine.hpp"
#include "tobsim/scenario.hpp"
#include "tobsim/trace.hpp"

namespace tobsim {

struct ConfigInvalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A delivery planned by the adversary for one of its own messages.
struct AdvDelivery {
    Message msg;         // sender must be a corrupted validator; vrf is stamped by the world
    ValidatorId to;
    Tick arrive;         // clamped to [now+1, now+delta] outside an asynchrony window
};

struct StratCtx {
    Tick now;
    const Scenario& sc;
    BlockStore& blocks;
    std::mt19937_64& rng;
    const std::vector<ValidatorId>& corrupted;  // effective by now, ascending
    // All protocol messages broadcast this tick, observed before delays are
    // chosen (rushing adversary).
    const std::vector<std::pair<ValidatorId, Message>>& tick_sends;
    std::function<BlockId(BlockId parent, ValidatorId creator, View view, const std::string& tag)>
        make_block;
};

/// Pure policy over the adversary's view of the world. Chooses per-recipient
/// delays for protocol messages and injects messages from corrupted ids.
class Strategy {
public:
    virtual ~Strategy() = default;
    /// Raw delay in ticks for one (message, recipient) pair; the world clamps
    /// it to the synchrony bound outside an asynchrony window. A zero delay
    /// delivers on the next tick.
    virtual Tick delay(StratCtx& ctx, const Message& m, ValidatorId by, ValidatorId to) = 0;
    virtual void act(StratCtx&, std::vector<AdvDelivery>&) {}
};

std::unique_ptr<Strategy> make_strategy(const AdversaryConfig& cfg);

class World {
public:
    explicit World(Scenario sc);

    /// Runs the scenario to its horizon; deterministic in the scenario alone.
    Trace run();

    BlockStore& blocks() { return blocks_; }
    const std::vector<ValidatorId>& corrupted_now() const { return corrupted_list_; }

    /// Installs a replacement adversary (used by the scripted test harness).
    void set_strategy(std::unique_ptr<Strategy> s) { strategy_ = std::move(s); }

private:
    friend class Ctx;

    struct PendingDelivery {
        std::int64_t msg_seq;
        Message msg;
        ValidatorId by;
        ValidatorId to;
        Tick sent_at;
    };
    struct ValidatorState {
        std::unique_ptr<ValidatorEngine> engine;
        bool awake = true;
        bool corrupted = false;
        std::deque<PendingDelivery> queued;  // messages that arrived while asleep
    };

    void step(Tick t);
    void apply_delivery(const PendingDelivery& d, Tick t);
    void route(PendingDelivery d, Tick arrive);
    std::int64_t note_send(ValidatorId by, const Message& m, Tick t);
    BlockId make_block(BlockId parent, ValidatorId creator, View view, const std::string& tag);
    Tick clamp_arrival(Tick now, Tick raw_arrive) const;
    bool in_async_window(Tick t) const;

    Scenario sc_;
    BlockStore blocks_;
    Trace trace_;
    std::unique_ptr<Strategy> strategy_;
    std::mt19937_64 rng_delay_;
    std::mt19937_64 rng_adv_;
    std::uint64_t vrf_seed_;
    std::vector<ValidatorState> vals_;
    std::vector<ValidatorId> corrupted_list_;
    std::map<Tick, std::vector<PendingDelivery>> in_flight_;
    std::vector<std::pair<ValidatorId, Message>> tick_sends_;
    std::vector<std::int64_t> tick_send_meta_;  // SEND seq per tick_sends_ entry
    std::int64_t send_seq_ = 0;
    Tick now_ = 0;
};

/// Convenience wrapper: build a world and run it.
Trace run_scenario(const Scenario& sc);

}  // namespace tobsim
