#pragma once

#include <memory>
#include <string>

#include "tobsim/core.hpp"
#include "tobsim/scenario.hpp"
#include "tobsim/trace.hpp"

namespace tobsim {

class World;

/// Services available to a validator engine during one callback.
class Ctx {
public:
    Tick now = 0;
    ValidatorId self = kNoValidator;

    BlockStore& blocks();
    const Scenario& scenario() const;
    VrfValue vrf_of(ValidatorId v, View view) const;
    BlockId new_block(BlockId parent, View view, const std::string& tag = {});
    void broadcast(const Message& m);
    void emit(EventPayload p);

private:
    friend class World;
    Ctx(World& w, Tick now_, ValidatorId self_) : now(now_), self(self_), w_(&w) {}
    World* w_;
};

class ValidatorEngine {
public:
    virtual ~ValidatorEngine() = default;
    virtual void on_message(Ctx& ctx, const Message& m) = 0;
    virtual void on_phase(Ctx& ctx) = 0;
};

/// ga_input: resolved input log for standalone GA runs, or nullopt.
std::unique_ptr<ValidatorEngine> make_engine(const Scenario& sc, ValidatorId self,
                                             std::optional<BlockId> ga_input);

}  // namespace tobsim
