#include "tobsim/verify.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "tobsim/tob.hpp"

namespace tobsim {

SleepyParams declared_params(Protocol p, Tick delta) {
    switch (p) {
        case Protocol::Ga2: return {3 * delta, 0, 3 * delta, {1, 1}};
        case Protocol::Ga3: return {5 * delta, 0, 5 * delta, {1, 1}};
        case Protocol::Tob1:
        case Protocol::Tob1Lmd: return {5 * delta, 2 * delta, 5 * delta, {1, 1}};
        case Protocol::Tob2: return {3 * delta, 2 * delta, 3 * delta, {1, 1}};
    }
    return {};
}

namespace {

using Mask = std::uint64_t;

int popcount(Mask m) { return static_cast<int>(__builtin_popcountll(m)); }

std::vector<ValidatorId> mask_ids(Mask m, int n) {
    std::vector<ValidatorId> out;
    for (ValidatorId v = 0; v < n; ++v)
        if (m & (Mask{1} << v)) out.push_back(v);
    return out;
}

Mask honest_awake_mask(const Scenario& sc, Tick t) {
    Mask m = 0;
    for (ValidatorId v = 0; v < sc.n; ++v)
        if (sc.honest_awake_at(v, t)) m |= Mask{1} << v;
    return m;
}

Mask corrupted_mask(const Scenario& sc, Tick t) {
    Mask m = 0;
    for (ValidatorId v = 0; v < sc.n; ++v)
        if (sc.corrupted_by(v, t)) m |= Mask{1} << v;
    return m;
}

/// Honest validators awake throughout [max(0, t1), t2].
Mask stable_mask(const Scenario& sc, Tick t1, Tick t2) {
    Mask m = ~Mask{0};
    for (Tick u = std::max<Tick>(0, t1); u <= t2; ++u) m &= honest_awake_mask(sc, u);
    return m & ((sc.n >= 64) ? ~Mask{0} : ((Mask{1} << sc.n) - 1));
}

}  // namespace

CountWithWitness h_count(const Scenario& sc, Tick t1, Tick t2, Tick t3) {
    Mask m = stable_mask(sc, t1, t2) & ~corrupted_mask(sc, t3);
    return {popcount(m), mask_ids(m, sc.n)};
}

CountWithWitness f_count(const Scenario& sc, Tick t) {
    Mask m = corrupted_mask(sc, t);
    return {popcount(m), mask_ids(m, sc.n)};
}

ComplianceReport check_sleepy(const Scenario& sc, const SleepyParams& params, Granularity g) {
    ComplianceReport rep;
    Tick lookahead = std::max(params.t_b, params.t_c);
    rep.evaluated_until = std::max<Tick>(0, sc.horizon - lookahead);
    Tick step = (g == Granularity::PhaseOnly) ? sc.delta : 1;
    for (Tick t = 0; t < rep.evaluated_until; t += step) {
        auto h = h_count(sc, t - params.t_s, t, t + params.t_c);
        auto f = f_count(sc, t + params.t_b);
        bool ok = static_cast<std::int64_t>(h.count) * params.rho.den >
                  params.rho.num * static_cast<std::int64_t>(f.count);
        rep.records.push_back({t, h.count, f.count, ok});
        if (!ok && rep.overall) {
            rep.overall = false;
            rep.first_failure = t;
            rep.h_witness = h.witnesses;
            rep.f_witness = f.witnesses;
        }
    }
    return rep;
}

namespace {

/// The right-hand side of the expiring-votes conditions: validators whose
/// stale votes are still unexpired, minus the currently stable set, plus the
/// corrupted set.
Mask lmd_rhs_mask(const Scenario& sc, Tick t, Tick union_lo, Mask stable_now, Tick corrupt_at) {
    Mask churn = 0;
    for (Tick s = std::max<Tick>(0, union_lo); s <= t; ++s)
        churn |= stable_mask(sc, s - 2 * sc.delta, s);
    return (churn & ~stable_now) | corrupted_mask(sc, corrupt_at);
}

}  // namespace

ComplianceReport check_lmd_sync(const Scenario& sc, Granularity g) {
    ComplianceReport rep;
    Tick d = sc.delta;
    View eta = sc.eta_or_zero();
    rep.evaluated_until = std::max<Tick>(0, sc.horizon - 5 * d);
    Tick step = (g == Granularity::PhaseOnly) ? d : 1;
    for (Tick t = 0; t < rep.evaluated_until; t += step) {
        Mask stable_now = stable_mask(sc, t - 2 * d, t);
        Mask lhs = stable_now & ~corrupted_mask(sc, t + 5 * d);
        Tick lo = (eta == kEtaInfinite) ? 0 : t - 4 * eta * d;
        Mask rhs = lmd_rhs_mask(sc, t, lo, stable_now, t + 5 * d);
        bool ok = popcount(lhs) > popcount(rhs);
        rep.records.push_back({t, popcount(lhs), popcount(rhs), ok});
        if (!ok && rep.overall) {
            rep.overall = false;
            rep.first_failure = t;
            rep.h_witness = mask_ids(lhs, sc.n);
            rep.f_witness = mask_ids(rhs, sc.n);
        }
    }
    return rep;
}

AsyncReport check_async(const Scenario& sc) {
    if (!sc.asynchrony) throw AsyncConfigError("scenario has no asynchrony window");
    if (!sc.eta) throw AsyncConfigError("asynchrony analysis requires eta");
    View eta = *sc.eta;
    View pi = sc.asynchrony->pi;
    if (eta != kEtaInfinite && pi >= eta)
        throw AsyncConfigError("PI_GE_ETA: asynchrony length pi must be smaller than eta");

    AsyncReport rep;
    rep.sync = check_lmd_sync(sc);
    Tick d = sc.delta;
    View va = sc.asynchrony->last_sync_view;
    Tick t_va = tob1_view_start(va, d);
    Mask survivors_base = stable_mask(sc, t_va - d, t_va + d);

    // every survivor of the last synchronous view must be awake one step later
    Mask awake_2d = honest_awake_mask(sc, t_va + 2 * d);
    Mask missing = survivors_base & ~awake_2d;
    rep.wake_assumption_ok = missing == 0;
    rep.not_awake = mask_ids(missing, sc.n);

    for (View v = va; v <= va + pi + 1; ++v) {
        Tick t_v = tob1_view_start(v, d);
        Tick t3 = t_v + 6 * d;
        Mask lhs = survivors_base & ~corrupted_mask(sc, t3);
        Tick lo = (eta == kEtaInfinite) ? 0 : tob1_view_start(v - eta, d) + d;
        Mask rhs = lmd_rhs_mask(sc, t_v + d, lo, survivors_base, t3);
        bool ok = popcount(lhs) > popcount(rhs);
        rep.views.push_back(
            {v, popcount(lhs), popcount(rhs), ok, mask_ids(lhs, sc.n), mask_ids(rhs, sc.n)});
        if (!ok) rep.overall = false;
    }
    if (!rep.sync.overall || !rep.wake_assumption_ok) rep.overall = false;
    return rep;
}

bool schedule_compliant(const Scenario& sc) {
    if (sc.protocol == Protocol::Tob1Lmd) {
        if (sc.asynchrony) return check_async(sc).overall;
        return check_lmd_sync(sc).overall;
    }
    return check_sleepy(sc, declared_params(sc.protocol, sc.delta)).overall;
}

std::optional<ValidatorId> good_leader(const Scenario& sc, View v) {
    Tick t_v = tob1_view_start(v, sc.delta);
    if (sc.protocol == Protocol::Tob2) t_v = tob2_view_start(v, sc.delta);
    std::uint64_t vrf_seed = derive_seed(sc.seed, "vrf");
    std::optional<ValidatorId> best;
    VrfValue best_vrf = 0;
    for (ValidatorId i = 0; i < sc.n; ++i) {
        bool in_h = sc.honest_awake_at(i, t_v);
        bool in_b = sc.corrupted_by(i, t_v + sc.delta);
        if (!in_h && !in_b) continue;
        VrfValue val = vrf_value(vrf_seed, i, v);
        if (!best || vrf_beats(val, i, best_vrf, *best)) {
            best = i;
            best_vrf = val;
        }
    }
    if (!best) return std::nullopt;
    if (!sc.honest_awake_at(*best, t_v) || sc.corrupted_by(*best, t_v + sc.delta))
        return std::nullopt;
    return best;
}

// ---------------------------------------------------------------------------
// trace verification

namespace {

struct InstMeta {
    GaKind kind = GaKind::ThreeGrade;
    Tick start = 0;
};

InstMeta instance_meta(const Scenario& sc, View tag) {
    Tick d = sc.delta;
    switch (sc.protocol) {
        case Protocol::Ga2: return {GaKind::TwoGrade, 0};
        case Protocol::Ga3: return {GaKind::ThreeGrade, 0};
        case Protocol::Tob1:
        case Protocol::Tob1Lmd: return {GaKind::ThreeGrade, tob1_instance_start(tag, d)};
        case Protocol::Tob2: {
            View v = tag / 2;
            return {GaKind::TwoGrade, tob2_view_start(v, d) + (tag % 2 == 0 ? d : 3 * d)};
        }
    }
    return {};
}

Tick inst_output_tick(const InstMeta& m, Tick d, int grade) {
    int offset = (m.kind == GaKind::TwoGrade) ? 2 + grade : 3 + grade;
    return m.start + offset * d;
}

Tick inst_end_tick(const InstMeta& m, Tick d) {
    return inst_output_tick(m, d, grade_count(m.kind) - 1);
}

/// Ticks the validator must have been awake at to attempt the grade, besides
/// the output tick itself.
std::vector<Tick> inst_wake_reqs(const InstMeta& m, Tick d, int grade) {
    if (grade == 0) return {};
    if (m.kind == GaKind::TwoGrade) return {m.start + d};
    return grade == 1 ? std::vector<Tick>{m.start + 2 * d} : std::vector<Tick>{m.start + d};
}

bool derived_participant(const Scenario& sc, const InstMeta& m, ValidatorId j, int grade) {
    Tick out = inst_output_tick(m, sc.delta, grade);
    if (out >= sc.horizon) return false;
    if (sc.corrupted_by(j, out) || !sc.awake_at(j, out)) return false;
    for (Tick w : inst_wake_reqs(m, sc.delta, grade))
        if (!sc.awake_at(j, w)) return false;
    return true;
}

/// Wake ticks gating the input phase of an instance (the vote-eligibility
/// set used by the validity oracle).
std::vector<Tick> input_wake_reqs(const Scenario& sc, View tag, const InstMeta& m) {
    Tick d = sc.delta;
    std::vector<Tick> reqs{m.start};
    switch (sc.protocol) {
        case Protocol::Ga2:
        case Protocol::Ga3: break;
        case Protocol::Tob1:
        case Protocol::Tob1Lmd:
            if (tag >= 1) reqs.push_back(m.start - 2 * d);
            break;
        case Protocol::Tob2:
            if (tag % 2 == 0 && tag / 2 >= 1) reqs.push_back(m.start - 2 * d);
            break;
    }
    return reqs;
}

struct DecideRec {
    ValidatorId v;
    View view;
    BlockId log;
    Tick tick;
};
struct ProposalRec {
    ValidatorId v;
    View view;
    BlockId log;
    Tick tick;
};
struct SendRec {
    Tick tick;
    ValidatorId by;
    ValidatorId sender;
    MsgKind kind;
    View view;
    BlockId log;
};

struct InstanceData {
    std::map<ValidatorId, BlockId> inputs;
    std::map<std::pair<ValidatorId, int>, BlockId> tips;
    std::map<std::pair<ValidatorId, int>, const EvTally*> tallies;
};

struct Digest {
    BlockStore blocks;
    std::map<View, InstanceData> instances;
    std::vector<DecideRec> decides;
    std::vector<ProposalRec> proposals;
    std::map<std::int64_t, SendRec> sends;
};

BlockId common_prefix(const BlockStore& b, BlockId x, BlockId y) {
    while (!b.is_prefix(x, y)) x = b.parent(x);
    return x;
}

Digest digest_trace(const Trace& tr) {
    Digest d;
    const Scenario& sc = tr.scenario;
    for (const auto& e : tr.events) {
        if (const auto* blk = std::get_if<EvBlock>(&e.payload)) {
            BlockId id = d.blocks.add(blk->parent, blk->creator, blk->view, blk->tag);
            if (id != blk->id) throw ParseError("trace block ids are not contiguous");
        } else if (const auto* in = std::get_if<EvInputSent>(&e.payload)) {
            d.instances[in->instance].inputs.emplace(e.validator, in->log);
        } else if (const auto* vc = std::get_if<EvVoteCast>(&e.payload)) {
            View tag = vc->view;
            if (sc.protocol == Protocol::Tob2)
                tag = vc->round == 1 ? tob2_ga1_tag(vc->view) : tob2_ga2_tag(vc->view);
            d.instances[tag].inputs.emplace(e.validator, vc->log);
        } else if (const auto* out = std::get_if<EvGaOutput>(&e.payload)) {
            d.instances[out->instance].tips[{e.validator, out->grade}] = out->log;
        } else if (const auto* ta = std::get_if<EvTally>(&e.payload)) {
            d.instances[ta->instance].tallies[{e.validator, ta->grade}] = ta;
        } else if (const auto* de = std::get_if<EvDecided>(&e.payload)) {
            d.decides.push_back({e.validator, de->view, de->log, e.tick});
        } else if (const auto* pr = std::get_if<EvProposalSent>(&e.payload)) {
            d.proposals.push_back({e.validator, pr->view, pr->log, e.tick});
        } else if (const auto* se = std::get_if<EvSend>(&e.payload)) {
            d.sends.emplace(se->msg_seq,
                            SendRec{e.tick, e.validator, se->sender, se->kind, se->view, se->log});
        }
    }
    return d;
}

class TraceChecker {
public:
    explicit TraceChecker(const Trace& tr) : tr_(tr), sc_(tr.scenario), d_(digest_trace(tr)) {}

    std::vector<Violation> run() {
        check_network();
        check_instances();
        if (is_tob(sc_.protocol)) check_tob();
        return std::move(out_);
    }

private:
    void flag(const std::string& kind, Tick tick, std::string detail) {
        out_.push_back({kind, tick, std::move(detail)});
    }

    bool inst_synchronous(const InstMeta& m) const {
        if (!sc_.asynchrony) return true;
        Tick end = inst_end_tick(m, sc_.delta);
        return end < sc_.async_start_tick() || m.start >= sc_.async_end_tick();
    }

    // delivery-delay bound outside the window, plus message authenticity
    void check_network() {
        std::map<ValidatorId, std::set<std::tuple<MsgKind, ValidatorId, View, BlockId>>> seen;
        for (const auto& e : tr_.events) {
            if (const auto* se = std::get_if<EvSend>(&e.payload)) {
                if (se->sender != e.validator) {
                    // a foreign sender id is fine for forwards of received
                    // content and for shared keys between corrupted ids
                    bool known = seen[e.validator].count({se->kind, se->sender, se->view, se->log});
                    bool key_shared = sc_.corrupted_by(e.validator, e.tick) &&
                                      sc_.corrupted_by(se->sender, e.tick);
                    if (!known && !key_shared)
                        flag("AUTHENTICITY", e.tick,
                             "validator " + std::to_string(e.validator) +
                                 " sent under identity " + std::to_string(se->sender) +
                                 " without having received that message");
                }
            } else if (const auto* re = std::get_if<EvRecv>(&e.payload)) {
                auto it = d_.sends.find(re->msg_seq);
                if (it == d_.sends.end()) {
                    flag("AUTHENTICITY", e.tick, "receipt without a matching send");
                    continue;
                }
                const SendRec& s = it->second;
                seen[e.validator].insert({s.kind, s.sender, s.view, s.log});
                bool in_window = sc_.asynchrony && s.tick >= sc_.async_start_tick() &&
                                 s.tick < sc_.async_end_tick();
                if (in_window) continue;
                Tick bound = s.tick + sc_.delta;
                if (e.tick <= bound) continue;
                bool excused = sc_.awake_at(e.validator, e.tick);
                for (Tick u = bound; excused && u < e.tick; ++u)
                    if (sc_.awake_at(e.validator, u)) excused = false;
                if (!excused)
                    flag("SYNCHRONY", e.tick,
                         "delivery exceeded the delay bound for message " +
                             std::to_string(re->msg_seq));
            }
        }
    }

    std::vector<View> expected_instances() const {
        switch (sc_.protocol) {
            case Protocol::Ga2:
            case Protocol::Ga3: return {0};
            case Protocol::Tob1:
            case Protocol::Tob1Lmd: {
                std::vector<View> tags;
                for (View v = 0; v <= max_started_view(); ++v) tags.push_back(v);
                return tags;
            }
            case Protocol::Tob2: {
                std::vector<View> tags;
                for (View v = 0; v <= max_started_view(); ++v) {
                    tags.push_back(tob2_ga1_tag(v));
                    tags.push_back(tob2_ga2_tag(v));
                }
                return tags;
            }
        }
        return {};
    }

    void check_instances() {
        // cover instances absent from the trace too: an engine silently
        // skipping a whole instance must still trip the participation check
        std::map<View, InstanceData> expected;
        for (View tag : expected_instances()) expected.emplace(tag, InstanceData{});
        for (const auto& [tag, inst] : d_.instances) expected[tag] = inst;
        for (const auto& [tag, inst] : expected) {
            InstMeta meta = instance_meta(sc_, tag);
            check_participation(tag, meta, inst);
            // instances whose span touches the asynchrony window carry no
            // guarantees; only the decision-level checks cover that region
            if (!inst_synchronous(meta)) continue;
            check_uniqueness_consistency(tag, meta, inst);
            check_graded_delivery(tag, meta, inst);
            check_integrity(tag, meta, inst);
            check_validity(tag, meta, inst);
            check_inclusion(tag, meta, inst);
        }
    }

    void check_participation(View tag, const InstMeta& meta, const InstanceData& inst) {
        for (ValidatorId j = 0; j < sc_.n; ++j) {
            for (int g = 0; g < grade_count(meta.kind); ++g) {
                bool derived = derived_participant(sc_, meta, j, g);
                bool traced = inst.tallies.count({j, g}) != 0;
                if (derived != traced)
                    flag("PARTICIPATION", inst_output_tick(meta, sc_.delta, g),
                         "instance " + std::to_string(tag) + " grade " + std::to_string(g) +
                             ": validator " + std::to_string(j) +
                             (derived ? " should have participated" : " participated unexpectedly"));
            }
        }
    }

    void check_uniqueness_consistency(View tag, const InstMeta& meta, const InstanceData& inst) {
        // outputs are recorded as chain tips, so per-validator uniqueness is
        // structural; cross-validator consistency needs pairwise compatibility
        for (int g = 1; g < grade_count(meta.kind); ++g) {
            std::vector<BlockId> tips;
            for (const auto& [key, tip] : inst.tips)
                if (key.second == g) tips.push_back(tip);
            std::sort(tips.begin(), tips.end());
            tips.erase(std::unique(tips.begin(), tips.end()), tips.end());
            for (std::size_t a = 0; a < tips.size(); ++a)
                for (std::size_t b = a + 1; b < tips.size(); ++b)
                    if (!d_.blocks.compatible(tips[a], tips[b]))
                        flag("CONSISTENCY", inst_output_tick(meta, sc_.delta, g),
                             "instance " + std::to_string(tag) + ": conflicting grade-" +
                                 std::to_string(g) + " outputs");
        }
    }

    void check_graded_delivery(View tag, const InstMeta& meta, const InstanceData& inst) {
        for (int g = 1; g < grade_count(meta.kind); ++g) {
            for (const auto& [key, tip] : inst.tips) {
                if (key.second != g) continue;
                for (ValidatorId j = 0; j < sc_.n; ++j) {
                    if (!derived_participant(sc_, meta, j, g - 1)) continue;
                    auto it = inst.tips.find({j, g - 1});
                    if (it == inst.tips.end() || !d_.blocks.is_prefix(tip, it->second))
                        flag("GRADED_DELIVERY", inst_output_tick(meta, sc_.delta, g),
                             "instance " + std::to_string(tag) + ": grade-" + std::to_string(g) +
                                 " output not delivered at grade " + std::to_string(g - 1) +
                                 " by validator " + std::to_string(j));
                }
            }
        }
    }

    void check_integrity(View tag, const InstMeta& meta, const InstanceData& inst) {
        // with an expiration period, any honest vote still inside the window
        // legitimately backs an output
        std::vector<BlockId> honest_inputs;
        if (sc_.protocol == Protocol::Tob1Lmd) {
            View eta = sc_.eta_or_zero();
            View lo = (eta == kEtaInfinite) ? 0 : std::max<View>(0, tag - eta);
            for (View w = lo; w <= tag; ++w) {
                auto it = d_.instances.find(w);
                if (it == d_.instances.end()) continue;
                for (const auto& [v, log] : it->second.inputs) honest_inputs.push_back(log);
            }
        } else {
            for (const auto& [v, log] : inst.inputs) honest_inputs.push_back(log);
        }
        for (const auto& [key, tip] : inst.tips) {
            bool covered = false;
            for (BlockId log : honest_inputs)
                if (d_.blocks.is_prefix(tip, log)) {
                    covered = true;
                    break;
                }
            if (!covered)
                flag("INTEGRITY", inst_output_tick(meta, sc_.delta, key.second),
                     "instance " + std::to_string(tag) + ": output with no honest input behind it");
        }
    }

    void check_validity(View tag, const InstMeta& meta, const InstanceData& inst) {
        Tick end = inst_end_tick(meta, sc_.delta);
        if (end >= sc_.horizon) return;
        std::vector<ValidatorId> eligible;
        for (ValidatorId j = 0; j < sc_.n; ++j) {
            if (sc_.corrupted_by(j, end)) continue;
            bool ok = true;
            for (Tick w : input_wake_reqs(sc_, tag, meta))
                if (!sc_.awake_at(j, w)) ok = false;
            if (!ok) continue;
            if (!is_tob(sc_.protocol) && !sc_.inputs.count(j)) continue;
            eligible.push_back(j);
        }
        if (eligible.empty()) return;
        std::optional<BlockId> common;
        for (ValidatorId j : eligible) {
            auto it = inst.inputs.find(j);
            if (it == inst.inputs.end()) return;  // premise does not hold
            common = common ? common_prefix(d_.blocks, *common, it->second) : it->second;
        }
        for (ValidatorId j = 0; j < sc_.n; ++j) {
            for (int g = 0; g < grade_count(meta.kind); ++g) {
                if (!derived_participant(sc_, meta, j, g)) continue;
                auto it = inst.tips.find({j, g});
                if (it == inst.tips.end() || !d_.blocks.is_prefix(*common, it->second))
                    flag("VALIDITY", inst_output_tick(meta, sc_.delta, g),
                         "instance " + std::to_string(tag) + ": validator " + std::to_string(j) +
                             " missed the common input at grade " + std::to_string(g));
            }
        }
    }

    /// Time-shifted quorum inclusions between the tally sets of any two
    /// participants of adjacent grades.
    void check_inclusion(View tag, const InstMeta& meta, const InstanceData& inst) {
        auto subset_pairs = [](const EvTally* hi, const EvTally* lo) {
            std::set<std::pair<ValidatorId, BlockId>> low(lo->support.begin(), lo->support.end());
            for (const auto& p : hi->support)
                if (!low.count(p)) return false;
            return true;
        };
        auto subset_ids = [](const EvTally* lo, const EvTally* hi) {
            std::set<ValidatorId> high(hi->senders.begin(), hi->senders.end());
            for (ValidatorId v : lo->senders)
                if (!high.count(v)) return false;
            return true;
        };
        for (int g = 1; g < grade_count(meta.kind); ++g) {
            for (const auto& [khi, thi] : inst.tallies) {
                if (khi.second != g) continue;
                for (const auto& [klo, tlo] : inst.tallies) {
                    if (klo.second != g - 1) continue;
                    if (!subset_pairs(thi, tlo))
                        flag("INCLUSION", inst_output_tick(meta, sc_.delta, g),
                             "instance " + std::to_string(tag) + ": support of grade " +
                                 std::to_string(g) + " not contained in grade " +
                                 std::to_string(g - 1));
                    if (!subset_ids(tlo, thi))
                        flag("INCLUSION", inst_output_tick(meta, sc_.delta, g),
                             "instance " + std::to_string(tag) + ": sender set of grade " +
                                 std::to_string(g - 1) + " not contained in grade " +
                                 std::to_string(g));
                }
            }
        }
    }

    // ---- TOB-level checks ----

    bool view_protected(View v) const {
        if (!sc_.asynchrony) return true;
        View va = sc_.asynchrony->last_sync_view;
        View pi = sc_.asynchrony->pi;
        return v <= va || v >= va + pi + 2;
    }

    void check_tob() {
        check_safety();
        check_vote_count();
        check_reorg();
        check_lock_induction();
        check_decide_chain();
        if (sc_.protocol == Protocol::Tob1Lmd && sc_.asynchrony) check_lmd_induction();
    }

    void check_safety() {
        std::set<BlockId> tips_all;
        std::set<BlockId> tips_protected;
        for (const auto& de : d_.decides) {
            tips_all.insert(de.log);
            if (view_protected(de.view)) tips_protected.insert(de.log);
        }
        const auto& tips = sc_.asynchrony ? tips_protected : tips_all;
        const char* kind = sc_.asynchrony ? "ASYNC_SAFETY" : "SAFETY";
        for (auto a = tips.begin(); a != tips.end(); ++a)
            for (auto b = std::next(a); b != tips.end(); ++b)
                if (!d_.blocks.compatible(*a, *b))
                    flag(kind, 0, "conflicting decisions " + std::to_string(*a) + " vs " +
                                      std::to_string(*b));
    }

    void check_vote_count() {
        std::set<std::tuple<ValidatorId, View, int>> seen;
        for (const auto& e : tr_.events) {
            const auto* vc = std::get_if<EvVoteCast>(&e.payload);
            if (!vc) continue;
            if (!seen.insert({e.validator, vc->view, vc->round}).second)
                flag("VOTE_COUNT", e.tick,
                     "validator " + std::to_string(e.validator) + " voted twice in view " +
                         std::to_string(vc->view));
        }
    }

    View max_started_view() const {
        Tick span = view_delta_span(sc_.protocol) * sc_.delta;
        return (sc_.horizon - 1) / span;
    }

    void check_reorg() {
        bool tob2 = sc_.protocol == Protocol::Tob2;
        Tick dlt = sc_.delta;
        std::map<std::pair<ValidatorId, View>, BlockId> decided_at;
        for (const auto& de : d_.decides) decided_at[{de.v, de.view}] = de.log;

        for (View v = 0; v <= max_started_view(); ++v) {
            auto leader = good_leader(sc_, v);
            if (!leader) continue;
            Tick t_v = tob2 ? tob2_view_start(v, dlt) : tob1_view_start(v, dlt);
            std::optional<BlockId> proposal;
            for (const auto& pr : d_.proposals)
                if (pr.v == *leader && pr.view == v) proposal = pr.log;
            if (!proposal) {
                flag("REORG", t_v, "good leader of view " + std::to_string(v) + " never proposed");
                continue;
            }
            for (View w = tob2 ? v : v + 1; w <= max_started_view(); ++w) {
                if (sc_.asynchrony) {
                    View va = sc_.asynchrony->last_sync_view;
                    View pi = sc_.asynchrony->pi;
                    bool pre = v <= va - 1 && w <= va;
                    bool post = v >= va + pi + 2;
                    if (!pre && !post) continue;
                }
                Tick decide_tick = tob2 ? tob2_view_start(w, dlt) + 4 * dlt
                                        : tob1_view_start(w, dlt) + 2 * dlt;
                Tick wake_req = decide_tick - (tob2 ? 2 : 4) * dlt;
                if (decide_tick >= sc_.horizon) break;
                for (ValidatorId j = 0; j < sc_.n; ++j) {
                    if (sc_.corrupted_by(j, decide_tick)) continue;
                    if (!sc_.awake_at(j, wake_req) || !sc_.awake_at(j, decide_tick)) continue;
                    auto it = decided_at.find({j, w});
                    if (it == decided_at.end() || !d_.blocks.is_prefix(*proposal, it->second))
                        flag("REORG", decide_tick,
                             "good-leader proposal of view " + std::to_string(v) +
                                 " not decided by validator " + std::to_string(j) + " at view " +
                                 std::to_string(w));
                }
            }
        }
    }

    /// Once every grade-1 participant outputs a log, that stays true in all
    /// later instances.
    void check_lock_induction() {
        std::map<View, BlockId> floor_tip;  // per instance: common grade-1 output of all participants
        for (const auto& [tag, inst] : d_.instances) {
            InstMeta meta = instance_meta(sc_, tag);
            if (sc_.protocol == Protocol::Tob2 && tag % 2 == 0) continue;  // locks live in ga2
            if (!inst_synchronous(meta)) continue;
            int lock_grade = 1;
            std::optional<BlockId> common;
            bool have_participant = false;
            bool all_output = true;
            for (ValidatorId j = 0; j < sc_.n; ++j) {
                if (!derived_participant(sc_, meta, j, lock_grade)) continue;
                have_participant = true;
                auto it = inst.tips.find({j, lock_grade});
                if (it == inst.tips.end()) {
                    all_output = false;
                    break;
                }
                common = common ? common_prefix(d_.blocks, *common, it->second) : it->second;
            }
            if (have_participant && all_output && common && *common != kGenesis)
                floor_tip[tag] = *common;
        }
        for (const auto& [tag, tip] : floor_tip) {
            for (const auto& [tag2, inst2] : d_.instances) {
                if (tag2 <= tag) continue;
                if (sc_.protocol == Protocol::Tob2 && tag2 % 2 == 0) continue;
                InstMeta meta2 = instance_meta(sc_, tag2);
                if (!inst_synchronous(meta2)) continue;
                for (ValidatorId j = 0; j < sc_.n; ++j) {
                    if (!derived_participant(sc_, meta2, j, 1)) continue;
                    auto it = inst2.tips.find({j, 1});
                    if (it == inst2.tips.end() || !d_.blocks.is_prefix(tip, it->second))
                        flag("LOCK_INDUCTION", instance_meta(sc_, tag2).start,
                             "lock " + std::to_string(tip) + " of instance " + std::to_string(tag) +
                                 " lost by validator " + std::to_string(j) + " in instance " +
                                 std::to_string(tag2));
                }
            }
        }
    }

    /// Decided logs are extended by every lock, and locks by every candidate.
    void check_decide_chain() {
        bool tob2 = sc_.protocol == Protocol::Tob2;
        for (const auto& de : d_.decides) {
            if (sc_.asynchrony && !view_protected(de.view)) continue;
            // the instance whose outputs were read in this decide phase
            // locks/candidates corresponding to this decision: the same
            // instance for the 4-delta protocol, the view's second GA for the
            // 5-delta one
            View lock_inst;
            int lock_grade = 1, cand_grade = 0;
            if (tob2) {
                lock_inst = tob2_ga2_tag(de.view);
            } else {
                if (de.view < 1) continue;
                lock_inst = de.view - 1;
            }
            auto iit = d_.instances.find(lock_inst);
            if (iit == d_.instances.end()) continue;
            InstMeta meta = instance_meta(sc_, lock_inst);
            if (sc_.asynchrony && !inst_synchronous(meta)) continue;
            std::vector<BlockId> locks;
            for (ValidatorId j = 0; j < sc_.n; ++j) {
                if (!derived_participant(sc_, meta, j, lock_grade)) continue;
                auto it = iit->second.tips.find({j, lock_grade});
                if (it == iit->second.tips.end() || !d_.blocks.is_prefix(de.log, it->second))
                    flag("DECIDE_CHAIN", de.tick,
                         "decision at view " + std::to_string(de.view) +
                             " not extended by the lock of validator " + std::to_string(j));
                else
                    locks.push_back(it->second);
            }
            for (ValidatorId k = 0; k < sc_.n; ++k) {
                if (!derived_participant(sc_, meta, k, cand_grade)) continue;
                auto it = iit->second.tips.find({k, cand_grade});
                for (BlockId lock : locks) {
                    if (it == iit->second.tips.end() || !d_.blocks.is_prefix(lock, it->second))
                        flag("DECIDE_CHAIN", de.tick,
                             "candidate of validator " + std::to_string(k) +
                                 " does not extend a lock at view " + std::to_string(de.view));
                }
            }
        }
    }

    /// Survivors of the last synchronous view keep voting extensions of the
    /// pre-window decision throughout the window.
    void check_lmd_induction() {
        View va = sc_.asynchrony->last_sync_view;
        View pi = sc_.asynchrony->pi;
        Tick d = sc_.delta;
        Tick t_va = tob1_view_start(va, d);
        std::optional<BlockId> decided;
        for (const auto& de : d_.decides) {
            if (de.view > va) continue;
            if (!decided || d_.blocks.height(de.log) > d_.blocks.height(*decided)) decided = de.log;
        }
        if (!decided || *decided == kGenesis) return;
        for (const auto& e : tr_.events) {
            const auto* vc = std::get_if<EvVoteCast>(&e.payload);
            if (!vc || vc->view < va || vc->view > va + pi + 1) continue;
            Tick t3 = tob1_view_start(vc->view, d) + 6 * d;
            bool survivor = !sc_.corrupted_by(e.validator, t3);
            for (Tick u = t_va - d; survivor && u <= t_va + d; ++u)
                survivor = sc_.honest_awake_at(e.validator, u);
            if (!survivor) continue;
            if (!d_.blocks.is_prefix(*decided, vc->log))
                flag("LMD_INDUCTION", e.tick,
                     "survivor " + std::to_string(e.validator) +
                         " voted off the pre-window decision in view " + std::to_string(vc->view));
        }
    }

    const Trace& tr_;
    const Scenario& sc_;
    Digest d_;
    std::vector<Violation> out_;
};

}  // namespace

std::vector<Violation> verify_trace(const Trace& trace) {
    TraceChecker checker(trace);
    return checker.run();
}

Metrics compute_metrics(const Trace& trace, int latency_samples) {
    const Scenario& sc = trace.scenario;
    Digest d = digest_trace(trace);

    // first decision tick per proposed block
    struct Decided {
        Tick proposed;
        Tick decided;
    };
    std::vector<Decided> decided;
    for (const auto& pr : d.proposals) {
        Tick best = -1;
        for (const auto& de : d.decides) {
            if (de.tick < pr.tick) continue;
            if (!d.blocks.is_prefix(pr.log, de.log)) continue;
            if (best < 0 || de.tick < best) best = de.tick;
        }
        if (best >= 0) decided.push_back({pr.tick, best});
    }
    std::sort(decided.begin(), decided.end(),
              [](const Decided& a, const Decided& b) { return a.proposed < b.proposed; });
    decided.erase(std::unique(decided.begin(), decided.end(),
                              [](const Decided& a, const Decided& b) {
                                  return a.proposed == b.proposed && a.decided == b.decided;
                              }),
                  decided.end());

    Metrics m;
    m.decided_proposals = static_cast<int>(decided.size());
    if (decided.size() < 2) throw InsufficientTrace("need at least two decided proposals");

    double best = 1e300;
    for (const auto& rec : decided) best = std::min(best, double(rec.decided - rec.proposed));
    m.best_case_latency = best;

    std::vector<Tick> proposal_ticks, vote_ticks;
    for (const auto& pr : d.proposals) proposal_ticks.push_back(pr.tick);
    for (const auto& e : trace.events)
        if (std::get_if<EvVoteCast>(&e.payload)) vote_ticks.push_back(e.tick);
    auto uniq = [](std::vector<Tick>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(proposal_ticks);
    uniq(vote_ticks);
    if (proposal_ticks.size() >= 2) {
        double total = double(proposal_ticks.back() - proposal_ticks.front());
        m.block_time = total / double(proposal_ticks.size() - 1);
    }
    m.votes_per_decision =
        proposal_ticks.empty() ? 0.0 : double(vote_ticks.size()) / double(proposal_ticks.size());

    // expected confirmation time of a transaction with a uniform submission
    // tick: it rides the first decided proposal at or after the submission
    std::vector<Tick> dec_prop(decided.size()), dec_tick(decided.size());
    for (std::size_t i = 0; i < decided.size(); ++i) {
        dec_prop[i] = decided[i].proposed;
        dec_tick[i] = decided[i].decided;
    }
    std::vector<Tick> suffix_min(decided.size());
    for (std::size_t i = decided.size(); i-- > 0;) {
        suffix_min[i] = dec_tick[i];
        if (i + 1 < decided.size()) suffix_min[i] = std::min(suffix_min[i], suffix_min[i + 1]);
    }
    std::mt19937_64 rng(derive_seed(trace.seed, "metrics"));
    double lo = double(dec_prop.front());
    double hi = double(dec_prop.back());
    double sum = 0;
    int used = 0;
    for (int s = 0; s < latency_samples; ++s) {
        double u = lo + (double(rng() >> 11) / 9007199254740992.0) * (hi - lo);
        auto it = std::lower_bound(dec_prop.begin(), dec_prop.end(), static_cast<Tick>(std::ceil(u)));
        if (it == dec_prop.end()) continue;
        std::size_t idx = static_cast<std::size_t>(it - dec_prop.begin());
        sum += double(suffix_min[idx]) - u;
        ++used;
    }
    m.avg_case_latency = used ? sum / used : 0.0;

    Tick span = view_delta_span(sc.protocol) * sc.delta;
    if (span > 0) {
        View views = (sc.horizon + span - 1) / span;
        int good = 0;
        for (View v = 0; v < views; ++v)
            if (good_leader(sc, v)) ++good;
        m.good_leader_rate = views ? double(good) / double(views) : 0.0;
    }
    return m;
}

}  // namespace tobsim
