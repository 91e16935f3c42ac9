#include "ga_reference.hpp"

#include <algorithm>
#include <deque>

#include "tobsim/scenario.hpp"
#include "tobsim/sim.hpp"
#include "tobsim/trace.hpp"

namespace tobsim::reftest {

namespace {

bool label_prefix(const std::string& a, const std::string& b) {
    return a.empty() || a == b;
}

Tick last_output_tick(const RefCase& c) {
    return c.delta * (c.kind == GaKind::TwoGrade ? 3 : 5);
}

}  // namespace

RefOutputs reference_evaluate(const RefCase& c) {
    struct Arrival {
        Tick t;
        int seq;
        ValidatorId to;
        ValidatorId sender;
        std::string log;
    };
    struct Accepted {
        std::string log;
        Tick at;
    };
    // full accept history per (recipient, sender): at most two distinct logs
    // are ever accepted, so V/E/S at any time t can be read off directly
    struct State {
        std::map<ValidatorId, std::vector<Accepted>> recs;
    };

    Tick horizon = last_output_tick(c);
    std::deque<Arrival> queue;
    int seq = 0;
    std::vector<State> states(c.n);

    // honest input broadcasts at tick 0; senders record themselves at 0
    for (const auto& [i, log] : c.inputs) {
        states[i].recs[i].push_back({log, 0});
        Tick d = std::max<Tick>(1, c.send_delay.count(i) ? c.send_delay.at(i) : 1);
        for (ValidatorId j = 0; j < c.n; ++j)
            if (j != i) queue.push_back({d, seq++, j, i, log});
    }
    for (const auto& a : c.adv) queue.push_back({a.arrive, seq++, a.to, a.sender, a.log});

    // literal message handling in arrival order, with forwarding
    std::stable_sort(queue.begin(), queue.end(),
                     [](const Arrival& x, const Arrival& y) { return x.t < y.t; });
    while (!queue.empty()) {
        Arrival a = queue.front();
        queue.pop_front();
        if (a.t > horizon) continue;
        if (c.role[a.to] == 1) continue;
        auto& recs = states[a.to].recs[a.sender];
        bool duplicate = std::any_of(recs.begin(), recs.end(),
                                     [&](const Accepted& r) { return r.log == a.log; });
        if (duplicate || recs.size() >= 2) continue;  // known log, or known equivocator
        recs.push_back({a.log, a.t});
        Tick d = std::max<Tick>(1, c.send_delay.count(a.to) ? c.send_delay.at(a.to) : 1);
        for (ValidatorId j = 0; j < c.n; ++j) {
            if (j == a.to) continue;
            Arrival f{a.t + d, seq++, j, a.sender, a.log};
            auto pos = std::upper_bound(queue.begin(), queue.end(), f,
                                        [](const Arrival& x, const Arrival& y) { return x.t < y.t; });
            queue.insert(pos, f);
        }
    }

    // |V^marker_cand ∩ V^upto_cand| > |S^upto| / 2, straight from the records
    auto tally = [&](const State& st, Tick upto, Tick marker) {
        std::set<std::string> passing;
        int senders = 0;
        std::vector<Accepted> live;  // the unique unequivocated record per sender at `upto`
        for (const auto& [k, recs] : st.recs) {
            if (recs.empty() || recs[0].at > upto) continue;
            ++senders;
            bool equivocated = recs.size() >= 2 && recs[1].at <= upto;
            if (!equivocated) live.push_back(recs[0]);
        }
        for (const std::string& cand : {std::string{}, std::string{"a"}, std::string{"b"}}) {
            int support = 0;
            for (const auto& rec : live)
                if (rec.at <= marker && label_prefix(cand, rec.log)) ++support;
            if (2 * support > senders) passing.insert(cand);
        }
        return passing;
    };

    RefOutputs outs;
    for (ValidatorId i = 0; i < c.n; ++i) {
        if (c.role[i] == 1) continue;
        const State& st = states[i];
        std::vector<std::set<std::string>> per_grade;
        if (c.kind == GaKind::TwoGrade) {
            per_grade.push_back(tally(st, 2 * c.delta, 2 * c.delta));
            per_grade.push_back(tally(st, 3 * c.delta, 1 * c.delta));
        } else {
            per_grade.push_back(tally(st, 3 * c.delta, 3 * c.delta));
            per_grade.push_back(tally(st, 4 * c.delta, 2 * c.delta));
            per_grade.push_back(tally(st, 5 * c.delta, 1 * c.delta));
        }
        outs.emplace(i, std::move(per_grade));
    }
    return outs;
}

namespace {

/// Replays the planned case inside the simulator.
class ScriptedStrategy : public Strategy {
public:
    explicit ScriptedStrategy(const RefCase& c) : c_(c) {}

    Tick delay(StratCtx&, const Message&, ValidatorId by, ValidatorId) override {
        auto it = c_.send_delay.find(by);
        return it == c_.send_delay.end() ? 1 : it->second;
    }

    void act(StratCtx& ctx, std::vector<AdvDelivery>& out) override {
        BlockId a = ctx.make_block(kGenesis, -1, -1, "a");
        BlockId b = ctx.make_block(kGenesis, -1, -1, "b");
        for (const auto& s : c_.adv) {
            if (s.arrive != ctx.now + 1) continue;
            out.push_back(AdvDelivery{
                Message{MsgKind::GaInput, s.sender, 0, s.log == "a" ? a : b, 0}, s.to, s.arrive});
        }
    }

private:
    const RefCase& c_;
};

}  // namespace

RefOutputs engine_evaluate(const RefCase& c) {
    Scenario sc;
    sc.n = c.n;
    sc.delta = c.delta;
    sc.protocol = c.kind == GaKind::TwoGrade ? Protocol::Ga2 : Protocol::Ga3;
    sc.horizon = last_output_tick(c) + 1;
    sc.seed = 0;
    for (const auto& [i, log] : c.inputs) {
        if (!log.empty()) sc.inputs[i] = {log};
        // a genesis input has no tag chain; see below
    }
    for (ValidatorId v = 0; v < c.n; ++v)
        if (c.role[v] == 1) sc.corruptions.push_back(CorruptionEntry{v, -c.delta});

    World world(std::move(sc));
    world.set_strategy(std::make_unique<ScriptedStrategy>(c));
    // genesis inputs cannot be expressed as tag chains; they are rare enough
    // that the enumeration simply never produces them
    Trace trace = world.run();

    std::map<BlockId, std::string> labels;
    RefOutputs outs;
    for (ValidatorId i = 0; i < c.n; ++i)
        if (c.role[i] == 0)
            outs[i].resize(static_cast<std::size_t>(grade_count(c.kind)));
    for (const auto& e : trace.events) {
        if (const auto* blk = std::get_if<EvBlock>(&e.payload)) {
            labels[blk->id] = blk->tag;
        } else if (const auto* out = std::get_if<EvGaOutput>(&e.payload)) {
            auto& set = outs[e.validator][static_cast<std::size_t>(out->grade)];
            set.insert("");
            if (out->log != kGenesis) set.insert(labels.at(out->log));
        }
    }
    return outs;
}

std::vector<std::string> check_properties(const RefCase& c, const RefOutputs& outs) {
    std::vector<std::string> fails;
    auto conflicting = [](const std::string& x, const std::string& y) {
        return !label_prefix(x, y) && !label_prefix(y, x);
    };
    int grades = grade_count(c.kind);

    for (int g = 1; g < grades; ++g) {
        for (const auto& [i, oi] : outs)
            for (const auto& [j, oj] : outs)
                for (const auto& x : oi[g])
                    for (const auto& y : oj[g])
                        if (conflicting(x, y))
                            fails.push_back("consistency: grade " + std::to_string(g));
        for (const auto& [i, oi] : outs)
            for (const auto& x : oi[g])
                for (const auto& [j, oj] : outs)
                    if (!oj[g - 1].count(x))
                        fails.push_back("graded delivery: grade " + std::to_string(g));
    }

    // validity premise: every honest validator inputs an extension of the
    // common log; with conflicting inputs only genesis qualifies
    std::string common;
    bool first = true;
    for (const auto& [i, log] : c.inputs) {
        if (first) {
            common = log;
            first = false;
        } else if (common != log) {
            common = "";
        }
    }
    for (const auto& [i, oi] : outs)
        for (int g = 0; g < grades; ++g)
            if (!oi[g].count(common))
                fails.push_back("validity: validator " + std::to_string(i) + " grade " +
                                std::to_string(g));

    for (const auto& [i, oi] : outs)
        for (int g = 0; g < grades; ++g)
            for (const auto& x : oi[g]) {
                bool backed = false;
                for (const auto& [j, log] : c.inputs)
                    if (label_prefix(x, log)) backed = true;
                if (!backed) fails.push_back("integrity: " + x);
                if (oi[g].count(x == "a" ? "b" : "a") && !x.empty())
                    fails.push_back("uniqueness: validator " + std::to_string(i));
            }
    return fails;
}

std::vector<RefCase> enumerate_cases(GaKind kind, int n, int adversaries) {
    std::vector<RefCase> cases;
    int honest = n - adversaries;
    Tick delta = 2;
    std::vector<Tick> arrivals;
    for (Tick t = 1; t <= delta * (kind == GaKind::TwoGrade ? 3 : 5); ++t) arrivals.push_back(t);

    // honest profile: (input, uniform send delay); multisets over profiles
    // collapse the symmetry between same-profile validators
    struct Profile {
        std::string input;
        Tick d;
    };
    std::vector<Profile> profiles = {{"a", 1}, {"a", 2}, {"b", 1}, {"b", 2}};

    // adversarial behaviors, one per adversary: silent, broadcast, equivocate
    // to all, or equivocate across a half split
    struct Behavior {
        int type;  // 0 silent, 1 bcast, 2 eq-all, 3 eq-by-input, 4 eq-half
        std::string log;
        Tick a1 = 1, a2 = 1;
    };
    std::vector<Behavior> behaviors;
    behaviors.push_back({0, "", 0, 0});
    for (Tick a : arrivals) {
        behaviors.push_back({1, "a", a, a});
        behaviors.push_back({1, "b", a, a});
    }
    for (Tick a1 : arrivals)
        for (Tick a2 : arrivals) {
            if (a2 < a1) continue;
            behaviors.push_back({2, "", a1, a2});
            behaviors.push_back({3, "", a1, a2});
            behaviors.push_back({4, "", a1, a2});
        }

    // multisets of honest profiles of size `honest`
    std::vector<std::vector<int>> profile_sets;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start, int left) -> void {
        if (left == 0) {
            profile_sets.push_back(cur);
            return;
        }
        for (int p = start; p < static_cast<int>(profiles.size()); ++p) {
            cur.push_back(p);
            self(self, p, left - 1);
            cur.pop_back();
        }
    };
    rec(rec, 0, honest);

    // multisets of behaviors of size `adversaries`
    std::vector<std::vector<int>> behavior_sets;
    cur.clear();
    auto rec2 = [&](auto&& self, int start, int left) -> void {
        if (left == 0) {
            behavior_sets.push_back(cur);
            return;
        }
        for (int b = start; b < static_cast<int>(behaviors.size()); ++b) {
            cur.push_back(b);
            self(self, b, left - 1);
            cur.pop_back();
        }
    };
    rec2(rec2, 0, adversaries);

    for (const auto& ps : profile_sets) {
        for (const auto& bs : behavior_sets) {
            RefCase c;
            c.n = n;
            c.delta = delta;
            c.kind = kind;
            c.role.assign(n, 0);
            for (int k = 0; k < adversaries; ++k) c.role[honest + k] = 1;
            for (int i = 0; i < honest; ++i) {
                c.inputs[i] = profiles[ps[i]].input;
                c.send_delay[i] = profiles[ps[i]].d;
            }
            for (int k = 0; k < adversaries; ++k) {
                const Behavior& b = behaviors[bs[k]];
                ValidatorId sender = honest + k;
                if (b.type == 0) continue;
                if (b.type == 1) {
                    for (int j = 0; j < honest; ++j)
                        c.adv.push_back({sender, b.log, j, b.a1});
                } else {
                    for (int j = 0; j < honest; ++j) {
                        bool first_group;
                        if (b.type == 2) first_group = true;              // both logs to all
                        else if (b.type == 3) first_group = c.inputs[j] == "a";
                        else first_group = j < (honest + 1) / 2;
                        if (b.type == 2) {
                            c.adv.push_back({sender, "a", j, b.a1});
                            c.adv.push_back({sender, "b", j, b.a2});
                        } else if (first_group) {
                            c.adv.push_back({sender, "a", j, b.a1});
                        } else {
                            c.adv.push_back({sender, "b", j, b.a2});
                        }
                    }
                }
            }
            cases.push_back(std::move(c));
        }
    }
    return cases;
}

}  // namespace tobsim::reftest
