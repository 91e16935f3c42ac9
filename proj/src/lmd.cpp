#include "tobsim/lmd.hpp"

#include <algorithm>

namespace tobsim {

VoteHandleResult VoteBook::handle_vote(ValidatorId sender, View vote_view, BlockId log, Tick now) {
    auto eit = e_.find(sender);
    if (eit != e_.end() && eit->second.count(vote_view)) return {InputOutcome::Ignored, false, {}};
    auto key = std::pair{sender, vote_view};
    auto it = v_.find(key);
    if (it == v_.end()) {
        std::optional<View> superseded;
        for (const auto& [k, rec] : v_) {
            if (k.first == sender && k.second < vote_view &&
                (!superseded || k.second > *superseded))
                superseded = k.second;
        }
        v_.emplace(key, InputRecord{log, now});
        return {InputOutcome::Recorded, true, superseded};
    }
    if (it->second.log == log) return {InputOutcome::Ignored, false, {}};
    e_[sender].emplace(vote_view, std::pair{it->second.log, log});
    v_.erase(it);
    return {InputOutcome::EquivocationRecorded, true, {}};
}

bool VoteBook::equivocated_in_window(ValidatorId sender, View current) const {
    auto it = e_.find(sender);
    if (it == e_.end()) return false;
    View lo = window_start(current);
    for (const auto& [view, _] : it->second) {
        if (view >= lo && view <= current) return true;
    }
    return false;
}

std::optional<VoteBook::LatestRec> VoteBook::latest_rec(ValidatorId sender, View current) const {
    if (equivocated_in_window(sender, current)) return std::nullopt;
    View lo = window_start(current);
    std::optional<LatestRec> best;
    auto it = v_.lower_bound({sender, lo});
    for (; it != v_.end() && it->first.first == sender && it->first.second <= current; ++it) {
        best = LatestRec{it->second.log, it->first.second, it->second.received_at};
    }
    return best;
}

std::optional<std::pair<BlockId, View>> VoteBook::latest_unexpired(ValidatorId sender,
                                                                   View current) const {
    auto r = latest_rec(sender, current);
    if (!r) return std::nullopt;
    return std::pair{r->log, r->view};
}

int VoteBook::support(const BlockStore& blocks, BlockId log, std::optional<Tick> marker,
                      View current) const {
    int count = 0;
    for (auto sender : sender_set(current)) {
        auto r = latest_rec(sender, current);
        if (!r) continue;
        if (marker && r->received_at > *marker) continue;
        if (blocks.is_prefix(log, r->log)) ++count;
    }
    return count;
}

int VoteBook::sender_count(View current) const {
    return static_cast<int>(sender_set(current).size());
}

std::vector<ValidatorId> VoteBook::sender_set(View current) const {
    View lo = window_start(current);
    std::vector<ValidatorId> out;
    for (const auto& [key, _] : v_) {
        if (key.second >= lo && key.second <= current) out.push_back(key.first);
    }
    for (const auto& [sender, views] : e_) {
        for (const auto& [view, _] : views) {
            if (view >= lo && view <= current) {
                out.push_back(sender);
                break;
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::pair<ValidatorId, BlockId>> VoteBook::filtered_entries(std::optional<Tick> marker,
                                                                        View current) const {
    std::vector<std::pair<ValidatorId, BlockId>> out;
    for (auto sender : sender_set(current)) {
        auto r = latest_rec(sender, current);
        if (!r) continue;
        if (marker && r->received_at > *marker) continue;
        out.emplace_back(sender, r->log);
    }
    return out;
}

std::vector<BlockId> VoteBook::outputs(const BlockStore& blocks, std::optional<Tick> marker,
                                       View current) const {
    int senders = sender_count(current);
    std::map<BlockId, int> counts;
    for (const auto& [sender, log] : filtered_entries(marker, current)) {
        for (BlockId b = log;; b = blocks.parent(b)) {
            ++counts[b];
            if (b == kGenesis) break;
        }
    }
    std::vector<BlockId> passing;
    for (const auto& [b, c] : counts) {
        if (majority(c, senders)) passing.push_back(b);
    }
    std::sort(passing.begin(), passing.end(),
              [&](BlockId a, BlockId b) { return blocks.height(a) < blocks.height(b); });
    for (std::size_t i = 0; i + 1 < passing.size(); ++i) {
        if (!blocks.is_prefix(passing[i], passing[i + 1]))
            throw IncompatibleOutput("conflicting logs passed the majority threshold");
    }
    return passing;
}

std::vector<std::pair<ValidatorId, View>> VoteBook::expired_senders(View current) const {
    View lo = window_start(current);
    std::map<ValidatorId, View> latest_any;
    for (const auto& [key, _] : v_) {
        auto [sender, view] = key;
        auto it = latest_any.find(sender);
        if (it == latest_any.end() || view > it->second) latest_any[sender] = view;
    }
    std::vector<std::pair<ValidatorId, View>> out;
    for (const auto& [sender, view] : latest_any) {
        if (view < lo) out.emplace_back(sender, view);
    }
    return out;
}

}  // namespace tobsim
