#include "tobsim/ga.hpp"

#include <algorithm>

namespace tobsim {

HandleResult GaInstance::handle_input(ValidatorId sender, BlockId log, Tick now) {
    if (e_.count(sender)) return {InputOutcome::Ignored, false};
    auto it = v_.find(sender);
    if (it == v_.end()) {
        v_.emplace(sender, InputRecord{log, now});
        return {InputOutcome::Recorded, true};
    }
    if (it->second.log == log) return {InputOutcome::Ignored, false};  // re-delivery
    e_.emplace(sender, std::pair{it->second.log, log});
    v_.erase(it);
    return {InputOutcome::EquivocationRecorded, true};
}

void GaInstance::take_snapshot(int marker, Tick now) {
    snapshots_.emplace(marker, now);
}

Tick GaInstance::output_tick(int grade) const {
    int offset = (kind_ == GaKind::TwoGrade) ? 2 + grade : 3 + grade;
    return started_at_ + offset * delta_hint_;
}

int GaInstance::required_marker(int grade) const {
    if (grade == 0) return 0;
    if (kind_ == GaKind::TwoGrade) return 1;    // grade 1 uses V^d
    return grade == 1 ? 2 : 1;                  // grade 1 uses V^2d, grade 2 uses V^d
}

bool GaInstance::participation_allowed(int grade) const {
    int m = required_marker(grade);
    return m == 0 || has_snapshot(m);
}

std::optional<Tick> GaInstance::marker_tick(std::optional<int> marker) const {
    if (!marker || *marker == 0) return std::nullopt;
    auto it = snapshots_.find(*marker);
    if (it == snapshots_.end())
        throw MissingSnapshot("snapshot " + std::to_string(*marker) + " was not taken");
    return it->second;
}

int GaInstance::support(const BlockStore& blocks, BlockId log, std::optional<int> marker) const {
    auto cutoff = marker_tick(marker);
    int count = 0;
    for (const auto& [sender, rec] : v_) {
        if (cutoff && rec.received_at > *cutoff) continue;
        if (blocks.is_prefix(log, rec.log)) ++count;
    }
    return count;
}

std::optional<std::vector<BlockId>> GaInstance::outputs_for_grade(const BlockStore& blocks,
                                                                 int grade) const {
    if (!participation_allowed(grade)) return std::nullopt;
    auto cutoff = marker_tick(required_marker(grade) == 0 ? std::optional<int>{}
                                                          : std::optional<int>{required_marker(grade)});
    int senders = sender_count();
    // Candidate logs are ancestors of recorded tips; count support bottom-up.
    std::map<BlockId, int> counts;
    for (const auto& [sender, rec] : v_) {
        if (cutoff && rec.received_at > *cutoff) continue;
        for (BlockId b = rec.log;; b = blocks.parent(b)) {
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
    // the passing set must form a chain; anything else is a soundness bug
    for (std::size_t i = 0; i + 1 < passing.size(); ++i) {
        if (!blocks.is_prefix(passing[i], passing[i + 1]))
            throw IncompatibleOutput("conflicting logs passed the majority threshold");
    }
    return passing;
}

std::vector<std::pair<ValidatorId, BlockId>> GaInstance::filtered_entries(
    std::optional<int> marker) const {
    auto cutoff = marker_tick(marker);
    std::vector<std::pair<ValidatorId, BlockId>> out;
    for (const auto& [sender, rec] : v_) {
        if (cutoff && rec.received_at > *cutoff) continue;
        out.emplace_back(sender, rec.log);
    }
    return out;
}

std::vector<ValidatorId> GaInstance::sender_set() const {
    std::vector<ValidatorId> out;
    for (const auto& [s, _] : v_) out.push_back(s);
    for (const auto& [s, _] : e_) out.push_back(s);
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<BlockId> highest_output(const BlockStore& blocks,
                                      const std::optional<std::vector<BlockId>>& outputs) {
    if (!outputs || outputs->empty()) return std::nullopt;
    return blocks.highest(*outputs);
}

}  // namespace tobsim
