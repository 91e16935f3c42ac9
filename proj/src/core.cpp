#include "tobsim/core.hpp"

#include <algorithm>

namespace tobsim {

BlockStore::BlockStore() {
    blocks_.push_back(BlockInfo{kGenesis, 0, kNoValidator, -1, "genesis"});
}

BlockId BlockStore::add(BlockId parent, ValidatorId creator, View view, std::string tag) {
    blocks_.at(parent);  // parent must exist
    BlockId id = static_cast<BlockId>(blocks_.size());
    blocks_.push_back(BlockInfo{parent, blocks_[parent].height + 1, creator, view, std::move(tag)});
    return id;
}

BlockId BlockStore::add_tagged(BlockId parent, const std::string& tag) {
    auto key = std::pair{parent, tag};
    if (auto it = tagged_.find(key); it != tagged_.end()) return it->second;
    BlockId id = add(parent, kNoValidator, -1, tag);
    tagged_.emplace(key, id);
    return id;
}

BlockId BlockStore::ancestor_at(BlockId b, int height) const {
    while (blocks_.at(b).height > height) b = blocks_[b].parent;
    return b;
}

bool BlockStore::is_prefix(BlockId a, BlockId b) const {
    if (height(a) > height(b)) return false;
    return ancestor_at(b, height(a)) == a;
}

bool BlockStore::compatible(BlockId a, BlockId b) const {
    return is_prefix(a, b) || is_prefix(b, a);
}

BlockId BlockStore::highest(std::span<const BlockId> logs) const {
    if (logs.empty()) throw IncompatibleSet("highest: empty set");
    BlockId best = logs.front();
    for (BlockId b : logs.subspan(1)) {
        if (height(b) > height(best)) best = b;
    }
    for (BlockId b : logs) {
        if (!is_prefix(b, best)) throw IncompatibleSet("highest: conflicting logs in set");
    }
    return best;
}

std::vector<BlockId> BlockStore::chain(BlockId tip) const {
    std::vector<BlockId> out;
    for (BlockId b = tip;; b = blocks_.at(b).parent) {
        out.push_back(b);
        if (b == kGenesis) break;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = mix64(seed ^ 0xa0761d6478bd642fULL);
    for (unsigned char c : label) h = mix64(h ^ c);
    return h;
}

VrfValue vrf_value(std::uint64_t seed, ValidatorId v, View view) {
    std::uint64_t h = mix64(seed ^ 0x8bb84b93962eacc9ULL);
    h = mix64(h ^ (static_cast<std::uint64_t>(view) * 0xd6e8feb86659fd93ULL));
    h = mix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) * 0xca5a826395121157ULL));
    return h;
}

bool vrf_beats(VrfValue a, ValidatorId ia, VrfValue b, ValidatorId ib) {
    if (a != b) return a > b;
    return ia < ib;
}

}  // namespace tobsim
