#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tobsim {

using ValidatorId = int;          // index in [0, n)
using View = std::int64_t;        // protocol view / GA instance tag
using Tick = std::int64_t;        // discrete time; all phase boundaries are multiples of delta
using BlockId = int;              // index into BlockStore; 0 is genesis
using VrfValue = std::uint64_t;

inline constexpr BlockId kGenesis = 0;
inline constexpr ValidatorId kNoValidator = -1;
/// Expiration period sentinel: votes never expire.
inline constexpr View kEtaInfinite = -1;

/// Raised by highest() when the given logs do not form a chain. Signals an
/// upstream uniqueness violation; callers must abort the run.
struct IncompatibleSet : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BlockInfo {
    BlockId parent = kGenesis;
    int height = 0;               // genesis has height 0
    ValidatorId creator = kNoValidator;
    View view = -1;
    std::string tag;
};

/// Append-only block tree shared by one run. A log is a chain of blocks from
/// genesis, so it is identified by its tip block id; the prefix relation on
/// logs is the ancestor relation on tips.
class BlockStore {
public:
    BlockStore();

    BlockId add(BlockId parent, ValidatorId creator, View view, std::string tag = {});
    /// Dedups by (parent, tag) so scenario files referring to the same tag
    /// chain share blocks.
    BlockId add_tagged(BlockId parent, const std::string& tag);

    int height(BlockId b) const { return blocks_.at(b).height; }
    BlockId parent(BlockId b) const { return blocks_.at(b).parent; }
    const BlockInfo& info(BlockId b) const { return blocks_.at(b); }
    std::size_t size() const { return blocks_.size(); }

    BlockId ancestor_at(BlockId b, int height) const;
    bool is_prefix(BlockId a, BlockId b) const;
    bool compatible(BlockId a, BlockId b) const;
    bool conflicting(BlockId a, BlockId b) const { return !compatible(a, b); }

    /// Unique maximal element of a pairwise-compatible, non-empty set.
    BlockId highest(std::span<const BlockId> logs) const;

    /// Block ids from genesis to tip, inclusive.
    std::vector<BlockId> chain(BlockId tip) const;

private:
    std::vector<BlockInfo> blocks_;
    std::map<std::pair<BlockId, std::string>, BlockId> tagged_;
};

/// 64-bit avalanche mix (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Stable seed derivation for sub-streams, keyed by a label.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

/// Simulated VRF: a keyed hash of (seed, validator, view). Deterministic and
/// uniform-looking; ties between validators are broken by the smaller id.
VrfValue vrf_value(std::uint64_t seed, ValidatorId v, View view);

/// True when a's VRF beats b's for the same view (higher value wins, smaller
/// id wins ties).
bool vrf_beats(VrfValue a, ValidatorId ia, VrfValue b, ValidatorId ib);

enum class MsgKind { GaInput, Proposal };

/// Wire envelope. GaInput carries no VRF value; `view` tags the GA instance
/// (and, for the expiring-vote protocol, the vote's view).
struct Message {
    MsgKind kind = MsgKind::GaInput;
    ValidatorId sender = kNoValidator;   // originator, preserved across forwards
    View view = 0;
    BlockId log = kGenesis;
    VrfValue vrf = 0;                    // Proposal only

    friend bool operator==(const Message&, const Message&) = default;
    /// Content identity used for forwarding dedup.
    auto key() const { return std::tuple{kind, sender, view, log}; }
};

}  // namespace tobsim
