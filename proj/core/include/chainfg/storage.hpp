#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chainfg/graph.hpp"

namespace chainfg {

/// The three optimization steps plus the dense baseline. SparseTyped stores
/// per-factor blocks with a type tag and variable indexes; SequentialChain
/// drops tags and indexes because the chain fixes them; CompressedChain also
/// skips structurally-known zero, identity and mirrored entries, keeping only
/// the whitening roots and the few scalars the blocks are rebuilt from.
enum class StorageTier : std::uint8_t { Dense = 0, SparseTyped = 1, SequentialChain = 2, CompressedChain = 3 };

const char* tier_name(StorageTier tier);

struct FootprintReport {
    StorageTier tier = StorageTier::Dense;
    std::size_t bytes = 0;
    std::map<std::string, std::size_t> breakdown;  // values / types / indices
};

/// Byte footprint of storing eps_b and A_b at the given tier with 4- or
/// 8-byte scalars. Counts are structural (no linearization needed).
FootprintReport footprint(const ChainFactorGraph& graph, StorageTier tier, int scalar_bytes);

/// Serialize the whitened linearization of the graph at `states`. Only the
/// compact tiers are file formats; the stream layout is documented in the
/// README (magic "CFG1", tier, layout code, keyframe count, then per-keyframe
/// payloads). An empty graph encodes to an empty stream.
std::vector<std::uint8_t> encode(const ChainFactorGraph& graph, const StateVec& states, StorageTier tier);

/// Inverse of encode: reproduces every whitened block row bit-exactly. The
/// compressed tier rebuilds skipped blocks from structure alone.
std::vector<WhitenedBlockRow> decode(const std::vector<std::uint8_t>& stream, const StateLayout& layout, int n,
                                     StorageTier tier);

}  // namespace chainfg
