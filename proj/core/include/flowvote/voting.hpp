#pragma once

#include "flowvote/pcp.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace flowvote {

/// Subset of the four features, one bit per FeatureKind.
class FeatureFlags {
public:
    constexpr FeatureFlags() = default;

    constexpr void set(FeatureKind f) { bits_ |= static_cast<std::uint8_t>(1u << index_of(f)); }
    constexpr bool test(FeatureKind f) const { return (bits_ >> index_of(f)) & 1u; }
    constexpr int count() const { return __builtin_popcount(bits_); }
    constexpr bool all() const { return bits_ == 0x0f; }
    constexpr bool none() const { return bits_ == 0; }
    constexpr std::uint8_t bits() const { return bits_; }

    friend constexpr bool operator==(FeatureFlags, FeatureFlags) = default;

private:
    std::uint8_t bits_ = 0;
};

/// Decides whether a bin is anomalous from its flagged features.
using VotingRule = std::function<bool(FeatureFlags)>;

/// Default rule: every feature carries at least one vote in the bin.
VotingRule all_features_rule();
/// At least `k` of the four features carry a vote.
VotingRule k_of_four_rule(int k);
/// "and" or "k-of-4" (e.g. "3-of-4").
VotingRule parse_voting_rule(const std::string& name);

struct BinVerdict {
    std::size_t bin = 0;
    FeatureFlags flagged;
    bool anomalous = false;
    std::vector<Vote> votes;
};

/// Per-bin set of features with at least one vote. Result has one entry per bin.
std::vector<FeatureFlags> flag_features(std::span<const Vote> votes, std::size_t bins);

/// One verdict per bin in index order. `votes` may be empty when only the flags are known.
std::vector<BinVerdict> decide_bins(std::span<const FeatureFlags> flags, std::span<const Vote> votes,
                                    const VotingRule& rule = all_features_rule());

std::vector<std::size_t> anomalous_bins(std::span<const BinVerdict> verdicts);

}  // namespace flowvote
