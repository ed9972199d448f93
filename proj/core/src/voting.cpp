#include "flowvote/voting.hpp"

#include <charconv>

namespace flowvote {

VotingRule all_features_rule() {
    return [](FeatureFlags f) { return f.all(); };
}

VotingRule k_of_four_rule(int k) {
    if (k < 1 || k > 4) throw Error("k-of-4 rule needs 1 <= k <= 4");
    return [k](FeatureFlags f) { return f.count() >= k; };
}

VotingRule parse_voting_rule(const std::string& name) {
    if (name == "and" || name == "4-of-4") return all_features_rule();
    int k = 0;
    auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), k);
    if (ec == std::errc{} && std::string_view(ptr) == "-of-4") return k_of_four_rule(k);
    throw Error("unknown voting rule '" + name + "'");
}

std::vector<FeatureFlags> flag_features(std::span<const Vote> votes, std::size_t bins) {
    std::vector<FeatureFlags> flags(bins);
    for (const auto& v : votes) {
        if (v.bin >= bins) throw Error("vote references bin " + std::to_string(v.bin) + " beyond trace");
        flags[v.bin].set(v.feature);
    }
    return flags;
}

std::vector<BinVerdict> decide_bins(std::span<const FeatureFlags> flags, std::span<const Vote> votes,
                                    const VotingRule& rule) {
    std::vector<BinVerdict> verdicts(flags.size());
    for (std::size_t t = 0; t < flags.size(); ++t) {
        verdicts[t].bin = t;
        verdicts[t].flagged = flags[t];
        verdicts[t].anomalous = rule(flags[t]);
    }
    for (const auto& v : votes) {
        if (v.bin < verdicts.size()) verdicts[v.bin].votes.push_back(v);
    }
    return verdicts;
}

std::vector<std::size_t> anomalous_bins(std::span<const BinVerdict> verdicts) {
    std::vector<std::size_t> out;
    for (const auto& v : verdicts) {
        if (v.anomalous) out.push_back(v.bin);
    }
    return out;
}

}  // namespace flowvote
