#pragma once

// Slow, obviously-correct reference implementations used only by tests. They share no code
// with the library beyond its plain data types.

#include "flowvote/baseline.hpp"
#include "flowvote/decision.hpp"
#include "flowvote/election.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

namespace oracle {

using namespace flowvote;

// sqrt of the sum of squares beyond rank k, accumulated in long double from the smallest term up.
inline double tail_norm(const std::vector<double>& sorted_desc, std::size_t k) {
    long double sum = 0.0L;
    for (std::size_t i = sorted_desc.size(); i > k; --i) {
        const long double v = sorted_desc[i - 1];
        sum += v * v;
    }
    return static_cast<double>(std::sqrt(sum));
}

inline std::uint64_t count_value(std::span<const FlowRecord> records, FeatureKind f, FeatureValue v) {
    std::uint64_t n = 0;
    for (const auto& r : records) {
        FeatureValue x = 0;
        switch (f) {
        case FeatureKind::SrcAs: x = r.src_as; break;
        case FeatureKind::DstAs: x = r.dst_as; break;
        case FeatureKind::SrcPort: x = r.src_port; break;
        case FeatureKind::DstPort: x = r.dst_port; break;
        }
        if (x == v) ++n;
    }
    return n;
}

struct OracleAggregate {
    AsNumber src_as;
    AsNumber dst_as;
    Port src_port;
    Port dst_port;
    std::size_t flows;
};

// Full Cartesian product of the four senator sets, keeping combinations with at least one flow.
inline std::vector<OracleAggregate> cartesian_aggregates(std::span<const FlowRecord> records,
                                                         const SenatorSets& s) {
    std::vector<OracleAggregate> out;
    for (auto a : s[0].members) {
        for (auto b : s[1].members) {
            for (auto c : s[2].members) {
                for (auto d : s[3].members) {
                    std::size_t n = 0;
                    for (const auto& r : records) {
                        if (r.src_as == a && r.dst_as == b && r.src_port == c && r.dst_port == d) ++n;
                    }
                    if (n > 0) out.push_back({a, b, static_cast<Port>(c), static_cast<Port>(d), n});
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Threshold tree: every midpoint split evaluated from scratch at every node.

inline double entropy_bits(const std::vector<LabeledIntensity>& data) {
    if (data.empty()) return 0.0;
    std::array<double, 3> c{};
    for (const auto& d : data) c[static_cast<std::size_t>(d.label)] += 1.0;
    double h = 0.0;
    for (double k : c) {
        if (k > 0.0) {
            const double p = k / static_cast<double>(data.size());
            h -= p * std::log2(p);
        }
    }
    return h;
}

struct Bound {
    std::optional<double> lower;
    std::optional<double> upper;
};

inline void grow(const std::vector<LabeledIntensity>& data, int depth, Bound path,
                 std::array<std::optional<double>, 3>& lowest) {
    std::array<std::size_t, 3> c{};
    for (const auto& d : data) ++c[static_cast<std::size_t>(d.label)];
    const int classes = static_cast<int>(std::count_if(c.begin(), c.end(), [](auto v) { return v > 0; }));
    std::size_t label = 0;
    for (std::size_t i = 1; i < 3; ++i) {
        if (c[i] > c[label]) label = i;
    }

    std::optional<double> best_split;
    double best_gain = 0.0;
    if (classes > 1 && data.size() > 1 && depth < 8) {
        std::set<double> values;
        for (const auto& d : data) values.insert(d.intensity);
        const double parent = entropy_bits(data);
        for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
            const double split = 0.5 * (*it + *std::next(it));
            std::vector<LabeledIntensity> left, right;
            for (const auto& d : data) (d.intensity <= split ? left : right).push_back(d);
            const double n = static_cast<double>(data.size());
            const double gain = parent - static_cast<double>(left.size()) / n * entropy_bits(left) -
                                static_cast<double>(right.size()) / n * entropy_bits(right);
            // Candidates are visited in increasing order, so a tie keeps the smaller split.
            if (gain > 1e-12 && (!best_split || gain > best_gain + 1e-12)) {
                best_gain = gain;
                best_split = split;
            }
        }
    }

    if (!best_split) {
        if (path.lower) {
            auto& slot = lowest[label];
            slot = slot ? std::min(*slot, *path.lower) : *path.lower;
        }
        return;
    }
    std::vector<LabeledIntensity> left, right;
    for (const auto& d : data) (d.intensity <= *best_split ? left : right).push_back(d);
    grow(left, depth + 1, {path.lower, *best_split}, lowest);
    grow(right, depth + 1, {*best_split, path.upper}, lowest);
}

// Per-class minimum lower bound over the tree's rules; a class with no lower-bound rule falls
// back to its smallest observed intensity.
inline std::array<std::optional<double>, 3> class_bounds(const std::vector<LabeledIntensity>& data) {
    std::array<std::optional<double>, 3> lowest;
    grow(data, 0, {}, lowest);
    for (std::size_t k = 0; k < 3; ++k) {
        if (lowest[k]) continue;
        for (const auto& d : data) {
            if (static_cast<std::size_t>(d.label) == k) lowest[k] = lowest[k] ? std::min(*lowest[k], d.intensity) : d.intensity;
        }
    }
    return lowest;
}

// ---------------------------------------------------------------------------
// Frequent itemsets: every itemset contained in some transaction, support counted by scanning.

using ItemKey = std::vector<std::pair<int, std::uint32_t>>;

inline std::map<ItemKey, std::size_t> exhaustive_itemsets(const std::vector<Transaction>& tx, std::size_t min_support) {
    std::set<ItemKey> candidates;
    for (const auto& t : tx) {
        for (unsigned mask = 1; mask < 16; ++mask) {
            ItemKey key;
            for (unsigned b = 0; b < 4; ++b) {
                if (mask & (1u << b)) key.emplace_back(static_cast<int>(t[b].field), t[b].value);
            }
            std::sort(key.begin(), key.end());
            candidates.insert(key);
        }
    }
    std::map<ItemKey, std::size_t> out;
    for (const auto& key : candidates) {
        std::size_t support = 0;
        for (const auto& t : tx) {
            const bool all = std::all_of(key.begin(), key.end(), [&](const auto& item) {
                return std::any_of(t.begin(), t.end(), [&](const Item& i) {
                    return static_cast<int>(i.field) == item.first && i.value == item.second;
                });
            });
            if (all) ++support;
        }
        if (support >= min_support) out[key] = support;
    }
    return out;
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
    long double d = 0.0L;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) d += static_cast<long double>(p[i]) * std::log(static_cast<long double>(p[i]) / q[i]);
    }
    return static_cast<double>(d);
}

}  // namespace oracle
