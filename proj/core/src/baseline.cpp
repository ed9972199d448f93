#include "flowvote/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

namespace flowvote {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::size_t HashProjection::bucket(FeatureValue v) const {
    if (buckets == 0) throw Error("hash projection needs at least one bucket");
    return static_cast<std::size_t>(splitmix64(splitmix64(seed) ^ v) % buckets);
}

std::vector<double> HashProjection::project(std::span<const FlowRecord> records) const {
    std::vector<double> out(buckets, 0.0);
    for (const auto& r : records) out[bucket(feature_value(r, feature))] += 1.0;
    return out;
}

std::vector<double> HashProjection::project(const SortedHistogram& h) const {
    std::vector<double> out(buckets, 0.0);
    for (const auto& e : h.entries) out[bucket(e.value)] += static_cast<double>(e.count);
    return out;
}

std::vector<double> smooth(std::span<const double> counts, double eps) {
    if (counts.empty()) return {};
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto m = static_cast<double>(counts.size());
    std::vector<double> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double p = total > 0.0 ? counts[i] / total : 1.0 / m;
        out[i] = p + eps;
    }
    const double norm = 1.0 + eps * m;
    for (auto& v : out) v /= norm;
    return out;
}

double kl_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw Error("KL distance: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
        d += p[i] * std::log(p[i] / q[i]);
    }
    return d;
}

std::vector<double> kl_series(const BinnedTrace& trace, const HashProjection& projection, double eps) {
    std::vector<double> series(trace.size(), 0.0);
    std::vector<double> previous;
    for (std::size_t t = 0; t < trace.size(); ++t) {
        auto current = smooth(projection.project(trace.bin(t)), eps);
        if (t > 0) series[t] = kl_distance(current, previous);
        previous = std::move(current);
    }
    return series;
}

double warmup_threshold(std::span<const double> series, double fraction, double sigmas) {
    if (series.size() < 2) throw Error("KL warm-up needs at least two bins");
    const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(series.size())));
    const auto last = std::clamp<std::size_t>(n, 1, series.size() - 1);
    const auto window = series.subspan(1, last);
    const double mean = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
    double var = 0.0;
    for (double d : window) var += (d - mean) * (d - mean);
    var /= static_cast<double>(window.size());
    return mean + sigmas * std::sqrt(var);
}

std::vector<KlAlarm> detect_kl(const BinnedTrace& trace, const HashProjection& projection, double threshold,
                               double eps) {
    if (trace.size() < 2) throw Error("KL detection needs at least two bins");
    const auto series = kl_series(trace, projection, eps);
    std::vector<KlAlarm> alarms;
    for (std::size_t t = 1; t < series.size(); ++t) {
        if (series[t] > threshold) alarms.push_back({t, projection.feature, series[t], threshold});
    }
    return alarms;
}

std::string_view to_string(ItemField f) {
    switch (f) {
    case ItemField::SrcIp: return "srcIP";
    case ItemField::DstIp: return "dstIP";
    case ItemField::SrcPort: return "srcPort";
    case ItemField::DstPort: return "dstPort";
    }
    return "?";
}

Transaction to_transaction(const FlowRecord& r) {
    return {Item{ItemField::SrcIp, r.src_ip}, Item{ItemField::DstIp, r.dst_ip}, Item{ItemField::SrcPort, r.src_port},
            Item{ItemField::DstPort, r.dst_port}};
}

bool contains(const Transaction& t, std::span<const Item> items) {
    return std::all_of(items.begin(), items.end(),
                       [&](const Item& i) { return std::find(t.begin(), t.end(), i) != t.end(); });
}

namespace {

using Level = std::map<std::vector<Item>, std::size_t>;

// Joins itemsets sharing all but their last item, then drops candidates with an infrequent subset.
std::vector<std::vector<Item>> generate_candidates(const Level& previous) {
    std::vector<std::vector<Item>> keys;
    keys.reserve(previous.size());
    for (const auto& [k, _] : previous) keys.push_back(k);

    std::vector<std::vector<Item>> out;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        for (std::size_t j = i + 1; j < keys.size(); ++j) {
            const auto& a = keys[i];
            const auto& b = keys[j];
            if (!std::equal(a.begin(), a.end() - 1, b.begin())) break;
            std::vector<Item> cand = a;
            cand.push_back(b.back());
            bool all_frequent = true;
            for (std::size_t drop = 0; drop + 2 < cand.size() && all_frequent; ++drop) {
                std::vector<Item> sub;
                sub.reserve(cand.size() - 1);
                for (std::size_t x = 0; x < cand.size(); ++x) {
                    if (x != drop) sub.push_back(cand[x]);
                }
                all_frequent = previous.count(sub) > 0;
            }
            if (all_frequent) out.push_back(std::move(cand));
        }
    }
    return out;
}

}  // namespace

std::vector<ItemSet> mine_frequent(std::span<const Transaction> transactions, std::size_t min_support) {
    if (min_support < 1) throw Error("minimum support must be >= 1");

    std::vector<ItemSet> result;
    Level level;
    {
        std::map<Item, std::size_t> singles;
        for (const auto& t : transactions) {
            for (const auto& i : t) ++singles[i];
        }
        for (const auto& [item, n] : singles) {
            if (n >= min_support) level[{item}] = n;
        }
    }

    std::size_t k = 1;
    while (!level.empty()) {
        for (const auto& [items, n] : level) result.push_back({items, n});
        if (k == 4) break;
        ++k;

        Level counts;
        for (auto& c : generate_candidates(level)) counts.emplace(std::move(c), 0);
        if (counts.empty()) break;

        // Each transaction holds four items, so enumerate its k-subsets instead of scanning candidates.
        for (const auto& t : transactions) {
            Transaction sorted = t;
            std::sort(sorted.begin(), sorted.end());
            for (unsigned mask = 0; mask < 16; ++mask) {
                if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
                std::vector<Item> sub;
                sub.reserve(k);
                for (unsigned b = 0; b < 4; ++b) {
                    if (mask & (1u << b)) sub.push_back(sorted[b]);
                }
                if (auto it = counts.find(sub); it != counts.end()) ++it->second;
            }
        }
        Level next;
        for (auto& [items, n] : counts) {
            if (n >= min_support) next.emplace(items, n);
        }
        level = std::move(next);
    }

    std::sort(result.begin(), result.end(), [](const ItemSet& a, const ItemSet& b) {
        if (a.items.size() != b.items.size()) return a.items.size() > b.items.size();
        if (a.support != b.support) return a.support > b.support;
        return a.items < b.items;
    });
    return result;
}

std::vector<ItemSet> mine_frequent(std::span<const FlowRecord> flows, std::size_t min_support) {
    std::vector<Transaction> tx;
    tx.reserve(flows.size());
    for (const auto& r : flows) tx.push_back(to_transaction(r));
    return mine_frequent(tx, min_support);
}

std::vector<ItemSet> maximal_itemsets(std::span<const ItemSet> frequent) {
    std::vector<ItemSet> out;
    for (const auto& s : frequent) {
        const bool covered = std::any_of(frequent.begin(), frequent.end(), [&](const ItemSet& other) {
            return other.items.size() > s.items.size() &&
                   std::includes(other.items.begin(), other.items.end(), s.items.begin(), s.items.end());
        });
        if (!covered) out.push_back(s);
    }
    return out;
}

BaselineResult run_baseline(const BinnedTrace& raw, const Thresholds& th, const BaselineConfig& cfg) {
    th.validate();
    BinnedTrace filtered;
    if (cfg.prefilter) filtered = prefilter(raw, *cfg.prefilter);
    const BinnedTrace& trace = cfg.prefilter ? filtered : raw;

    BaselineResult result;
    std::vector<int> alarm_features(trace.size(), 0);
    for (auto f : kAllFeatures) {
        HashProjection proj{f, cfg.buckets, cfg.seed * 4 + index_of(f)};
        const auto series = kl_series(trace, proj, cfg.eps);
        const double gate = cfg.kl_threshold.value_or(warmup_threshold(series, cfg.warmup_fraction));
        result.thresholds[index_of(f)] = gate;
        for (std::size_t t = 1; t < series.size(); ++t) {
            if (series[t] > gate) {
                result.alarms.push_back({t, f, series[t], gate});
                ++alarm_features[t];
            }
        }
    }

    const auto min_support = cfg.min_support.value_or(
        static_cast<std::size_t>(std::max(1.0, std::floor(std::min({th.ddos, th.dos, th.scan})))));

    for (std::size_t t = 0; t < trace.size(); ++t) {
        if (alarm_features[t] < 4) continue;
        result.alarmed_bins.push_back(t);
        const auto flows = trace.bin(t);

        // Patterns anchored on an address carry the signature keys; port-only patterns are background.
        std::vector<ItemSet> anchored;
        for (auto& s : maximal_itemsets(mine_frequent(flows, min_support))) {
            const bool has_ip = std::any_of(s.items.begin(), s.items.end(), [](const Item& i) {
                return i.field == ItemField::SrcIp || i.field == ItemField::DstIp;
            });
            if (has_ip) anchored.push_back(std::move(s));
        }

        std::map<std::tuple<AsNumber, AsNumber, Port, Port>, std::vector<FlowRecord>> groups;
        for (const auto& r : flows) {
            const auto tx = to_transaction(r);
            const bool extracted =
                std::any_of(anchored.begin(), anchored.end(), [&](const ItemSet& s) { return contains(tx, s.items); });
            if (extracted) groups[{r.src_as, r.dst_as, r.src_port, r.dst_port}].push_back(r);
        }
        std::vector<SuspiciousAggregate> aggregates;
        for (auto& [key, members] : groups) {
            aggregates.push_back(
                {std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), std::move(members)});
        }
        result.diagnoses.push_back(classify(aggregates, IntensityIndex(flows), th, t));
    }
    return result;
}

}  // namespace flowvote
