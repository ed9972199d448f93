#include "flowvote/decision.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <tuple>

namespace flowvote {

std::string_view to_string(AnomalyKind k) {
    switch (k) {
    case AnomalyKind::DDoS: return "DDoS";
    case AnomalyKind::DoS: return "DoS";
    case AnomalyKind::Scan: return "Scan";
    }
    return "?";
}

std::optional<AnomalyKind> parse_anomaly_kind(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "ddos") return AnomalyKind::DDoS;
    if (lower == "dos") return AnomalyKind::DoS;
    if (lower == "scan") return AnomalyKind::Scan;
    return std::nullopt;
}

std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::DDoS: return "DDoS";
    case Verdict::DoS: return "DoS";
    case Verdict::Scan: return "Scan";
    case Verdict::FalsePositive: return "FalsePositive";
    }
    return "?";
}

std::optional<Verdict> parse_verdict(std::string_view s) {
    if (s == "FalsePositive") return Verdict::FalsePositive;
    if (auto k = parse_anomaly_kind(s)) return static_cast<Verdict>(*k);
    return std::nullopt;
}

std::optional<AnomalyKind> kind_of(Verdict v) {
    if (v == Verdict::FalsePositive) return std::nullopt;
    return static_cast<AnomalyKind>(v);
}

std::string_view to_string(WitnessKey k) {
    switch (k) {
    case WitnessKey::DstIp: return "dst_ip";
    case WitnessKey::SrcDstPair: return "src_dst_pair";
    case WitnessKey::SrcIpDstPort: return "src_ip_dst_port";
    }
    return "?";
}

double Thresholds::operator[](AnomalyKind k) const {
    switch (k) {
    case AnomalyKind::DDoS: return ddos;
    case AnomalyKind::DoS: return dos;
    case AnomalyKind::Scan: return scan;
    }
    return 0.0;
}

void Thresholds::validate() const {
    if (!(ddos > 0.0 && dos > 0.0 && scan > 0.0)) throw Error("thresholds must all be > 0");
}

std::vector<SuspiciousAggregate> enumerate_aggregates(std::span<const FlowRecord> bin_records,
                                                      const SenatorSets& senators) {
    using Key = std::tuple<AsNumber, AsNumber, Port, Port>;
    std::map<Key, std::vector<FlowRecord>> groups;
    for (const auto& r : bin_records) {
        if (senators[index_of(FeatureKind::SrcAs)].contains(r.src_as) &&
            senators[index_of(FeatureKind::DstAs)].contains(r.dst_as) &&
            senators[index_of(FeatureKind::SrcPort)].contains(r.src_port) &&
            senators[index_of(FeatureKind::DstPort)].contains(r.dst_port)) {
            groups[{r.src_as, r.dst_as, r.src_port, r.dst_port}].push_back(r);
        }
    }
    std::vector<SuspiciousAggregate> out;
    out.reserve(groups.size());
    for (auto& [key, flows] : groups) {
        out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), std::move(flows)});
    }
    return out;
}

namespace {

constexpr std::uint64_t pack(std::uint32_t hi, std::uint32_t lo) {
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

struct PackHash {
    std::size_t operator()(std::uint64_t v) const noexcept {
        v ^= v >> 33;
        v *= 0xff51afd7ed558ccdULL;
        v ^= v >> 33;
        return static_cast<std::size_t>(v);
    }
};

// Larger count wins; ties go to the numerically smaller key so the witness is deterministic.
void offer(IntensityIndex::Peak& best, std::uint64_t count, Ipv4 src, Ipv4 dst) {
    if (count > best.count || (count == best.count && std::tie(src, dst) < std::tie(best.src_ip, best.dst_ip))) {
        best = {count, src, dst};
    }
}

}  // namespace

IntensityIndex::IntensityIndex(std::span<const FlowRecord> bin_records) {
    std::unordered_map<std::uint64_t, std::uint64_t, PackHash> per_dst_ip;
    std::unordered_map<std::uint64_t, std::uint64_t, PackHash> per_pair;
    std::unordered_map<std::uint64_t, std::uint64_t, PackHash> per_src_port;
    per_dst_ip.reserve(bin_records.size());
    per_pair.reserve(bin_records.size());
    per_src_port.reserve(bin_records.size());
    for (const auto& r : bin_records) {
        ++per_dst_ip[r.dst_ip];
        ++per_pair[pack(r.src_ip, r.dst_ip)];
        ++per_src_port[pack(r.src_ip, r.dst_port)];
    }

    // An address belongs to every AS it was observed with in this bin. Offering a peak twice is a no-op.
    for (const auto& r : bin_records) {
        offer(ddos_[r.dst_as], per_dst_ip[r.dst_ip], 0, r.dst_ip);
        offer(dos_[pack(r.src_as, r.dst_as)], per_pair[pack(r.src_ip, r.dst_ip)], r.src_ip, r.dst_ip);
        offer(scan_[(static_cast<std::uint64_t>(r.src_as) << 16) | r.dst_port], per_src_port[pack(r.src_ip, r.dst_port)],
              r.src_ip, 0);
    }
}

IntensityIndex::Peak IntensityIndex::ddos(AsNumber dst_as) const {
    auto it = ddos_.find(dst_as);
    return it == ddos_.end() ? Peak{} : it->second;
}

IntensityIndex::Peak IntensityIndex::dos(AsNumber src_as, AsNumber dst_as) const {
    auto it = dos_.find(pack(src_as, dst_as));
    return it == dos_.end() ? Peak{} : it->second;
}

IntensityIndex::Peak IntensityIndex::scan(AsNumber src_as, Port dst_port) const {
    auto it = scan_.find((static_cast<std::uint64_t>(src_as) << 16) | dst_port);
    return it == scan_.end() ? Peak{} : it->second;
}

Diagnosis classify(std::span<const SuspiciousAggregate> aggregates, const IntensityIndex& index, const Thresholds& th,
                   std::size_t bin) {
    th.validate();
    Diagnosis d;
    d.bin = bin;
    for (const auto& agg : aggregates) {
        if (agg.flows.empty()) continue;
        Witness w{agg.src_as, agg.dst_as, agg.src_port, agg.dst_port, agg.flows.size(), WitnessKey::DstIp, 0, 0};

        if (auto peak = index.ddos(agg.dst_as); static_cast<double>(peak.count) > th.ddos) {
            w.key = WitnessKey::DstIp;
            w.dst_ip = peak.dst_ip;
            return {bin, Verdict::DDoS, peak.count, w};
        }
        if (auto peak = index.dos(agg.src_as, agg.dst_as); static_cast<double>(peak.count) > th.dos) {
            w.key = WitnessKey::SrcDstPair;
            w.src_ip = peak.src_ip;
            w.dst_ip = peak.dst_ip;
            return {bin, Verdict::DoS, peak.count, w};
        }
        if (auto peak = index.scan(agg.src_as, agg.dst_port); static_cast<double>(peak.count) > th.scan) {
            w.key = WitnessKey::SrcIpDstPort;
            w.src_ip = peak.src_ip;
            return {bin, Verdict::Scan, peak.count, w};
        }
    }
    return d;
}

Diagnosis classify(std::span<const SuspiciousAggregate> aggregates, std::span<const FlowRecord> bin_records,
                   const Thresholds& th, std::size_t bin) {
    return classify(aggregates, IntensityIndex(bin_records), th, bin);
}

std::vector<Diagnosis> run_decision_stage(std::span<const BinVerdict> verdicts, const SenatorSets& senators,
                                          const BinnedTrace& analysed, const Thresholds& th,
                                          const BinnedTrace* intensity_trace) {
    th.validate();
    std::vector<Diagnosis> out;
    for (const auto& v : verdicts) {
        if (!v.anomalous) continue;
        if (v.bin >= analysed.size()) throw Error("verdict references bin beyond trace");
        const auto records = analysed.bin(v.bin);
        const auto aggregates = enumerate_aggregates(records, senators);
        const auto counted = intensity_trace ? intensity_trace->bin(v.bin) : records;
        out.push_back(classify(aggregates, IntensityIndex(counted), th, v.bin));
    }
    return out;
}

}  // namespace flowvote
