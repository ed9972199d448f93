#pragma once

#include "flowvote/election.hpp"
#include "flowvote/voting.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace flowvote {

/// Root causes in classifier priority order.
enum class AnomalyKind : std::uint8_t { DDoS = 0, DoS = 1, Scan = 2 };

inline constexpr std::array<AnomalyKind, 3> kAllKinds{AnomalyKind::DDoS, AnomalyKind::DoS, AnomalyKind::Scan};

std::string_view to_string(AnomalyKind k);
std::optional<AnomalyKind> parse_anomaly_kind(std::string_view s);

enum class Verdict : std::uint8_t { DDoS, DoS, Scan, FalsePositive };

std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view s);
std::optional<AnomalyKind> kind_of(Verdict v);

/// Flows of one bin sharing one senator value on each of the four features.
struct SuspiciousAggregate {
    AsNumber src_as = 0;
    AsNumber dst_as = 0;
    Port src_port = 0;
    Port dst_port = 0;
    std::vector<FlowRecord> flows;
};

/// Non-empty aggregates of the senator Cartesian product, ordered by (srcAS, dstAS, srcPort, dstPort).
std::vector<SuspiciousAggregate> enumerate_aggregates(std::span<const FlowRecord> bin_records,
                                                      const SenatorSets& senators);

/// Intensity thresholds in flows per bin. A signature fires when its intensity is strictly greater.
struct Thresholds {
    double ddos = 100.0;
    double dos = 50.0;
    double scan = 30.0;
    /// True for the cold-start defaults, cleared once learned or loaded.
    bool bootstrap = true;

    double operator[](AnomalyKind k) const;
    void validate() const;
    friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

enum class WitnessKey : std::uint8_t { DstIp, SrcDstPair, SrcIpDstPort };

std::string_view to_string(WitnessKey k);

struct Witness {
    AsNumber src_as = 0;
    AsNumber dst_as = 0;
    Port src_port = 0;
    Port dst_port = 0;
    std::size_t aggregate_flows = 0;
    WitnessKey key = WitnessKey::DstIp;
    Ipv4 src_ip = 0;
    Ipv4 dst_ip = 0;
};

struct Diagnosis {
    std::size_t bin = 0;
    Verdict verdict = Verdict::FalsePositive;
    std::uint64_t intensity = 0;
    std::optional<Witness> witness;
};

/// Per-bin flow counts behind the three signature checks, precomputed once per bin.
class IntensityIndex {
public:
    explicit IntensityIndex(std::span<const FlowRecord> bin_records);

    struct Peak {
        std::uint64_t count = 0;
        Ipv4 src_ip = 0;
        Ipv4 dst_ip = 0;
    };

    /// Largest per-dstIP flow count over dstIPs seen in `dst_as`.
    Peak ddos(AsNumber dst_as) const;
    /// Largest per-(srcIP, dstIP) flow count over pairs seen in (`src_as`, `dst_as`).
    Peak dos(AsNumber src_as, AsNumber dst_as) const;
    /// Largest per-(srcIP, dstPort) flow count over srcIPs seen in `src_as`.
    Peak scan(AsNumber src_as, Port dst_port) const;

private:
    std::unordered_map<std::uint64_t, Peak> ddos_;
    std::unordered_map<std::uint64_t, Peak> dos_;
    std::unordered_map<std::uint64_t, Peak> scan_;
};

/// Three-step signature check (DDoS, then DoS, then scan) over aggregates in order; first hit wins.
Diagnosis classify(std::span<const SuspiciousAggregate> aggregates, std::span<const FlowRecord> bin_records,
                   const Thresholds& th, std::size_t bin = 0);
Diagnosis classify(std::span<const SuspiciousAggregate> aggregates, const IntensityIndex& index,
                   const Thresholds& th, std::size_t bin = 0);

/// Diagnoses every anomalous bin, in bin order. Intensities are counted over `intensity_trace`
/// when given, otherwise over the analysed (pre-filtered) trace.
std::vector<Diagnosis> run_decision_stage(std::span<const BinVerdict> verdicts, const SenatorSets& senators,
                                          const BinnedTrace& analysed, const Thresholds& th,
                                          const BinnedTrace* intensity_trace = nullptr);

// ---------------------------------------------------------------------------
// Threshold learning

struct LabeledIntensity {
    double intensity = 1.0;
    AnomalyKind label = AnomalyKind::Scan;
};

struct TreeConfig {
    int max_depth = 8;
};

/// Binary information-gain tree on the single intensity attribute.
/// Left branch: intensity <= split, right branch: intensity > split.
class IntensityTree {
public:
    struct Node {
        bool leaf = true;
        AnomalyKind label = AnomalyKind::DDoS;
        double split = 0.0;
        int left = -1;
        int right = -1;
        std::array<std::size_t, 3> counts{};
    };

    /// Root-to-leaf path collapsed to an interval (lower, upper] and the leaf's class.
    struct Rule {
        std::optional<double> lower;
        std::optional<double> upper;
        AnomalyKind label = AnomalyKind::DDoS;
    };

    static IntensityTree fit(std::span<const LabeledIntensity> data, const TreeConfig& cfg = {});

    const std::vector<Node>& nodes() const { return nodes_; }
    std::vector<Rule> rules() const;
    AnomalyKind predict(double intensity) const;
    int depth() const;

private:
    std::vector<Node> nodes_;
};

using ClassBounds = std::array<std::optional<double>, 3>;

/// Minimum lower bound per class over the rules. Upper bounds are ignored. A class present in
/// `data` but without any lower-bound rule falls back to its smallest observed intensity.
ClassBounds extract_class_bounds(std::span<const IntensityTree::Rule> rules, std::span<const LabeledIntensity> data);

ClassBounds learn_class_bounds(std::span<const LabeledIntensity> data, const TreeConfig& cfg = {});

/// Requires at least one instance of each class.
Thresholds learn_thresholds(std::span<const LabeledIntensity> data, const TreeConfig& cfg = {});

/// CSV "intensity,label" with a header line.
std::vector<LabeledIntensity> read_labeled_history(const std::filesystem::path& path);
void write_labeled_history(const std::filesystem::path& path, std::span<const LabeledIntensity> data);

/// Flat key-value block: theta_ddos, theta_dos, theta_scan.
std::string format_thresholds(const Thresholds& th);
Thresholds read_thresholds(const std::filesystem::path& path);
void write_thresholds(const std::filesystem::path& path, const Thresholds& th, std::span<const std::string> comments = {});

}  // namespace flowvote
