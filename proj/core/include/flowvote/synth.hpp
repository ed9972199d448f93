#pragma once

#include "flowvote/decision.hpp"
#include "flowvote/election.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowvote {

/// Packet and byte shape of injected flows.
///   tiny:  1 packet, at most 64 bytes (passes both pre-filters)
///   small: 2-3 packets, more than 64 bytes (passes H1 only)
///   large: 4-20 packets (passes neither)
enum class Sizing : std::uint8_t { Tiny, Small, Large };

std::string_view to_string(Sizing s);
std::optional<Sizing> parse_sizing(std::string_view s);

struct InjectionSpec {
    AnomalyKind kind = AnomalyKind::Scan;
    std::size_t bin = 0;
    std::uint32_t intensity = 1;
    Sizing sizing = Sizing::Tiny;
};

/// `count` injections with intensities uniform in [min, max], placed on distinct random bins.
struct RandomInjections {
    AnomalyKind kind = AnomalyKind::Scan;
    std::size_t count = 0;
    std::uint32_t min_intensity = 1;
    std::uint32_t max_intensity = 1;
    Sizing sizing = Sizing::Tiny;
};

struct ScenarioSpec {
    std::size_t duration_bins = 96;
    double flows_per_bin = 13500.0;
    double powerlaw_p = 0.8;
    std::uint64_t seed = 1;
    std::int64_t start_time = 1309478400;
    std::int64_t bin_width = kDefaultBinWidth;
    std::size_t as_pool = 2000;
    std::size_t port_pool = 5000;
    std::vector<InjectionSpec> injections;
    std::vector<RandomInjections> random_injections;

    void validate() const;
};

/// Key-value scenario text. Injections are given as
///   inject = scan,12,200,tiny
///   inject_random = ddos,4,150-400,large
ScenarioSpec parse_scenario(std::string_view text);
ScenarioSpec load_scenario(const std::filesystem::path& path);
/// Canonical text; parse_scenario(format_scenario(s)) reproduces s.
std::string format_scenario(const ScenarioSpec& spec);

/// Explicit injections followed by the random ones, resolved deterministically from the seed.
std::vector<InjectionSpec> expand_injections(const ScenarioSpec& spec);

struct TruthRecord {
    std::size_t bin = 0;
    AnomalyKind kind = AnomalyKind::Scan;
    std::uint32_t intensity = 0;
    std::optional<AsNumber> src_as;
    std::optional<Ipv4> dst_ip;
    std::optional<Port> src_port;
    std::optional<Port> dst_port;

    friend bool operator==(const TruthRecord&, const TruthRecord&) = default;
};

struct GroundTruth {
    std::vector<TruthRecord> records;
    std::optional<std::uint64_t> trace_id;
    std::optional<std::string> config_hash;
};

struct GeneratedTrace {
    std::vector<FlowRecord> records;  // ordered by start time
    std::vector<TruthRecord> truth;   // ordered by bin
};

GeneratedTrace generate(const ScenarioSpec& spec);

/// True when `r` carries the identifiers of `t` and falls in its bin.
bool matches_truth(const FlowRecord& r, const TruthRecord& t, std::int64_t origin, std::int64_t width);

void write_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_truth(const std::filesystem::path& path);
GroundTruth parse_truth_text(std::string_view text);

struct PowerLawCheck {
    FeatureKind feature = FeatureKind::SrcAs;
    std::size_t k = 0;
    std::optional<PowerLawFit> fit;
    double sigma_k = 0.0;
    double bound = 0.0;
    /// No usable fit, or a fitted p outside (0, 1].
    bool degenerate = true;
    bool holds = false;
};

PowerLawCheck verify_powerlaw(std::span<const FlowRecord> records, FeatureKind feature, std::size_t k);

}  // namespace flowvote
