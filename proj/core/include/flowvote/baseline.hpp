#pragma once

#include "flowvote/decision.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flowvote {

/// Seeded random placement of feature values into a fixed number of buckets.
struct HashProjection {
    FeatureKind feature = FeatureKind::SrcAs;
    std::size_t buckets = 64;
    std::uint64_t seed = 0;

    std::size_t bucket(FeatureValue v) const;
    /// Bucketed flow counts of one bin. Total mass equals the number of records.
    std::vector<double> project(std::span<const FlowRecord> records) const;
    std::vector<double> project(const SortedHistogram& h) const;
};

inline constexpr double kDefaultSmoothing = 1e-6;

/// Normalizes to a distribution, adds eps to every bucket, and renormalizes.
std::vector<double> smooth(std::span<const double> counts, double eps = kDefaultSmoothing);

/// sum p_i ln(p_i / q_i), with 0 ln(0/q) = 0. Inputs must already be distributions.
double kl_distance(std::span<const double> p, std::span<const double> q);

struct KlAlarm {
    std::size_t bin = 0;
    FeatureKind feature = FeatureKind::SrcAs;
    double distance = 0.0;
    double threshold = 0.0;
};

/// Distance of each bin's smoothed projection from the previous bin's. Entry 0 is always 0.
std::vector<double> kl_series(const BinnedTrace& trace, const HashProjection& projection,
                              double eps = kDefaultSmoothing);

/// mean + 3 stddev of the distances over bins 1..ceil(fraction * N).
double warmup_threshold(std::span<const double> series, double fraction = 0.1, double sigmas = 3.0);

/// Alarms for bins t >= 1 whose distance to bin t-1 exceeds `threshold`.
std::vector<KlAlarm> detect_kl(const BinnedTrace& trace, const HashProjection& projection, double threshold,
                               double eps = kDefaultSmoothing);

// ---------------------------------------------------------------------------
// Frequent itemsets over (srcIP, dstIP, srcPort, dstPort) transactions

enum class ItemField : std::uint8_t { SrcIp = 0, DstIp = 1, SrcPort = 2, DstPort = 3 };

std::string_view to_string(ItemField f);

struct Item {
    ItemField field = ItemField::SrcIp;
    std::uint32_t value = 0;

    friend auto operator<=>(const Item&, const Item&) = default;
};

struct ItemSet {
    std::vector<Item> items;  // sorted
    std::size_t support = 0;
};

using Transaction = std::array<Item, 4>;

Transaction to_transaction(const FlowRecord& r);
bool contains(const Transaction& t, std::span<const Item> items);

/// Level-wise Apriori. Returns every itemset with support >= min_support, largest itemsets first,
/// then by support descending, then lexicographically.
std::vector<ItemSet> mine_frequent(std::span<const Transaction> transactions, std::size_t min_support);
std::vector<ItemSet> mine_frequent(std::span<const FlowRecord> flows, std::size_t min_support);

/// Frequent itemsets not contained in any larger frequent itemset.
std::vector<ItemSet> maximal_itemsets(std::span<const ItemSet> frequent);

// ---------------------------------------------------------------------------
// End-to-end baseline detector

struct BaselineConfig {
    std::size_t buckets = 64;
    std::uint64_t seed = 0;
    double eps = kDefaultSmoothing;
    /// Explicit KL gate for every feature. When unset, each feature uses its warm-up threshold.
    std::optional<double> kl_threshold;
    double warmup_fraction = 0.1;
    /// Minimum itemset support. When unset, the smallest classifier threshold is used.
    std::optional<std::size_t> min_support;
    /// Run on pre-filtered rather than raw traffic.
    std::optional<PrefilterConfig> prefilter;
};

struct BaselineResult {
    std::array<double, 4> thresholds{};
    std::vector<KlAlarm> alarms;
    std::vector<std::size_t> alarmed_bins;
    std::vector<Diagnosis> diagnoses;
};

/// KL detection on all four features, AND-combined per bin, then Apriori extraction and signature
/// classification of each alarmed bin.
BaselineResult run_baseline(const BinnedTrace& raw, const Thresholds& th, const BaselineConfig& cfg = {});

}  // namespace flowvote
