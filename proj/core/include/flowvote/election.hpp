#pragma once

#include "flowvote/flow.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flowvote {

struct HistogramEntry {
    FeatureValue value = 0;
    std::uint64_t count = 0;

    friend bool operator==(const HistogramEntry&, const HistogramEntry&) = default;
};

/// Flow-count histogram of one feature in one bin, sorted by count (descending) then value (ascending).
struct SortedHistogram {
    FeatureKind feature = FeatureKind::SrcAs;
    std::size_t bin = 0;
    std::vector<HistogramEntry> entries;
    std::uint64_t total_flows = 0;
};

SortedHistogram build_histogram(std::span<const FlowRecord> records, FeatureKind feature, std::size_t bin = 0);

/// Sorts (value, count) pairs into histogram order. Counts of duplicate values are merged.
SortedHistogram make_sorted_histogram(FeatureKind feature, std::size_t bin, std::vector<HistogramEntry> entries);

/// Decay model x'(i) <= R * i^(-1/p) for a sorted histogram.
struct PowerLawFit {
    double r = 0.0;
    double p = 0.0;
    double s() const { return 1.0 / p - 0.5; }
};

/// L2 norm of the coefficients after the first k. `sorted` must be non-increasing.
double tail_norm(std::span<const double> sorted, std::size_t k);

/// Upper bound (p*s)^(-1/2) * R * k^(-s) on the k-term residual of a power-law histogram.
double power_law_bound(const PowerLawFit& fit, std::size_t k);

/// Least-squares fit of log(count) against log(rank) with R pinned to the largest coefficient.
/// Returns nullopt when fewer than two nonzero coefficients exist.
std::optional<PowerLawFit> fit_power_law(std::span<const double> sorted);

struct SparseApproximation {
    std::size_t k = 0;
    std::vector<HistogramEntry> kept;
    double sigma_k = 0.0;
    /// Largest coefficient; sigma_k / max_count is the normalized residual.
    double max_count = 0.0;
    std::optional<PowerLawFit> power_law;

    double normalized_sigma() const { return max_count > 0.0 ? sigma_k / max_count : 0.0; }
};

SparseApproximation sparse_approximate(const SortedHistogram& h, std::size_t k);

/// Union over bins of each bin's kept feature values. Members are sorted ascending.
struct SenatorSet {
    FeatureKind feature = FeatureKind::SrcAs;
    std::vector<FeatureValue> members;

    bool contains(FeatureValue v) const;
    std::size_t size() const { return members.size(); }
};

SenatorSet elect_senators(FeatureKind feature, std::span<const SparseApproximation> per_bin);

using SenatorSets = std::array<SenatorSet, 4>;

/// Time x senator flow counts of one feature. Column c counts flows carrying columns[c].
struct SenatorMatrix {
    FeatureKind feature = FeatureKind::SrcAs;
    std::vector<FeatureValue> columns;
    Eigen::MatrixXd counts;
};

struct SenatorSubspace {
    std::size_t bins = 0;
    std::array<SenatorMatrix, 4> per_feature;

    const SenatorMatrix& operator[](FeatureKind f) const { return per_feature[index_of(f)]; }
};

SenatorSubspace build_subspace(const BinnedTrace& filtered, const SenatorSets& senators);

struct ElectionConfig {
    std::array<std::size_t, 4> k{20, 20, 20, 20};
    /// Band for the trace-average max-normalized residual; outside it only a warning is raised.
    double sigma_band_low = 0.01;
    double sigma_band_high = 0.3;
};

struct FeatureElectionSummary {
    FeatureKind feature = FeatureKind::SrcAs;
    std::vector<double> sigma_per_bin;
    std::vector<double> normalized_sigma_per_bin;
    double mean_normalized_sigma = 0.0;
};

struct ElectionResult {
    SenatorSets senators;
    SenatorSubspace subspace;
    std::array<FeatureElectionSummary, 4> summaries;
    std::vector<std::string> warnings;
};

/// Full election stage over an already pre-filtered trace.
ElectionResult run_election(const BinnedTrace& filtered, const ElectionConfig& cfg = {});

/// Senator sets and per-bin residuals as a JSON document (feature -> {members, sigma}).
std::string election_debug_json(const ElectionResult& result);

}  // namespace flowvote
