#include "flowvote/election.hpp"

#include <json.hpp>

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace flowvote {

SortedHistogram make_sorted_histogram(FeatureKind feature, std::size_t bin, std::vector<HistogramEntry> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
    std::vector<HistogramEntry> merged;
    merged.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.count == 0) continue;
        if (!merged.empty() && merged.back().value == e.value) {
            merged.back().count += e.count;
        } else {
            merged.push_back(e);
        }
    }
    std::stable_sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return a.count > b.count; });

    SortedHistogram h;
    h.feature = feature;
    h.bin = bin;
    h.total_flows = std::accumulate(merged.begin(), merged.end(), std::uint64_t{0},
                                    [](std::uint64_t acc, const auto& e) { return acc + e.count; });
    h.entries = std::move(merged);
    return h;
}

SortedHistogram build_histogram(std::span<const FlowRecord> records, FeatureKind feature, std::size_t bin) {
    std::unordered_map<FeatureValue, std::uint64_t> counts;
    counts.reserve(records.size() / 4 + 16);
    for (const auto& r : records) ++counts[feature_value(r, feature)];

    std::vector<HistogramEntry> entries;
    entries.reserve(counts.size());
    for (const auto& [v, c] : counts) entries.push_back({v, c});
    return make_sorted_histogram(feature, bin, std::move(entries));
}

double tail_norm(std::span<const double> sorted, std::size_t k) {
    double sum = 0.0;
    for (std::size_t i = k; i < sorted.size(); ++i) sum += sorted[i] * sorted[i];
    return std::sqrt(sum);
}

double power_law_bound(const PowerLawFit& fit, std::size_t k) {
    if (!(fit.p > 0.0 && fit.p <= 1.0) || k == 0) return std::numeric_limits<double>::quiet_NaN();
    const double s = fit.s();
    return std::pow(fit.p * s, -0.5) * fit.r * std::pow(static_cast<double>(k), -s);
}

std::optional<PowerLawFit> fit_power_law(std::span<const double> sorted) {
    std::size_t n = 0;
    while (n < sorted.size() && sorted[n] > 0.0) ++n;
    if (n < 2) return std::nullopt;

    const double log_r = std::log(sorted[0]);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double li = std::log(static_cast<double>(i + 1));
        num += li * (std::log(sorted[i]) - log_r);
        den += li * li;
    }
    const double slope = num / den;
    PowerLawFit fit;
    fit.r = sorted[0];
    fit.p = slope < 0.0 ? -1.0 / slope : std::numeric_limits<double>::infinity();
    return fit;
}

SparseApproximation sparse_approximate(const SortedHistogram& h, std::size_t k) {
    if (k < 1) throw Error("K must be >= 1");
    SparseApproximation out;
    out.k = k;
    const auto keep = std::min(k, h.entries.size());
    out.kept.assign(h.entries.begin(), h.entries.begin() + static_cast<std::ptrdiff_t>(keep));

    std::vector<double> coeffs;
    coeffs.reserve(h.entries.size());
    for (const auto& e : h.entries) coeffs.push_back(static_cast<double>(e.count));
    out.sigma_k = tail_norm(coeffs, k);
    out.max_count = coeffs.empty() ? 0.0 : coeffs.front();
    out.power_law = fit_power_law(coeffs);
    return out;
}

bool SenatorSet::contains(FeatureValue v) const { return std::binary_search(members.begin(), members.end(), v); }

SenatorSet elect_senators(FeatureKind feature, std::span<const SparseApproximation> per_bin) {
    SenatorSet s;
    s.feature = feature;
    for (const auto& approx : per_bin) {
        for (const auto& e : approx.kept) s.members.push_back(e.value);
    }
    std::sort(s.members.begin(), s.members.end());
    s.members.erase(std::unique(s.members.begin(), s.members.end()), s.members.end());
    return s;
}

SenatorSubspace build_subspace(const BinnedTrace& filtered, const SenatorSets& senators) {
    SenatorSubspace out;
    out.bins = filtered.size();
    for (auto f : kAllFeatures) {
        const auto& members = senators[index_of(f)].members;
        auto& m = out.per_feature[index_of(f)];
        m.feature = f;
        m.columns = members;
        m.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.bins), static_cast<Eigen::Index>(members.size()));
        if (members.empty()) continue;
        for (std::size_t t = 0; t < out.bins; ++t) {
            for (const auto& r : filtered.bin(t)) {
                auto v = feature_value(r, f);
                auto it = std::lower_bound(members.begin(), members.end(), v);
                if (it != members.end() && *it == v) {
                    m.counts(static_cast<Eigen::Index>(t), it - members.begin()) += 1.0;
                }
            }
        }
    }
    return out;
}

ElectionResult run_election(const BinnedTrace& filtered, const ElectionConfig& cfg) {
    ElectionResult result;
    const auto bins = filtered.size();

    for (auto f : kAllFeatures) {
        const auto k = cfg.k[index_of(f)];
        std::vector<SparseApproximation> approx;
        approx.reserve(bins);
        auto& summary = result.summaries[index_of(f)];
        summary.feature = f;
        double norm_sum = 0.0;
        std::size_t nonempty = 0;
        for (std::size_t t = 0; t < bins; ++t) {
            approx.push_back(sparse_approximate(build_histogram(filtered.bin(t), f, t), k));
            const auto& a = approx.back();
            summary.sigma_per_bin.push_back(a.sigma_k);
            summary.normalized_sigma_per_bin.push_back(a.normalized_sigma());
            if (a.max_count > 0.0) {
                norm_sum += a.normalized_sigma();
                ++nonempty;
            }
        }
        summary.mean_normalized_sigma = nonempty ? norm_sum / static_cast<double>(nonempty) : 0.0;
        if (nonempty && (summary.mean_normalized_sigma < cfg.sigma_band_low ||
                         summary.mean_normalized_sigma > cfg.sigma_band_high)) {
            std::ostringstream msg;
            msg << to_string(f) << ": mean normalized sigma_K " << summary.mean_normalized_sigma << " outside ["
                << cfg.sigma_band_low << ", " << cfg.sigma_band_high << "] for K=" << k;
            result.warnings.push_back(msg.str());
        }
        result.senators[index_of(f)] = elect_senators(f, approx);
    }
    result.subspace = build_subspace(filtered, result.senators);
    return result;
}

std::string election_debug_json(const ElectionResult& result) {
    nlohmann::json doc = nlohmann::json::object();
    for (auto f : kAllFeatures) {
        const auto& s = result.summaries[index_of(f)];
        doc[std::string(to_string(f))] = {
            {"members", result.senators[index_of(f)].members},
            {"sigma", s.sigma_per_bin},
            {"normalized_sigma", s.normalized_sigma_per_bin},
            {"mean_normalized_sigma", s.mean_normalized_sigma},
        };
    }
    return doc.dump(2);
}

}  // namespace flowvote
