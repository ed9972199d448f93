#pragma once

#include "flowvote/decision.hpp"
#include "flowvote/election.hpp"
#include "flowvote/eval.hpp"
#include "flowvote/pcp.hpp"
#include "flowvote/voting.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace flowvote {

struct DetectionConfig {
    std::uint32_t alpha = 3;
    std::uint64_t beta = 64;
    ElectionConfig election;
    PcpConfig pcp;
    std::string voting = "and";
    Thresholds thresholds;
    /// Count signature intensities on unfiltered records instead of the pre-filtered ones.
    bool intensity_on_raw = false;

    PrefilterConfig prefilter(Heuristic h) const { return {h, alpha, beta}; }
};

struct FeatureStage {
    FeatureKind feature = FeatureKind::SrcAs;
    std::size_t senators = 0;
    double mean_normalized_sigma = 0.0;
    double lambda = 0.0;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;
    std::size_t votes = 0;
    std::size_t flagged_bins = 0;
};

struct StageSummary {
    Heuristic heuristic = Heuristic::H1;
    std::size_t filtered_flows = 0;
    std::array<FeatureStage, 4> features{};
    std::size_t anomalous_bins = 0;
    std::size_t diagnosed = 0;
    std::size_t dismissed = 0;
};

struct HeuristicRun {
    Heuristic heuristic = Heuristic::H1;
    std::array<std::optional<PcpDecomposition>, 4> pcp;  // unset for a feature without senators
    std::vector<BinVerdict> verdicts;
    std::vector<Diagnosis> diagnoses;  // one per anomalous bin, FalsePositive included
    StageSummary summary;
    std::vector<std::string> warnings;
};

struct DetectionOutput {
    Method method = Method::VoteH1;
    std::vector<Diagnosis> diagnoses;    // attack verdicts, ordered by (bin, verdict)
    std::vector<std::size_t> dismissed;  // anomalous bins with no attack verdict
    std::vector<StageSummary> stages;
    std::vector<std::string> warnings;
};

/// Caches the pre-filtered traces and elections so that PCP, voting and decision can be rerun
/// cheaply for different C or threshold values.
class Detector {
public:
    Detector(BinnedTrace raw, DetectionConfig cfg);

    const BinnedTrace& raw() const { return raw_; }
    const DetectionConfig& config() const { return cfg_; }
    const BinnedTrace& filtered(Heuristic h);
    const ElectionResult& election(Heuristic h);

    HeuristicRun run(Heuristic h, const PcpConfig& pcp, const Thresholds& th);
    HeuristicRun run(Heuristic h) { return run(h, cfg_.pcp, cfg_.thresholds); }

    DetectionOutput detect(Method m, const PcpConfig& pcp, const Thresholds& th);
    DetectionOutput detect(Method m) { return detect(m, cfg_.pcp, cfg_.thresholds); }

private:
    BinnedTrace raw_;
    DetectionConfig cfg_;
    VotingRule rule_;
    std::array<std::optional<BinnedTrace>, 2> filtered_;
    std::array<std::optional<ElectionResult>, 2> election_;
};

/// Merges runs by set union on (bin, verdict). Earlier runs win when both report the same pair.
DetectionOutput merge_runs(Method m, std::span<const HeuristicRun> runs);

ParamEcho echo_params(const DetectionConfig& cfg, Method m, std::int64_t bin_width);

}  // namespace flowvote
