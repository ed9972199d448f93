#include "flowvote/pipeline.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace flowvote {

namespace {

std::size_t slot(Heuristic h) { return h == Heuristic::H1 ? 0 : 1; }

template <typename F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const std::exception& e) {
        throw Error(std::string(stage) + ": " + e.what());
    }
}

}  // namespace

Detector::Detector(BinnedTrace raw, DetectionConfig cfg)
    : raw_(std::move(raw)), cfg_(std::move(cfg)), rule_(parse_voting_rule(cfg_.voting)) {
    cfg_.pcp.validate();
    cfg_.thresholds.validate();
    cfg_.prefilter(Heuristic::H1).validate();
}

const BinnedTrace& Detector::filtered(Heuristic h) {
    auto& f = filtered_[slot(h)];
    if (!f) f = staged("prefilter", [&] { return prefilter(raw_, cfg_.prefilter(h)); });
    return *f;
}

const ElectionResult& Detector::election(Heuristic h) {
    auto& e = election_[slot(h)];
    if (!e) {
        const auto& trace = filtered(h);
        e = staged("election", [&] { return run_election(trace, cfg_.election); });
    }
    return *e;
}

HeuristicRun Detector::run(Heuristic h, const PcpConfig& pcp, const Thresholds& th) {
    const auto& trace = filtered(h);
    const auto& elected = election(h);

    HeuristicRun out;
    out.heuristic = h;
    out.summary.heuristic = h;
    out.summary.filtered_flows = trace.records().size();
    for (const auto& w : elected.warnings) out.warnings.push_back(std::string(to_string(h)) + " election: " + w);

    std::vector<Vote> votes;
    for (auto f : kAllFeatures) {
        const auto& m = elected.subspace[f];
        auto& stage = out.summary.features[index_of(f)];
        stage.feature = f;
        stage.senators = m.columns.size();
        stage.mean_normalized_sigma = elected.summaries[index_of(f)].mean_normalized_sigma;
        if (m.counts.rows() == 0 || m.counts.cols() == 0) continue;

        auto& d = out.pcp[index_of(f)];
        d = staged("pcp", [&] { return pcp_decompose(m.counts, pcp); });
        stage.lambda = d->lambda;
        stage.iterations = d->iterations;
        stage.converged = d->converged;
        stage.residual = d->residual;
        if (!d->converged) {
            out.warnings.push_back(std::string(to_string(h)) + " pcp: " + std::string(to_string(f)) +
                                   " did not converge within the iteration cap");
        }
        auto feature_votes = extract_votes(*d, f, m.columns);
        stage.votes = feature_votes.size();
        votes.insert(votes.end(), feature_votes.begin(), feature_votes.end());
    }

    const auto flags = staged("voting", [&] { return flag_features(votes, trace.size()); });
    for (const auto& fl : flags) {
        for (auto f : kAllFeatures) {
            if (fl.test(f)) ++out.summary.features[index_of(f)].flagged_bins;
        }
    }
    out.verdicts = decide_bins(flags, votes, rule_);
    out.summary.anomalous_bins = static_cast<std::size_t>(
        std::count_if(out.verdicts.begin(), out.verdicts.end(), [](const auto& v) { return v.anomalous; }));

    out.diagnoses = staged("decision", [&] {
        return run_decision_stage(out.verdicts, elected.senators, trace, th, cfg_.intensity_on_raw ? &raw_ : nullptr);
    });
    for (const auto& d : out.diagnoses) {
        if (d.verdict == Verdict::FalsePositive) {
            ++out.summary.dismissed;
        } else {
            ++out.summary.diagnosed;
        }
    }
    return out;
}

DetectionOutput Detector::detect(Method m, const PcpConfig& pcp, const Thresholds& th) {
    std::vector<HeuristicRun> runs;
    switch (m) {
    case Method::VoteH1: runs.push_back(run(Heuristic::H1, pcp, th)); break;
    case Method::VoteH2: runs.push_back(run(Heuristic::H2, pcp, th)); break;
    case Method::VoteUnion:
        runs.push_back(run(Heuristic::H1, pcp, th));
        runs.push_back(run(Heuristic::H2, pcp, th));
        break;
    case Method::Apriori: throw Error("the detector does not run the baseline");
    }
    return merge_runs(m, runs);
}

DetectionOutput merge_runs(Method m, std::span<const HeuristicRun> runs) {
    DetectionOutput out;
    out.method = m;
    std::set<std::pair<std::size_t, Verdict>> seen;
    std::set<std::size_t> dismissed;
    for (const auto& r : runs) {
        for (const auto& d : r.diagnoses) {
            if (d.verdict == Verdict::FalsePositive) {
                dismissed.insert(d.bin);
            } else if (seen.insert({d.bin, d.verdict}).second) {
                out.diagnoses.push_back(d);
            }
        }
        out.stages.push_back(r.summary);
        out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
    }
    std::stable_sort(out.diagnoses.begin(), out.diagnoses.end(),
                     [](const Diagnosis& a, const Diagnosis& b) { return std::tie(a.bin, a.verdict) < std::tie(b.bin, b.verdict); });
    for (const auto& d : out.diagnoses) dismissed.erase(d.bin);
    out.dismissed.assign(dismissed.begin(), dismissed.end());
    return out;
}

ParamEcho echo_params(const DetectionConfig& cfg, Method m, std::int64_t bin_width) {
    ParamEcho p;
    if (m == Method::VoteH1 || m == Method::VoteUnion) p.alpha = cfg.alpha;
    if (m == Method::VoteH2 || m == Method::VoteUnion) p.beta = cfg.beta;
    p.k = cfg.election.k[0];
    if (cfg.pcp.lambda_override) {
        p.lambda = *cfg.pcp.lambda_override;
    } else {
        p.c = cfg.pcp.c;
    }
    p.thresholds = cfg.thresholds;
    p.bin_width = bin_width;
    return p;
}

}  // namespace flowvote
