#include "flowvote/eval.hpp"

#include <algorithm>

namespace flowvote {

std::string_view to_string(Method m) {
    switch (m) {
    case Method::VoteH1: return "vote_h1";
    case Method::VoteH2: return "vote_h2";
    case Method::VoteUnion: return "vote_union";
    case Method::Apriori: return "apriori";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view s) {
    for (auto m : {Method::VoteH1, Method::VoteH2, Method::VoteUnion, Method::Apriori}) {
        if (s == to_string(m)) return m;
    }
    return std::nullopt;
}

std::vector<Alarm> alarms_of(std::span<const Diagnosis> diagnoses) {
    std::vector<Alarm> out;
    for (const auto& d : diagnoses) {
        if (auto k = kind_of(d.verdict)) out.push_back({d.bin, *k});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

bool agrees(const Alarm& a, const TruthRecord& t, MatchMode mode) {
    return a.bin == t.bin && (mode == MatchMode::Lenient || a.kind == t.kind);
}

}  // namespace

ScoreCard score_alarms(std::span<const Alarm> alarms, std::span<const TruthRecord> truth, Method method,
                       MatchMode mode) {
    std::vector<Alarm> distinct(alarms.begin(), alarms.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    ScoreCard card;
    card.method = method;
    card.mode = mode;
    for (const auto& t : truth) {
        auto& slot = card.per_type[static_cast<std::size_t>(t.kind)];
        ++slot.total;
        const bool hit = std::any_of(distinct.begin(), distinct.end(), [&](const Alarm& a) { return agrees(a, t, mode); });
        if (hit) ++slot.detected;
    }
    for (const auto& s : card.per_type) {
        card.detected += s.detected;
        card.total += s.total;
    }
    card.alarms = distinct.size();
    for (const auto& a : distinct) {
        const bool real = std::any_of(truth.begin(), truth.end(), [&](const TruthRecord& t) { return agrees(a, t, mode); });
        if (!real) ++card.false_positives;
    }
    card.detection_undefined = card.total == 0;
    card.detection_rate = card.total ? static_cast<double>(card.detected) / static_cast<double>(card.total) : 0.0;
    card.fp_undefined = card.alarms == 0;
    card.false_positive_rate =
        card.alarms ? static_cast<double>(card.false_positives) / static_cast<double>(card.alarms) : 0.0;
    return card;
}

ScoreCard score(std::span<const Diagnosis> diagnoses, std::span<const TruthRecord> truth, Method method,
                MatchMode mode) {
    return score_alarms(alarms_of(diagnoses), truth, method, mode);
}

ScoreCard union_scorecard(std::span<const Diagnosis> h1, std::span<const Diagnosis> h2,
                          std::span<const TruthRecord> truth, MatchMode mode) {
    auto alarms = alarms_of(h1);
    const auto second = alarms_of(h2);
    alarms.insert(alarms.end(), second.begin(), second.end());
    return score_alarms(alarms, truth, Method::VoteUnion, mode);
}

RocPoint to_roc_point(double value, const ScoreCard& card) {
    return {value, card.detected, card.false_positives, card.alarms, card.detection_rate, card.false_positive_rate};
}

std::vector<RocPoint> roc_sweep(std::span<const double> grid, const std::function<std::vector<Alarm>(double)>& run,
                                std::span<const TruthRecord> truth, MatchMode mode) {
    if (grid.empty()) throw Error("ROC sweep needs at least one parameter value");
    std::vector<double> values(grid.begin(), grid.end());
    std::sort(values.begin(), values.end());
    std::vector<RocPoint> out;
    out.reserve(values.size());
    for (double v : values) {
        const auto alarms = run(v);
        out.push_back(to_roc_point(v, score_alarms(alarms, truth, Method::VoteUnion, mode)));
    }
    return out;
}

}  // namespace flowvote
