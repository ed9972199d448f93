#pragma once

#include "flowvote/decision.hpp"
#include "flowvote/synth.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flowvote {

enum class Method : std::uint8_t { VoteH1, VoteH2, VoteUnion, Apriori };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view s);

/// Parameters echoed into every scorecard and report. Unset fields did not apply to the run.
struct ParamEcho {
    std::optional<std::uint32_t> alpha;
    std::optional<std::uint64_t> beta;
    std::optional<std::size_t> k;
    std::optional<double> c;
    std::optional<double> lambda;
    std::optional<Thresholds> thresholds;
    std::optional<double> kl_threshold;
    std::optional<std::int64_t> bin_width;
    std::optional<std::uint64_t> seed;

    friend bool operator==(const ParamEcho&, const ParamEcho&) = default;
};

struct TypeScore {
    std::size_t detected = 0;
    std::size_t total = 0;
};

/// An alarm is a (bin, kind) pair raised by a method.
struct Alarm {
    std::size_t bin = 0;
    AnomalyKind kind = AnomalyKind::Scan;

    friend auto operator<=>(const Alarm&, const Alarm&) = default;
};

enum class MatchMode : std::uint8_t {
    Strict,   // bin and kind must agree
    Lenient,  // bin only
};

struct RocPoint {
    double value = 0.0;
    std::size_t detected = 0;
    std::size_t false_positives = 0;
    std::size_t alarms = 0;
    double detection_rate = 0.0;
    double false_positive_rate = 0.0;
};

struct ScoreCard {
    Method method = Method::VoteH1;
    MatchMode mode = MatchMode::Strict;
    std::array<TypeScore, 3> per_type{};
    std::size_t detected = 0;
    std::size_t total = 0;
    std::size_t alarms = 0;
    std::size_t false_positives = 0;
    double detection_rate = 0.0;
    double false_positive_rate = 0.0;
    /// Detection rate with no ground truth, or FP rate with no alarms. The rate is reported as 0.
    bool detection_undefined = false;
    bool fp_undefined = false;
    ParamEcho params;
    std::vector<RocPoint> roc;
};

/// Distinct (bin, kind) alarms of the attack verdicts. FalsePositive verdicts raise no alarm.
std::vector<Alarm> alarms_of(std::span<const Diagnosis> diagnoses);

ScoreCard score_alarms(std::span<const Alarm> alarms, std::span<const TruthRecord> truth, Method method,
                       MatchMode mode = MatchMode::Strict);
ScoreCard score(std::span<const Diagnosis> diagnoses, std::span<const TruthRecord> truth, Method method,
                MatchMode mode = MatchMode::Strict);

/// Scores the set union of both runs' alarms. An alarm false in either run counts once.
ScoreCard union_scorecard(std::span<const Diagnosis> h1, std::span<const Diagnosis> h2,
                          std::span<const TruthRecord> truth, MatchMode mode = MatchMode::Strict);

RocPoint to_roc_point(double value, const ScoreCard& card);

/// One point per grid value, ordered by value. `run` produces the alarms for one value.
std::vector<RocPoint> roc_sweep(std::span<const double> grid,
                                const std::function<std::vector<Alarm>(double)>& run,
                                std::span<const TruthRecord> truth, MatchMode mode = MatchMode::Strict);

}  // namespace flowvote
