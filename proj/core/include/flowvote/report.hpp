#pragma once

#include "flowvote/baseline.hpp"
#include "flowvote/eval.hpp"
#include "flowvote/pipeline.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace flowvote {

struct ReportHeader {
    std::string trace_id;
    std::string config_hash;
    ParamEcho params;
    std::int64_t origin = 0;
    std::int64_t width = kDefaultBinWidth;
};

struct BaselineSummary {
    std::array<double, 4> kl_thresholds{};
    std::size_t alarms = 0;
    std::vector<std::size_t> alarmed_bins;
    std::size_t min_support = 0;
};

/// Diagnoses of a baseline run in the same shape as a detector run.
DetectionOutput to_output(const BaselineResult& result);

std::string format_detection_report(const DetectionOutput& out, const ReportHeader& header,
                                    const std::optional<BaselineSummary>& baseline = std::nullopt);

struct LoadedReport {
    Method method = Method::VoteH1;
    std::string trace_id;
    std::string config_hash;
    ParamEcho params;
    std::vector<Diagnosis> diagnoses;
};

LoadedReport parse_detection_report(std::string_view json);
LoadedReport load_detection_report(const std::filesystem::path& path);

std::string format_scorecard(const ScoreCard& card, std::string_view trace_id, std::string_view config_hash,
                             std::string_view sweep_parameter = {});
std::string format_roc_csv(std::span<const RocPoint> points);

/// Writes `text` to `path`, replacing any existing file.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace flowvote
