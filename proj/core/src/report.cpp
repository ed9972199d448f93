#include "flowvote/report.hpp"

#include "flowvote/digest.hpp"
#include "flowvote/kv_config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace flowvote {

using nlohmann::ordered_json;

namespace {

ordered_json params_json(const ParamEcho& p) {
    ordered_json j = ordered_json::object();
    if (p.alpha) j["alpha"] = *p.alpha;
    if (p.beta) j["beta"] = *p.beta;
    if (p.k) j["K"] = *p.k;
    if (p.c) j["C"] = *p.c;
    if (p.lambda) j["lambda"] = *p.lambda;
    if (p.thresholds) {
        j["thresholds"] = {{"ddos", p.thresholds->ddos},
                           {"dos", p.thresholds->dos},
                           {"scan", p.thresholds->scan},
                           {"bootstrap", p.thresholds->bootstrap}};
    }
    if (p.kl_threshold) j["kl_threshold"] = *p.kl_threshold;
    if (p.bin_width) j["bin_width"] = *p.bin_width;
    if (p.seed) j["seed"] = *p.seed;
    return j;
}

ParamEcho params_from(const ordered_json& j) {
    ParamEcho p;
    if (j.contains("alpha")) p.alpha = j["alpha"].get<std::uint32_t>();
    if (j.contains("beta")) p.beta = j["beta"].get<std::uint64_t>();
    if (j.contains("K")) p.k = j["K"].get<std::size_t>();
    if (j.contains("C")) p.c = j["C"].get<double>();
    if (j.contains("lambda")) p.lambda = j["lambda"].get<double>();
    if (j.contains("thresholds")) {
        const auto& t = j["thresholds"];
        Thresholds th;
        th.ddos = t.at("ddos").get<double>();
        th.dos = t.at("dos").get<double>();
        th.scan = t.at("scan").get<double>();
        th.bootstrap = t.value("bootstrap", false);
        p.thresholds = th;
    }
    if (j.contains("kl_threshold")) p.kl_threshold = j["kl_threshold"].get<double>();
    if (j.contains("bin_width")) p.bin_width = j["bin_width"].get<std::int64_t>();
    if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
    return p;
}

ordered_json diagnosis_json(const Diagnosis& d, const ReportHeader& h) {
    ordered_json j;
    j["bin"] = d.bin;
    j["bin_start"] = h.origin + static_cast<std::int64_t>(d.bin) * h.width;
    j["verdict"] = to_string(d.verdict);
    j["intensity"] = d.intensity;
    if (d.witness) {
        const auto& w = *d.witness;
        ordered_json wj;
        wj["src_as"] = w.src_as;
        wj["dst_as"] = w.dst_as;
        wj["src_port"] = w.src_port;
        wj["dst_port"] = w.dst_port;
        wj["aggregate_flows"] = w.aggregate_flows;
        wj["key"] = to_string(w.key);
        if (w.key != WitnessKey::DstIp) wj["src_ip"] = format_ipv4(w.src_ip);
        if (w.key != WitnessKey::SrcIpDstPort) wj["dst_ip"] = format_ipv4(w.dst_ip);
        j["witness"] = std::move(wj);
    }
    return j;
}

ordered_json stage_json(const StageSummary& s) {
    ordered_json j;
    j["heuristic"] = to_string(s.heuristic);
    j["filtered_flows"] = s.filtered_flows;
    ordered_json features = ordered_json::object();
    for (const auto& f : s.features) {
        features[std::string(to_string(f.feature))] = {
            {"senators", f.senators},         {"mean_normalized_sigma", f.mean_normalized_sigma},
            {"lambda", f.lambda},             {"iterations", f.iterations},
            {"converged", f.converged},       {"residual", f.residual},
            {"votes", f.votes},               {"flagged_bins", f.flagged_bins},
        };
    }
    j["features"] = std::move(features);
    j["anomalous_bins"] = s.anomalous_bins;
    j["diagnosed"] = s.diagnosed;
    j["dismissed"] = s.dismissed;
    return j;
}

}  // namespace

DetectionOutput to_output(const BaselineResult& result) {
    DetectionOutput out;
    out.method = Method::Apriori;
    for (const auto& d : result.diagnoses) {
        if (d.verdict == Verdict::FalsePositive) {
            out.dismissed.push_back(d.bin);
        } else {
            out.diagnoses.push_back(d);
        }
    }
    return out;
}

std::string format_detection_report(const DetectionOutput& out, const ReportHeader& header,
                                    const std::optional<BaselineSummary>& baseline) {
    ordered_json j;
    j["method"] = to_string(out.method);
    j["trace_id"] = header.trace_id;
    j["config_hash"] = header.config_hash;
    j["params"] = params_json(header.params);
    j["diagnoses"] = ordered_json::array();
    for (const auto& d : out.diagnoses) j["diagnoses"].push_back(diagnosis_json(d, header));
    j["dismissed"] = out.dismissed;
    if (!out.stages.empty()) {
        j["stages"] = ordered_json::array();
        for (const auto& s : out.stages) j["stages"].push_back(stage_json(s));
    }
    if (baseline) {
        ordered_json b;
        ordered_json th = ordered_json::object();
        for (auto f : kAllFeatures) th[std::string(to_string(f))] = baseline->kl_thresholds[index_of(f)];
        b["kl_thresholds"] = std::move(th);
        b["alarms"] = baseline->alarms;
        b["alarmed_bins"] = baseline->alarmed_bins;
        b["min_support"] = baseline->min_support;
        j["baseline"] = std::move(b);
    }
    j["warnings"] = out.warnings;
    return j.dump(2) + "\n";
}

LoadedReport parse_detection_report(std::string_view text) {
    LoadedReport out;
    try {
        const auto j = ordered_json::parse(text);
        const auto method = j.at("method").get<std::string>();
        auto m = parse_method(method);
        if (!m) throw ParseError("unknown method '" + method + "'");
        out.method = *m;
        out.trace_id = j.at("trace_id").get<std::string>();
        out.config_hash = j.value("config_hash", "");
        if (j.contains("params")) out.params = params_from(j["params"]);
        for (const auto& dj : j.at("diagnoses")) {
            Diagnosis d;
            d.bin = dj.at("bin").get<std::size_t>();
            const auto v = dj.at("verdict").get<std::string>();
            auto verdict = parse_verdict(v);
            if (!verdict) throw ParseError("unknown verdict '" + v + "'");
            d.verdict = *verdict;
            d.intensity = dj.value("intensity", std::uint64_t{0});
            out.diagnoses.push_back(d);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed report: ") + e.what());
    }
    return out;
}

LoadedReport load_detection_report(const std::filesystem::path& path) {
    try {
        return parse_detection_report(read_text(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string format_scorecard(const ScoreCard& card, std::string_view trace_id, std::string_view config_hash,
                             std::string_view sweep_parameter) {
    ordered_json j;
    j["method"] = to_string(card.method);
    j["match"] = card.mode == MatchMode::Strict ? "strict" : "lenient";
    j["trace_id"] = trace_id;
    j["config_hash"] = config_hash;
    j["params"] = params_json(card.params);
    ordered_json per_type = ordered_json::object();
    for (auto k : kAllKinds) {
        const auto& s = card.per_type[static_cast<std::size_t>(k)];
        per_type[std::string(to_string(k))] = {{"detected", s.detected}, {"total", s.total}};
    }
    j["per_type"] = std::move(per_type);
    j["detected"] = card.detected;
    j["total"] = card.total;
    j["alarms"] = card.alarms;
    j["false_positives"] = card.false_positives;
    j["detection_rate"] = card.detection_rate;
    j["false_positive_rate"] = card.false_positive_rate;
    j["detection_undefined"] = card.detection_undefined;
    j["fp_undefined"] = card.fp_undefined;
    if (!sweep_parameter.empty()) j["sweep_parameter"] = sweep_parameter;
    j["roc"] = ordered_json::array();
    for (const auto& p : card.roc) {
        j["roc"].push_back({{"value", p.value},
                            {"detected", p.detected},
                            {"false_positives", p.false_positives},
                            {"alarms", p.alarms},
                            {"detection_rate", p.detection_rate},
                            {"false_positive_rate", p.false_positive_rate}});
    }
    return j.dump(2) + "\n";
}

std::string format_roc_csv(std::span<const RocPoint> points) {
    std::ostringstream out;
    out << "value,detected,false_positives,alarms,detection_rate,false_positive_rate\n";
    for (const auto& p : points) {
        out << format_double(p.value) << ',' << p.detected << ',' << p.false_positives << ',' << p.alarms << ','
            << format_double(p.detection_rate) << ',' << format_double(p.false_positive_rate) << '\n';
    }
    return out.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failure on '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace flowvote
