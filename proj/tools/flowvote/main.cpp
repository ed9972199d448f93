// flowvote: synthetic trace generation, anomaly detection, baseline, threshold learning and scoring.

#include "settings.hpp"

#include "flowvote/baseline.hpp"
#include "flowvote/digest.hpp"
#include "flowvote/eval.hpp"
#include "flowvote/pipeline.hpp"
#include "flowvote/report.hpp"
#include "flowvote/synth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace flowvote;
using flowvote::cli::Settings;
using flowvote::cli::UsageError;

namespace {

struct TraceArgs {
    std::string trace;
    std::uint64_t bin_width = kDefaultBinWidth;
};

struct DetectArgs {
    TraceArgs input;
    std::string heuristic = "union";
    std::uint64_t k = 20;
    double c = 2.0;
    std::optional<double> lambda;
    std::uint64_t alpha = 3;
    std::uint64_t beta = 64;
    std::string thresholds;
    std::string voting = "and";
    bool intensity_raw = false;
};

struct BaselineArgs {
    TraceArgs input;
    std::string thresholds;
    std::uint64_t buckets = 64;
    std::optional<double> kl_threshold;
    std::optional<std::uint64_t> min_support;
    double warmup_fraction = 0.1;
    std::string prefilter = "none";
    std::uint64_t alpha = 3;
    std::uint64_t beta = 64;
    std::uint64_t seed = 0;
};

struct Common {
    std::string config;
    std::string out_dir;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "Flat key = value file; command-line flags take precedence")
        ->check(CLI::ExistingFile);
    sub->add_option("--out-dir", c.out_dir, std::string("Output directory (also $") + cli::kOutDirEnv + ")");
}

void add_trace(CLI::App* sub, TraceArgs& t) {
    sub->add_option("--trace", t.trace, "Flow CSV trace");
    sub->add_option("--bin-width", t.bin_width, "Time bin width in seconds")->check(CLI::Range(1, 1 << 30));
}

void add_detect(CLI::App* sub, DetectArgs& d) {
    add_trace(sub, d.input);
    sub->add_option("--heuristic", d.heuristic, "Pre-filter: h1, h2 or union")
        ->check(CLI::IsMember({"h1", "h2", "union"}));
    sub->add_option("--k", d.k, "Senators kept per feature and bin")->check(CLI::Range(1, 100000));
    auto* c = sub->add_option("--c", d.c, "PCP weight constant, lambda = C / sqrt(max(N, K))")
                  ->check(CLI::PositiveNumber);
    auto* l = sub->add_option("--lambda", d.lambda, "Explicit PCP lambda (excludes --c)")->check(CLI::PositiveNumber);
    c->excludes(l);
    sub->add_option("--alpha", d.alpha, "H1: keep flows with at most alpha packets")->check(CLI::Range(1, 1 << 30));
    sub->add_option("--beta", d.beta, "H2: keep flows with at most beta bytes")->check(CLI::Range(1, 1 << 30));
    sub->add_option("--thresholds", d.thresholds, "Thresholds file from learn-thresholds")->check(CLI::ExistingFile);
    sub->add_option("--voting", d.voting, "Voting rule: and, or k-of-4 with k in 1..4");
    sub->add_flag("--intensity-raw", d.intensity_raw, "Count signature intensities on unfiltered flows");
}

void require(const std::string& value, const std::string& name) {
    if (value.empty()) throw UsageError("--" + name + " is required");
    if (!fs::exists(value)) throw UsageError("--" + name + ": file not found: " + value);
}

void resolve_trace(Settings& s, TraceArgs& t) {
    s.resolve("trace", t.trace, false);
    s.resolve("bin-width", t.bin_width);
    require(t.trace, "trace");
    if (t.bin_width < 1) throw UsageError("bin-width must be >= 1");
}

Thresholds resolve_thresholds(Settings& s, std::string& path) {
    s.resolve("thresholds", path, false);
    if (path.empty()) {
        s.record("thresholds", "bootstrap");
        return Thresholds{};
    }
    require(path, "thresholds");
    auto th = read_thresholds(path);
    std::string text = format_thresholds(th);
    s.record("thresholds", to_hex(fnv1a64(text)));
    return th;
}

DetectionConfig resolve_detect(Settings& s, DetectArgs& d, Thresholds& th) {
    resolve_trace(s, d.input);
    s.resolve("heuristic", d.heuristic);
    s.resolve("k", d.k);
    s.resolve("lambda", d.lambda);
    if (d.lambda && s.given("c")) throw UsageError("--c and --lambda are mutually exclusive");
    if (d.lambda) {
        s.record("c", "-");
    } else {
        s.resolve("c", d.c);
    }
    s.resolve("alpha", d.alpha);
    s.resolve("beta", d.beta);
    s.resolve("voting", d.voting);
    s.resolve("intensity-raw", d.intensity_raw);
    if (d.heuristic != "h1" && d.heuristic != "h2" && d.heuristic != "union") {
        throw UsageError("heuristic must be h1, h2 or union");
    }
    th = resolve_thresholds(s, d.thresholds);

    DetectionConfig cfg;
    cfg.alpha = static_cast<std::uint32_t>(d.alpha);
    cfg.beta = d.beta;
    cfg.election.k.fill(static_cast<std::size_t>(d.k));
    cfg.pcp.c = d.c;
    cfg.pcp.lambda_override = d.lambda;
    cfg.voting = d.voting;
    cfg.thresholds = th;
    cfg.intensity_on_raw = d.intensity_raw;
    try {
        parse_voting_rule(cfg.voting);
        cfg.pcp.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

Method method_of(const std::string& heuristic) {
    if (heuristic == "h1") return Method::VoteH1;
    if (heuristic == "h2") return Method::VoteH2;
    return Method::VoteUnion;
}

struct LoadedTrace {
    BinnedTrace binned;
    std::string trace_id;
};

LoadedTrace load_trace(const TraceArgs& t) {
    auto parsed = parse_trace(t.trace);
    if (parsed.records.empty()) throw Error(t.trace + ": trace has no records");
    if (parsed.malformed_lines > 0) {
        std::cerr << "warning: skipped " << parsed.malformed_lines << " malformed line(s) in " << t.trace << '\n';
    }
    LoadedTrace out;
    out.trace_id = to_hex(parsed.trace_id);
    out.binned = bin_records(parsed.records, static_cast<std::int64_t>(t.bin_width));
    return out;
}

fs::path prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            grid.push_back(parse_double(item, "grid"));
        } catch (const ParseError& e) {
            throw UsageError(e.what());
        }
    }
    if (grid.empty()) throw UsageError("--grid needs at least one value");
    return grid;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    Common common;
    std::string spec;
    std::optional<std::uint64_t> seed;
    std::string name = "trace";
};

int cmd_generate(CLI::App* sub, GenerateArgs& a) {
    Settings s(*sub, a.common.config);
    s.resolve("spec", a.spec, false);
    s.resolve("seed", a.seed);
    s.resolve("name", a.name, false);
    require(a.spec, "spec");
    const auto out_dir = s.out_dir(a.common.out_dir);

    auto spec = load_scenario(a.spec);
    if (a.seed) spec.seed = *a.seed;
    const auto config_hash = to_hex(fnv1a64(format_scenario(spec)));
    const auto generated = generate(spec);

    prepare_dir(out_dir);
    const auto trace_path = out_dir / (a.name + ".csv");
    const auto truth_path = out_dir / (a.name + ".truth.csv");
    const std::string comment = "config_hash=" + config_hash;
    write_trace(trace_path, generated.records, std::span(&comment, 1));
    GroundTruth truth{generated.truth, trace_digest(generated.records), config_hash};
    write_truth(truth_path, truth);

    std::cout << trace_path.string() << '\n' << truth_path.string() << '\n';
    std::cerr << generated.records.size() << " flows over " << spec.duration_bins << " bins, "
              << generated.truth.size() << " injected anomalies\n";
    return 0;
}

struct DetectCmd {
    Common common;
    DetectArgs detect;
    std::string report = "diagnoses.json";
    std::string dump_dir;
};

int cmd_detect(CLI::App* sub, DetectCmd& a) {
    Settings s(*sub, a.common.config);
    Thresholds th;
    auto cfg = resolve_detect(s, a.detect, th);
    s.resolve("report", a.report, false);
    s.resolve("dump-dir", a.dump_dir, false);
    const auto out_dir = s.out_dir(a.common.out_dir);
    const auto method = method_of(a.detect.heuristic);

    auto trace = load_trace(a.detect.input);
    Detector detector(std::move(trace.binned), cfg);

    std::vector<HeuristicRun> runs;
    if (method != Method::VoteH2) runs.push_back(detector.run(Heuristic::H1));
    if (method != Method::VoteH1) runs.push_back(detector.run(Heuristic::H2));
    auto out = merge_runs(method, runs);
    if (th.bootstrap) out.warnings.insert(out.warnings.begin(), "bootstrap thresholds in use");

    ReportHeader header{trace.trace_id, s.config_hash(),
                        echo_params(cfg, method, detector.raw().width()), detector.raw().origin(),
                        detector.raw().width()};
    prepare_dir(out_dir);
    const auto path = out_dir / a.report;
    write_text(path, format_detection_report(out, header));

    if (!a.dump_dir.empty()) {
        const fs::path dump = prepare_dir(a.dump_dir);
        for (const auto& r : runs) {
            const std::string h(to_string(r.heuristic));
            const auto& elected = detector.election(r.heuristic);
            write_text(dump / ("election_" + h + ".json"), election_debug_json(elected));
            for (auto f : kAllFeatures) {
                const auto& d = r.pcp[index_of(f)];
                if (!d) continue;
                const auto& m = elected.subspace[f];
                dump_matrices_csv(dump / ("pcp_" + h + "_" + std::string(to_string(f)) + ".csv"), m.counts, *d,
                                  m.columns);
            }
        }
    }

    std::cout << path.string() << '\n';
    std::cerr << out.diagnoses.size() << " diagnosis(es), " << out.dismissed.size() << " dismissed bin(s)\n";
    return 0;
}

struct BaselineCmd {
    Common common;
    BaselineArgs base;
    std::string report = "baseline.json";
};

BaselineConfig resolve_baseline(Settings& s, BaselineArgs& b, Thresholds& th) {
    resolve_trace(s, b.input);
    s.resolve("buckets", b.buckets);
    s.resolve("kl-threshold", b.kl_threshold);
    s.resolve("min-support", b.min_support);
    s.resolve("warmup-fraction", b.warmup_fraction);
    s.resolve("prefilter", b.prefilter);
    s.resolve("alpha", b.alpha);
    s.resolve("beta", b.beta);
    s.resolve("seed", b.seed);
    th = resolve_thresholds(s, b.thresholds);
    if (b.buckets < 1) throw UsageError("buckets must be >= 1");
    if (!(b.warmup_fraction > 0.0 && b.warmup_fraction <= 1.0)) throw UsageError("warmup-fraction must be in (0, 1]");

    BaselineConfig cfg;
    cfg.buckets = static_cast<std::size_t>(b.buckets);
    cfg.seed = b.seed;
    cfg.kl_threshold = b.kl_threshold;
    if (b.min_support) cfg.min_support = static_cast<std::size_t>(*b.min_support);
    cfg.warmup_fraction = b.warmup_fraction;
    if (b.prefilter == "h1") {
        cfg.prefilter = PrefilterConfig{Heuristic::H1, static_cast<std::uint32_t>(b.alpha), b.beta};
    } else if (b.prefilter == "h2") {
        cfg.prefilter = PrefilterConfig{Heuristic::H2, static_cast<std::uint32_t>(b.alpha), b.beta};
    } else if (b.prefilter != "none") {
        throw UsageError("prefilter must be none, h1 or h2");
    }
    return cfg;
}

void add_baseline(CLI::App* sub, BaselineArgs& b) {
    add_trace(sub, b.input);
    sub->add_option("--thresholds", b.thresholds, "Thresholds file from learn-thresholds")->check(CLI::ExistingFile);
    sub->add_option("--buckets", b.buckets, "Hash buckets per feature")->check(CLI::Range(1, 1 << 20));
    sub->add_option("--kl-threshold", b.kl_threshold, "Fixed KL alarm threshold for every feature");
    sub->add_option("--min-support", b.min_support, "Apriori minimum support (default: smallest threshold)");
    sub->add_option("--warmup-fraction", b.warmup_fraction, "Leading fraction of bins used to set KL thresholds");
    sub->add_option("--prefilter", b.prefilter, "none, h1 or h2")->check(CLI::IsMember({"none", "h1", "h2"}));
    sub->add_option("--alpha", b.alpha, "H1 packet bound")->check(CLI::Range(1, 1 << 30));
    sub->add_option("--beta", b.beta, "H2 byte bound")->check(CLI::Range(1, 1 << 30));
    sub->add_option("--seed", b.seed, "Root seed for the hash projections");
}

ParamEcho baseline_echo(const BaselineConfig& cfg, const Thresholds& th, std::int64_t width) {
    ParamEcho p;
    if (cfg.prefilter) {
        if (cfg.prefilter->heuristic == Heuristic::H1) p.alpha = cfg.prefilter->alpha;
        if (cfg.prefilter->heuristic == Heuristic::H2) p.beta = cfg.prefilter->beta;
    }
    p.thresholds = th;
    p.kl_threshold = cfg.kl_threshold;
    p.bin_width = width;
    p.seed = cfg.seed;
    return p;
}

BaselineSummary summarize(const BaselineResult& r, const BaselineConfig& cfg, const Thresholds& th) {
    BaselineSummary s;
    s.kl_thresholds = r.thresholds;
    s.alarms = r.alarms.size();
    s.alarmed_bins = r.alarmed_bins;
    s.min_support = cfg.min_support.value_or(
        static_cast<std::size_t>(std::max(1.0, std::floor(std::min({th.ddos, th.dos, th.scan})))));
    return s;
}

int cmd_baseline(CLI::App* sub, BaselineCmd& a) {
    Settings s(*sub, a.common.config);
    Thresholds th;
    const auto cfg = resolve_baseline(s, a.base, th);
    s.resolve("report", a.report, false);
    const auto out_dir = s.out_dir(a.common.out_dir);

    const auto trace = load_trace(a.base.input);
    const auto result = run_baseline(trace.binned, th, cfg);
    auto out = to_output(result);
    if (th.bootstrap) out.warnings.push_back("bootstrap thresholds in use");

    ReportHeader header{trace.trace_id, s.config_hash(), baseline_echo(cfg, th, trace.binned.width()),
                        trace.binned.origin(), trace.binned.width()};
    prepare_dir(out_dir);
    const auto path = out_dir / a.report;
    write_text(path, format_detection_report(out, header, summarize(result, cfg, th)));
    std::cout << path.string() << '\n';
    std::cerr << out.diagnoses.size() << " diagnosis(es) over " << result.alarmed_bins.size() << " alarmed bin(s)\n";
    return 0;
}

struct LearnCmd {
    Common common;
    std::string history;
    std::uint64_t max_depth = 8;
    std::string output = "thresholds.cfg";
};

int cmd_learn(CLI::App* sub, LearnCmd& a) {
    Settings s(*sub, a.common.config);
    s.resolve("history", a.history, false);
    s.resolve("max-depth", a.max_depth);
    s.resolve("output", a.output, false);
    require(a.history, "history");
    const auto out_dir = s.out_dir(a.common.out_dir);

    const auto data = read_labeled_history(a.history);
    s.record("history", to_hex(fnv1a64(read_text(a.history))));
    const auto th = learn_thresholds(data, TreeConfig{static_cast<int>(a.max_depth)});

    prepare_dir(out_dir);
    const auto path = out_dir / a.output;
    const std::vector<std::string> comments{"config_hash=" + s.config_hash(),
                                            "learned from " + std::to_string(data.size()) + " labeled intensities"};
    write_thresholds(path, th, comments);
    std::cout << path.string() << '\n' << format_thresholds(th);
    return 0;
}

struct EvaluateCmd {
    Common common;
    std::string report;
    std::string truth;
    bool lenient = false;
    std::string output = "scorecard.json";
};

int cmd_evaluate(CLI::App* sub, EvaluateCmd& a) {
    Settings s(*sub, a.common.config);
    s.resolve("report", a.report, false);
    s.resolve("truth", a.truth, false);
    s.resolve("lenient", a.lenient);
    s.resolve("output", a.output, false);
    require(a.report, "report");
    require(a.truth, "truth");
    const auto out_dir = s.out_dir(a.common.out_dir);

    const auto report = load_detection_report(a.report);
    const auto truth = read_truth(a.truth);
    if (truth.trace_id && to_hex(*truth.trace_id) != report.trace_id) {
        throw Error("trace id mismatch: report " + report.trace_id + ", truth " + to_hex(*truth.trace_id));
    }
    auto card = score(report.diagnoses, truth.records, report.method, a.lenient ? MatchMode::Lenient : MatchMode::Strict);
    card.params = report.params;

    prepare_dir(out_dir);
    const auto path = out_dir / a.output;
    write_text(path, format_scorecard(card, report.trace_id, report.config_hash));
    std::cout << path.string() << '\n';
    std::cerr << to_string(card.method) << ": detected " << card.detected << "/" << card.total << ", "
              << card.false_positives << " false positive(s) of " << card.alarms << " alarm(s)\n";
    return 0;
}

struct RocCmd {
    Common common;
    DetectArgs detect;
    BaselineArgs base;
    std::string truth;
    std::string grid = "1.5,2,2.5,3";
    bool apriori = false;
    bool lenient = false;
    std::string output = "roc";
};

int cmd_roc(CLI::App* sub, RocCmd& a) {
    Settings s(*sub, a.common.config);
    s.resolve("truth", a.truth, false);
    s.resolve("grid", a.grid);
    s.resolve("apriori", a.apriori);
    s.resolve("lenient", a.lenient);
    s.resolve("output", a.output, false);
    require(a.truth, "truth");
    const auto grid = parse_grid(a.grid);
    const auto mode = a.lenient ? MatchMode::Lenient : MatchMode::Strict;
    const auto truth = read_truth(a.truth);

    ScoreCard card;
    std::string trace_id;
    std::string sweep;
    if (a.apriori) {
        Thresholds th;
        a.base.input = a.detect.input;
        a.base.thresholds = a.detect.thresholds;
        auto cfg = resolve_baseline(s, a.base, th);
        const auto trace = load_trace(a.base.input);
        trace_id = trace.trace_id;
        sweep = "kl_threshold";
        card = score(to_output(run_baseline(trace.binned, th, cfg)).diagnoses, truth.records, Method::Apriori, mode);
        card.params = baseline_echo(cfg, th, trace.binned.width());
        card.roc = roc_sweep(
            grid,
            [&](double v) {
                auto swept = cfg;
                swept.kl_threshold = v;
                return alarms_of(run_baseline(trace.binned, th, swept).diagnoses);
            },
            truth.records, mode);
    } else {
        Thresholds th;
        const auto cfg = resolve_detect(s, a.detect, th);
        if (cfg.pcp.lambda_override) throw UsageError("roc sweeps C; drop --lambda");
        const auto method = method_of(a.detect.heuristic);
        auto trace = load_trace(a.detect.input);
        trace_id = trace.trace_id;
        sweep = "C";
        Detector detector(std::move(trace.binned), cfg);
        card = score(detector.detect(method).diagnoses, truth.records, method, mode);
        card.params = echo_params(cfg, method, detector.raw().width());
        card.roc = roc_sweep(
            grid,
            [&](double v) {
                auto pcp = cfg.pcp;
                pcp.c = v;
                return alarms_of(detector.detect(method, pcp, cfg.thresholds).diagnoses);
            },
            truth.records, mode);
    }
    card.method = a.apriori ? Method::Apriori : method_of(a.detect.heuristic);
    if (truth.trace_id && to_hex(*truth.trace_id) != trace_id) {
        throw Error("trace id mismatch: trace " + trace_id + ", truth " + to_hex(*truth.trace_id));
    }

    const auto out_dir = prepare_dir(s.out_dir(a.common.out_dir));
    const auto json_path = out_dir / (a.output + ".json");
    const auto csv_path = out_dir / (a.output + ".csv");
    write_text(json_path, format_scorecard(card, trace_id, s.config_hash(), sweep));
    write_text(csv_path, "# config_hash=" + s.config_hash() + "\n" + format_roc_csv(card.roc));
    std::cout << json_path.string() << '\n' << csv_path.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flow-trace anomaly detection and root-cause diagnosis"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Write a synthetic trace and its ground truth");
    add_common(g, gen.common);
    g->add_option("--spec", gen.spec, "Scenario file")->check(CLI::ExistingFile);
    g->add_option("--seed", gen.seed, "Override the scenario seed");
    g->add_option("--name", gen.name, "Base name of the output files");

    DetectCmd det;
    auto* d = app.add_subcommand("detect", "Run election, PCP, voting and decision over a trace");
    add_common(d, det.common);
    add_detect(d, det.detect);
    d->add_option("--report", det.report, "Report file name inside the output directory");
    d->add_option("--dump-dir", det.dump_dir, "Write election and PCP matrices here for debugging");

    BaselineCmd base;
    auto* b = app.add_subcommand("baseline", "Run the KL divergence and Apriori baseline");
    add_common(b, base.common);
    add_baseline(b, base.base);
    b->add_option("--report", base.report, "Report file name inside the output directory");

    LearnCmd learn;
    auto* l = app.add_subcommand("learn-thresholds", "Learn classifier thresholds from labeled intensities");
    add_common(l, learn.common);
    l->add_option("--history", learn.history, "CSV with header intensity,label")->check(CLI::ExistingFile);
    l->add_option("--max-depth", learn.max_depth, "Tree depth cap")->check(CLI::Range(1, 64));
    l->add_option("--output", learn.output, "Thresholds file name inside the output directory");

    EvaluateCmd eval;
    auto* e = app.add_subcommand("evaluate", "Score a report against ground truth");
    add_common(e, eval.common);
    e->add_option("--report", eval.report, "Report from detect or baseline")->check(CLI::ExistingFile);
    e->add_option("--truth", eval.truth, "Ground-truth CSV")->check(CLI::ExistingFile);
    e->add_flag("--lenient", eval.lenient, "Match on bin only, ignoring the anomaly kind");
    e->add_option("--output", eval.output, "Scorecard file name inside the output directory");

    RocCmd roc;
    auto* r = app.add_subcommand("roc", "Sweep C (or the KL threshold with --apriori) and score each point");
    add_common(r, roc.common);
    add_detect(r, roc.detect);
    r->add_option("--truth", roc.truth, "Ground-truth CSV")->check(CLI::ExistingFile);
    r->add_option("--grid", roc.grid, "Comma-separated sweep values");
    r->add_flag("--apriori", roc.apriori, "Sweep the baseline's KL threshold instead of C");
    r->add_option("--buckets", roc.base.buckets, "Baseline hash buckets")->check(CLI::Range(1, 1 << 20));
    r->add_option("--min-support", roc.base.min_support, "Baseline Apriori minimum support");
    r->add_option("--seed", roc.base.seed, "Baseline hash seed");
    r->add_option("--output", roc.output, "Base name of the .json and .csv outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*g) return cmd_generate(g, gen);
        if (*d) return cmd_detect(d, det);
        if (*b) return cmd_baseline(b, base);
        if (*l) return cmd_learn(l, learn);
        if (*e) return cmd_evaluate(e, eval);
        if (*r) return cmd_roc(r, roc);
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << "\nRun with --help for usage.\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 2;
}
