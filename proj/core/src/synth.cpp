#include "flowvote/synth.hpp"

#include "flowvote/digest.hpp"
#include "flowvote/kv_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

namespace flowvote {

namespace {

// Background values come from below these marks; injections get fresh values above them.
constexpr AsNumber kMinBackgroundAs = 1000;
constexpr AsNumber kFreshAsBase = 60000;
constexpr Port kFreshPortBase = 60000;
constexpr std::size_t kMaxInjections = 1800;

constexpr std::uint64_t kPoolStream = 0x706f6f6cULL;
constexpr std::uint64_t kPlacementStream = 0x706c6163ULL;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b)};
    return std::mt19937_64(seq);
}

std::vector<std::uint32_t> draw_distinct(std::mt19937_64& rng, std::uint32_t lo, std::uint32_t hi, std::size_t n) {
    std::vector<std::uint32_t> all(hi - lo);
    std::iota(all.begin(), all.end(), lo);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(n);
    return all;
}

std::vector<std::uint32_t> permuted(std::mt19937_64& rng, std::vector<std::uint32_t> values) {
    std::shuffle(values.begin(), values.end(), rng);
    return values;
}

std::discrete_distribution<std::size_t> rank_distribution(std::size_t n, double p) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(static_cast<double>(i + 1), -1.0 / p);
    return {w.begin(), w.end()};
}

Ipv4 make_ip(AsNumber as, std::uint32_t host) { return (as << 16) | (host & 0xffffu); }

struct Shape {
    std::uint32_t packets;
    std::uint64_t bytes;
};

Shape draw_shape(std::mt19937_64& rng, Sizing sizing, bool scan) {
    std::uniform_int_distribution<std::uint64_t> per_packet(40, 1500);
    switch (sizing) {
    case Sizing::Tiny:
        return {1, scan ? 60u : std::uniform_int_distribution<std::uint64_t>(40, 64)(rng)};
    case Sizing::Small: {
        const auto pk = std::uniform_int_distribution<std::uint32_t>(2, 3)(rng);
        return {pk, scan ? 60ull * pk : pk * per_packet(rng)};
    }
    case Sizing::Large: {
        const auto pk = std::uniform_int_distribution<std::uint32_t>(4, 20)(rng);
        return {pk, scan ? 60ull * pk : pk * per_packet(rng)};
    }
    }
    return {1, 60};
}

// Roughly 45% single-packet flows (a bit over half of them at most 64 bytes), 30% with 2-3 packets, 25% larger.
Shape background_shape(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::uint64_t> per_packet(40, 1500);
    const double r = u(rng);
    if (r < 0.45) {
        if (u(rng) < 0.55) return {1, std::uniform_int_distribution<std::uint64_t>(40, 64)(rng)};
        return {1, std::uniform_int_distribution<std::uint64_t>(65, 1500)(rng)};
    }
    if (r < 0.75) {
        const auto pk = std::uniform_int_distribution<std::uint32_t>(2, 3)(rng);
        return {pk, pk * per_packet(rng)};
    }
    const auto pk = 4 + static_cast<std::uint32_t>(std::geometric_distribution<int>(0.1)(rng));
    return {pk, pk * per_packet(rng)};
}

Protocol background_protocol(std::mt19937_64& rng) {
    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return r < 0.8 ? Protocol::Tcp : r < 0.95 ? Protocol::Udp : Protocol::Other;
}

using WitnessTuple = std::tuple<AsNumber, Port, Port, Ipv4>;

struct TupleHash {
    std::size_t operator()(const WitnessTuple& t) const noexcept {
        Fnv1a64 h;
        const auto& [a, sp, dp, ip] = t;
        const std::uint64_t packed[2] = {(static_cast<std::uint64_t>(a) << 32) | ip,
                                         (static_cast<std::uint64_t>(sp) << 16) | dp};
        h.update(std::string_view(reinterpret_cast<const char*>(packed), sizeof packed));
        return static_cast<std::size_t>(h.value());
    }
};

struct Injected {
    std::vector<FlowRecord> flows;
    TruthRecord truth;
};

Injected build_injection(const InjectionSpec& inj, std::size_t ordinal, std::int64_t bin_start, std::int64_t width,
                         std::uint64_t seed) {
    auto rng = stream(seed, 0x696e6a00ULL + ordinal, inj.bin);
    std::uniform_int_distribution<std::int64_t> offset(0, width - 1);
    std::uniform_int_distribution<std::uint32_t> duration(0, 60);

    const AsNumber as_a = kFreshAsBase + static_cast<AsNumber>(3 * ordinal);
    const AsNumber as_b = as_a + 1;
    const AsNumber victim_as = as_a + 2;
    const Port src_port = kFreshPortBase + static_cast<Port>(2 * ordinal);
    const Port dst_port = src_port + 1;
    const bool scan = inj.kind == AnomalyKind::Scan;

    // Distinct hosts for the side that fans out.
    const auto hosts = draw_distinct(rng, 1, 65535, std::min<std::size_t>(inj.intensity, 65534));
    const Ipv4 attacker = make_ip(as_a, hosts.empty() ? 1 : hosts[0]);
    const Ipv4 victim = make_ip(victim_as, std::uniform_int_distribution<std::uint32_t>(1, 65534)(rng));

    Injected out;
    out.truth.bin = inj.bin;
    out.truth.kind = inj.kind;
    out.truth.intensity = inj.intensity;
    out.truth.src_port = src_port;
    out.truth.dst_port = dst_port;
    switch (inj.kind) {
    case AnomalyKind::Scan: out.truth.src_as = as_a; break;
    case AnomalyKind::DoS:
        out.truth.src_as = as_a;
        out.truth.dst_ip = victim;
        break;
    case AnomalyKind::DDoS: out.truth.dst_ip = victim; break;
    }

    out.flows.reserve(inj.intensity);
    for (std::uint32_t i = 0; i < inj.intensity; ++i) {
        FlowRecord r;
        r.start_time = bin_start + offset(rng);
        r.duration = duration(rng);
        r.src_port = src_port;
        r.dst_port = dst_port;
        r.protocol = Protocol::Tcp;
        const auto shape = draw_shape(rng, inj.sizing, scan);
        r.packets = shape.packets;
        r.bytes = shape.bytes;
        const std::uint32_t host = hosts[i % hosts.size()];
        switch (inj.kind) {
        case AnomalyKind::Scan:
            r.src_as = as_a;
            r.src_ip = attacker;
            r.dst_as = victim_as;
            r.dst_ip = make_ip(victim_as, host);
            break;
        case AnomalyKind::DoS:
            r.src_as = as_a;
            r.src_ip = attacker;
            r.dst_as = victim_as;
            r.dst_ip = victim;
            break;
        case AnomalyKind::DDoS:
            r.src_as = (i % 2 == 0) ? as_a : as_b;
            r.src_ip = make_ip(r.src_as, host);
            r.dst_as = victim_as;
            r.dst_ip = victim;
            break;
        }
        out.flows.push_back(r);
    }
    return out;
}

}  // namespace

std::string_view to_string(Sizing s) {
    switch (s) {
    case Sizing::Tiny: return "tiny";
    case Sizing::Small: return "small";
    case Sizing::Large: return "large";
    }
    return "?";
}

std::optional<Sizing> parse_sizing(std::string_view s) {
    if (s == "tiny") return Sizing::Tiny;
    if (s == "small") return Sizing::Small;
    if (s == "large") return Sizing::Large;
    return std::nullopt;
}

void ScenarioSpec::validate() const {
    if (duration_bins < 2) throw Error("scenario needs at least 2 bins");
    if (!(flows_per_bin >= 1.0) || !std::isfinite(flows_per_bin)) throw Error("flows_per_bin must be >= 1");
    if (!(powerlaw_p > 0.0 && powerlaw_p <= 1.0)) throw Error("powerlaw_p must be in (0, 1]");
    if (bin_width < 1) throw Error("bin_width must be >= 1");
    if (as_pool < 1 || as_pool > kFreshAsBase - kMinBackgroundAs) throw Error("as_pool out of range");
    if (port_pool < 1 || port_pool >= kFreshPortBase) throw Error("port_pool out of range");
    std::size_t total = injections.size();
    for (const auto& inj : injections) {
        if (inj.intensity < 1) throw Error("injection intensity must be >= 1");
        if (inj.bin >= duration_bins) throw Error("injection bin beyond the scenario");
    }
    for (const auto& r : random_injections) {
        if (r.min_intensity < 1 || r.min_intensity > r.max_intensity) throw Error("bad random injection intensity range");
        total += r.count;
    }
    if (total > kMaxInjections) throw Error("too many injections");
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto next = s.find(sep, pos);
        auto piece = s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
        while (!piece.empty() && piece.front() == ' ') piece.remove_prefix(1);
        while (!piece.empty() && piece.back() == ' ') piece.remove_suffix(1);
        out.push_back(piece);
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

AnomalyKind need_kind(std::string_view s) {
    auto k = parse_anomaly_kind(s);
    if (!k) throw ParseError("unknown anomaly kind '" + std::string(s) + "'");
    return *k;
}

Sizing need_sizing(std::string_view s) {
    auto z = parse_sizing(s);
    if (!z) throw ParseError("unknown sizing '" + std::string(s) + "'");
    return *z;
}

std::uint64_t need_unsigned(std::string_view s, std::string_view what) {
    const auto v = parse_int(s, what);
    if (v < 0) throw ParseError(std::string(what) + " must be non-negative");
    return static_cast<std::uint64_t>(v);
}

}  // namespace

ScenarioSpec parse_scenario(std::string_view text) {
    const auto kv = KvConfig::parse(text);
    ScenarioSpec spec;
    for (const auto& [key, value] : kv.entries()) {
        if (key == "duration_bins") {
            spec.duration_bins = need_unsigned(value, key);
        } else if (key == "flows_per_bin") {
            spec.flows_per_bin = parse_double(value, key);
        } else if (key == "powerlaw_p") {
            spec.powerlaw_p = parse_double(value, key);
        } else if (key == "seed") {
            spec.seed = need_unsigned(value, key);
        } else if (key == "start_time") {
            spec.start_time = parse_int(value, key);
        } else if (key == "bin_width") {
            spec.bin_width = parse_int(value, key);
        } else if (key == "as_pool") {
            spec.as_pool = need_unsigned(value, key);
        } else if (key == "port_pool") {
            spec.port_pool = need_unsigned(value, key);
        } else if (key == "inject") {
            const auto f = split(value, ',');
            if (f.size() != 4) throw ParseError("inject expects kind,bin,intensity,sizing");
            spec.injections.push_back({need_kind(f[0]), need_unsigned(f[1], "inject bin"),
                                       static_cast<std::uint32_t>(need_unsigned(f[2], "inject intensity")),
                                       need_sizing(f[3])});
        } else if (key == "inject_random") {
            const auto f = split(value, ',');
            if (f.size() != 4) throw ParseError("inject_random expects kind,count,min-max,sizing");
            const auto range = split(f[2], '-');
            RandomInjections r;
            r.kind = need_kind(f[0]);
            r.count = need_unsigned(f[1], "inject_random count");
            r.min_intensity = static_cast<std::uint32_t>(need_unsigned(range[0], "intensity"));
            r.max_intensity =
                range.size() > 1 ? static_cast<std::uint32_t>(need_unsigned(range[1], "intensity")) : r.min_intensity;
            r.sizing = need_sizing(f[3]);
            spec.random_injections.push_back(r);
        } else {
            throw ParseError("unknown scenario key '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_scenario(ss.str());
    } catch (const Error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string format_scenario(const ScenarioSpec& spec) {
    std::ostringstream out;
    out << "duration_bins = " << spec.duration_bins << '\n'
        << "flows_per_bin = " << format_double(spec.flows_per_bin) << '\n'
        << "powerlaw_p = " << format_double(spec.powerlaw_p) << '\n'
        << "seed = " << spec.seed << '\n'
        << "start_time = " << spec.start_time << '\n'
        << "bin_width = " << spec.bin_width << '\n'
        << "as_pool = " << spec.as_pool << '\n'
        << "port_pool = " << spec.port_pool << '\n';
    for (const auto& i : spec.injections) {
        out << "inject = " << to_string(i.kind) << ',' << i.bin << ',' << i.intensity << ',' << to_string(i.sizing)
            << '\n';
    }
    for (const auto& r : spec.random_injections) {
        out << "inject_random = " << to_string(r.kind) << ',' << r.count << ',' << r.min_intensity << '-'
            << r.max_intensity << ',' << to_string(r.sizing) << '\n';
    }
    return out.str();
}

std::vector<InjectionSpec> expand_injections(const ScenarioSpec& spec) {
    spec.validate();
    std::vector<InjectionSpec> out = spec.injections;
    std::set<std::size_t> used;
    for (const auto& i : out) used.insert(i.bin);

    auto rng = stream(spec.seed, kPlacementStream);
    std::uniform_int_distribution<std::size_t> any_bin(0, spec.duration_bins - 1);
    for (const auto& r : spec.random_injections) {
        std::uniform_int_distribution<std::uint32_t> intensity(r.min_intensity, r.max_intensity);
        for (std::size_t n = 0; n < r.count; ++n) {
            if (used.size() >= spec.duration_bins) throw Error("more random injections than free bins");
            std::size_t bin = any_bin(rng);
            while (used.count(bin)) bin = any_bin(rng);
            used.insert(bin);
            out.push_back({r.kind, bin, intensity(rng), r.sizing});
        }
    }
    return out;
}

GeneratedTrace generate(const ScenarioSpec& spec) {
    spec.validate();
    const auto injections = expand_injections(spec);

    auto pool_rng = stream(spec.seed, kPoolStream);
    const auto as_values = draw_distinct(pool_rng, kMinBackgroundAs, kFreshAsBase, spec.as_pool);
    const auto port_values = draw_distinct(pool_rng, 1, kFreshPortBase, spec.port_pool);
    const auto src_as_rank = permuted(pool_rng, as_values);
    const auto dst_as_rank = permuted(pool_rng, as_values);
    const auto src_port_rank = permuted(pool_rng, port_values);
    const auto dst_port_rank = permuted(pool_rng, port_values);
    auto as_dist = rank_distribution(spec.as_pool, spec.powerlaw_p);
    auto port_dist = rank_distribution(spec.port_pool, spec.powerlaw_p);

    std::vector<std::vector<std::size_t>> by_bin(spec.duration_bins);
    for (std::size_t j = 0; j < injections.size(); ++j) by_bin[injections[j].bin].push_back(j);

    GeneratedTrace out;
    out.records.reserve(static_cast<std::size_t>(spec.flows_per_bin * 1.01) * spec.duration_bins);
    std::vector<std::pair<std::size_t, TruthRecord>> truth;

    std::vector<FlowRecord> bin_flows;
    for (std::size_t b = 0; b < spec.duration_bins; ++b) {
        auto rng = stream(spec.seed, b, 0x62696eULL);
        const std::int64_t bin_start = spec.start_time + static_cast<std::int64_t>(b) * spec.bin_width;
        std::uniform_int_distribution<std::int64_t> offset(0, spec.bin_width - 1);
        std::uniform_int_distribution<std::uint32_t> host(1, 65534);
        std::uniform_int_distribution<std::uint32_t> duration(0, 300);

        bin_flows.clear();
        std::unordered_set<WitnessTuple, TupleHash> reserved;
        for (auto j : by_bin[b]) {
            auto inj = build_injection(injections[j], j, bin_start, spec.bin_width, spec.seed);
            for (const auto& r : inj.flows) reserved.insert({r.src_as, r.src_port, r.dst_port, r.dst_ip});
            bin_flows.insert(bin_flows.end(), inj.flows.begin(), inj.flows.end());
            truth.emplace_back(j, std::move(inj.truth));
        }

        const auto n = std::poisson_distribution<std::int64_t>(spec.flows_per_bin)(rng);
        for (std::int64_t i = 0; i < n; ++i) {
            FlowRecord r;
            r.start_time = bin_start + offset(rng);
            r.duration = duration(rng);
            do {
                r.src_as = src_as_rank[as_dist(rng)];
                r.dst_as = dst_as_rank[as_dist(rng)];
                r.src_port = static_cast<Port>(src_port_rank[port_dist(rng)]);
                r.dst_port = static_cast<Port>(dst_port_rank[port_dist(rng)]);
                r.src_ip = make_ip(r.src_as, host(rng));
                r.dst_ip = make_ip(r.dst_as, host(rng));
            } while (!reserved.empty() && reserved.count({r.src_as, r.src_port, r.dst_port, r.dst_ip}));
            r.protocol = background_protocol(rng);
            const auto shape = background_shape(rng);
            r.packets = shape.packets;
            r.bytes = shape.bytes;
            bin_flows.push_back(r);
        }
        std::stable_sort(bin_flows.begin(), bin_flows.end(),
                         [](const FlowRecord& a, const FlowRecord& b) { return a.start_time < b.start_time; });
        out.records.insert(out.records.end(), bin_flows.begin(), bin_flows.end());
    }

    std::stable_sort(truth.begin(), truth.end(), [](const auto& a, const auto& b) {
        return std::tie(a.second.bin, a.first) < std::tie(b.second.bin, b.first);
    });
    for (auto& [_, t] : truth) out.truth.push_back(std::move(t));
    return out;
}

bool matches_truth(const FlowRecord& r, const TruthRecord& t, std::int64_t origin, std::int64_t width) {
    if (r.start_time < origin) return false;
    if (static_cast<std::size_t>((r.start_time - origin) / width) != t.bin) return false;
    if (t.src_as && r.src_as != *t.src_as) return false;
    if (t.dst_ip && r.dst_ip != *t.dst_ip) return false;
    if (t.src_port && r.src_port != *t.src_port) return false;
    if (t.dst_port && r.dst_port != *t.dst_port) return false;
    return true;
}

namespace {

constexpr std::string_view kTruthHeader = "bin,kind,intensity,src_as,dst_ip,src_port,dst_port";

template <typename T>
std::string opt_text(const std::optional<T>& v) {
    return v ? std::to_string(*v) : std::string();
}

}  // namespace

void write_truth(const std::filesystem::path& path, const GroundTruth& truth) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    if (truth.trace_id) out << "# trace_id=" << to_hex(*truth.trace_id) << '\n';
    if (truth.config_hash) out << "# config_hash=" << *truth.config_hash << '\n';
    out << kTruthHeader << '\n';
    for (const auto& t : truth.records) {
        out << t.bin << ',' << to_string(t.kind) << ',' << t.intensity << ',' << opt_text(t.src_as) << ','
            << (t.dst_ip ? format_ipv4(*t.dst_ip) : std::string()) << ',' << opt_text(t.src_port) << ','
            << opt_text(t.dst_port) << '\n';
    }
    if (!out) throw Error("write failure on '" + path.string() + "'");
}

GroundTruth parse_truth_text(std::string_view text) {
    GroundTruth truth;
    bool header = false;
    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const auto where = "truth line " + std::to_string(line_no) + ": ";
        if (line.front() == '#') {
            line.remove_prefix(1);
            while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
            if (line.starts_with("trace_id=")) truth.trace_id = parse_hex(line.substr(9));
            if (line.starts_with("config_hash=")) truth.config_hash = std::string(line.substr(12));
            continue;
        }
        if (!header) {
            if (line != kTruthHeader) throw ParseError(where + "expected header '" + std::string(kTruthHeader) + "'");
            header = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 7) throw ParseError(where + "expected 7 fields");
        TruthRecord t;
        t.bin = need_unsigned(f[0], "bin");
        t.kind = need_kind(f[1]);
        t.intensity = static_cast<std::uint32_t>(need_unsigned(f[2], "intensity"));
        if (!f[3].empty()) t.src_as = static_cast<AsNumber>(need_unsigned(f[3], "src_as"));
        if (!f[4].empty()) {
            auto ip = parse_ipv4(f[4]);
            if (!ip) throw ParseError(where + "bad dst_ip");
            t.dst_ip = *ip;
        }
        auto port = [&](std::string_view s) -> std::optional<Port> {
            if (s.empty()) return std::nullopt;
            const auto v = need_unsigned(s, "port");
            if (v > 65535) throw ParseError(where + "port out of range");
            return static_cast<Port>(v);
        };
        t.src_port = port(f[5]);
        t.dst_port = port(f[6]);
        truth.records.push_back(t);
    }
    if (!header) throw ParseError("truth file has no header");
    return truth;
}

GroundTruth read_truth(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open truth file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_truth_text(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

PowerLawCheck verify_powerlaw(std::span<const FlowRecord> records, FeatureKind feature, std::size_t k) {
    PowerLawCheck out;
    out.feature = feature;
    out.k = k;
    const auto h = build_histogram(records, feature);
    std::vector<double> counts;
    counts.reserve(h.entries.size());
    for (const auto& e : h.entries) counts.push_back(static_cast<double>(e.count));
    out.sigma_k = tail_norm(counts, k);
    out.fit = fit_power_law(counts);
    out.bound = std::numeric_limits<double>::quiet_NaN();
    if (out.fit && out.fit->p > 0.0 && out.fit->p <= 1.0 && k >= 1) {
        out.degenerate = false;
        out.bound = power_law_bound(*out.fit, k);
        out.holds = out.sigma_k <= out.bound;
    }
    return out;
}

}  // namespace flowvote
