#include "flowvote/flow.hpp"

#include "flowvote/digest.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace flowvote {

namespace {

constexpr std::size_t kMaxDiagnostics = 5;

template <typename T>
bool parse_uint(std::string_view s, T& out) {
    if (s.empty() || s.front() == '+' || s.front() == '-') return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string_view trim_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool fail(std::string* reason, const char* msg) {
    if (reason) *reason = msg;
    return false;
}

}  // namespace

std::string to_hex(std::uint64_t value) {
    char buf[17];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, 16);
    std::string s(buf, ptr);
    return std::string(16 - s.size(), '0') + s;
}

std::uint64_t parse_hex(std::string_view text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("invalid hex value '" + std::string(text) + "'");
    }
    return v;
}

std::string_view to_string(FeatureKind f) {
    switch (f) {
    case FeatureKind::SrcAs: return "srcAS";
    case FeatureKind::DstAs: return "dstAS";
    case FeatureKind::SrcPort: return "srcPort";
    case FeatureKind::DstPort: return "dstPort";
    }
    return "?";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view s) {
    for (auto f : kAllFeatures) {
        if (to_string(f) == s) return f;
    }
    return std::nullopt;
}

std::string_view to_string(Protocol p) {
    switch (p) {
    case Protocol::Tcp: return "TCP";
    case Protocol::Udp: return "UDP";
    case Protocol::Other: return "OTHER";
    }
    return "?";
}

std::string_view to_string(Heuristic h) { return h == Heuristic::H1 ? "h1" : "h2"; }

std::string format_ipv4(Ipv4 ip) {
    in_addr addr{};
    addr.s_addr = htonl(ip);
    char buf[INET_ADDRSTRLEN];
    inet_ntop(AF_INET, &addr, buf, sizeof(buf));
    return buf;
}

std::optional<Ipv4> parse_ipv4(std::string_view s) {
    if (s.size() >= INET_ADDRSTRLEN) return std::nullopt;
    char buf[INET_ADDRSTRLEN];
    std::copy(s.begin(), s.end(), buf);
    buf[s.size()] = '\0';
    in_addr addr{};
    if (inet_pton(AF_INET, buf, &addr) != 1) return std::nullopt;
    return ntohl(addr.s_addr);
}

std::optional<FlowRecord> parse_trace_line(std::string_view line, std::string* reason) {
    std::array<std::string_view, 11> f;
    std::size_t n = 0;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        if (n == f.size()) {
            fail(reason, "too many fields");
            return std::nullopt;
        }
        f[n++] = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (n != f.size()) {
        fail(reason, "expected 11 fields");
        return std::nullopt;
    }

    FlowRecord r;
    std::uint32_t port = 0;
    if (!parse_uint(f[0], r.start_time)) return fail(reason, "bad start_time"), std::nullopt;
    if (!parse_uint(f[1], r.duration)) return fail(reason, "bad duration"), std::nullopt;
    auto src = parse_ipv4(f[2]);
    auto dst = parse_ipv4(f[3]);
    if (!src || !dst) return fail(reason, "bad IPv4 address"), std::nullopt;
    r.src_ip = *src;
    r.dst_ip = *dst;
    if (!parse_uint(f[4], r.src_as) || !parse_uint(f[5], r.dst_as)) {
        return fail(reason, "bad AS number"), std::nullopt;
    }
    if (!parse_uint(f[6], port) || port > 65535) return fail(reason, "src_port out of range"), std::nullopt;
    r.src_port = static_cast<Port>(port);
    if (!parse_uint(f[7], port) || port > 65535) return fail(reason, "dst_port out of range"), std::nullopt;
    r.dst_port = static_cast<Port>(port);
    if (f[8] == "TCP") {
        r.protocol = Protocol::Tcp;
    } else if (f[8] == "UDP") {
        r.protocol = Protocol::Udp;
    } else if (f[8] == "OTHER") {
        r.protocol = Protocol::Other;
    } else {
        return fail(reason, "bad protocol"), std::nullopt;
    }
    if (!parse_uint(f[9], r.packets) || r.packets < 1) return fail(reason, "packets must be >= 1"), std::nullopt;
    if (!parse_uint(f[10], r.bytes) || r.bytes < r.packets) {
        return fail(reason, "bytes must be >= packets"), std::nullopt;
    }
    return r;
}

std::string format_trace_line(const FlowRecord& r) {
    std::string out;
    out.reserve(96);
    out += std::to_string(r.start_time);
    out += ',';
    out += std::to_string(r.duration);
    out += ',';
    out += format_ipv4(r.src_ip);
    out += ',';
    out += format_ipv4(r.dst_ip);
    out += ',';
    out += std::to_string(r.src_as);
    out += ',';
    out += std::to_string(r.dst_as);
    out += ',';
    out += std::to_string(r.src_port);
    out += ',';
    out += std::to_string(r.dst_port);
    out += ',';
    out += to_string(r.protocol);
    out += ',';
    out += std::to_string(r.packets);
    out += ',';
    out += std::to_string(r.bytes);
    return out;
}

std::uint64_t trace_digest(std::span<const FlowRecord> records) {
    Fnv1a64 h;
    for (const auto& r : records) {
        h.update(format_trace_line(r));
        h.update("\n");
    }
    return h.value();
}

ParsedTrace parse_trace_text(std::string_view text, const TraceFormat& format) {
    ParsedTrace out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t data_lines = 0;

    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = trim_cr(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;

        if (!header_seen) {
            if (format.allow_comments && !line.empty() && line.front() == '#') continue;
            if (line != kTraceHeader) {
                throw ParseError("line " + std::to_string(line_no) + ": header mismatch, expected '" +
                                 std::string(kTraceHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        ++data_lines;
        std::string reason;
        if (auto rec = parse_trace_line(line, &reason)) {
            out.records.push_back(*rec);
        } else {
            ++out.malformed_lines;
            if (out.diagnostics.size() < kMaxDiagnostics) {
                out.diagnostics.push_back("line " + std::to_string(line_no) + ": " + reason);
            }
        }
    }
    if (!header_seen) throw ParseError("missing header line");

    if (data_lines > 0 &&
        static_cast<double>(out.malformed_lines) > format.max_malformed_fraction * static_cast<double>(data_lines)) {
        std::ostringstream msg;
        msg << out.malformed_lines << " of " << data_lines << " lines malformed";
        for (const auto& d : out.diagnostics) msg << "; " << d;
        throw ParseError(msg.str());
    }
    out.trace_id = trace_digest(out.records);
    return out;
}

ParsedTrace parse_trace(const std::filesystem::path& path, const TraceFormat& format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open trace '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error("read failure on '" + path.string() + "'");
    try {
        return parse_trace_text(text, format);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_trace(const std::filesystem::path& path, std::span<const FlowRecord> records,
                 std::span<const std::string> comments) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    for (const auto& c : comments) out << "# " << c << '\n';
    out << kTraceHeader << '\n';
    for (const auto& r : records) out << format_trace_line(r) << '\n';
    if (!out) throw Error("write failure on '" + path.string() + "'");
}

BinnedTrace::BinnedTrace(std::int64_t origin, std::int64_t width, std::vector<FlowRecord> records,
                         std::vector<std::size_t> offsets)
    : origin_(origin), width_(width), records_(std::move(records)), offsets_(std::move(offsets)) {}

std::span<const FlowRecord> BinnedTrace::bin(std::size_t index) const {
    return std::span<const FlowRecord>(records_).subspan(offsets_.at(index), offsets_.at(index + 1) - offsets_[index]);
}

TimeBin BinnedTrace::time_bin(std::size_t index) const {
    return TimeBin{index, origin_ + static_cast<std::int64_t>(index) * width_, width_};
}

BinnedTrace bin_records(std::span<const FlowRecord> records, std::int64_t width, const BinningOptions& options) {
    if (width <= 0) throw Error("bin width must be positive");

    std::int64_t origin = 0;
    if (options.origin) {
        origin = *options.origin;
    } else if (!records.empty()) {
        auto earliest = std::min_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
                            return a.start_time < b.start_time;
                        })->start_time;
        origin = earliest - (((earliest % width) + width) % width);
    }

    auto index_of_record = [&](const FlowRecord& r) -> std::int64_t {
        auto delta = r.start_time - origin;
        auto q = delta / width;
        if (delta % width != 0 && delta < 0) --q;
        return q;
    };

    std::size_t bins = 0;
    if (options.bin_count) {
        bins = *options.bin_count;
    } else {
        for (const auto& r : records) bins = std::max<std::size_t>(bins, static_cast<std::size_t>(index_of_record(r)) + 1);
    }

    std::vector<std::size_t> counts(bins + 1, 0);
    for (const auto& r : records) {
        auto idx = index_of_record(r);
        if (idx < 0 || static_cast<std::size_t>(idx) >= bins) {
            throw Error("record at t=" + std::to_string(r.start_time) + " falls outside the binned interval");
        }
        ++counts[static_cast<std::size_t>(idx) + 1];
    }
    std::vector<std::size_t> offsets(bins + 1, 0);
    for (std::size_t i = 1; i <= bins; ++i) offsets[i] = offsets[i - 1] + counts[i];

    std::vector<FlowRecord> sorted(records.size());
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& r : records) sorted[cursor[static_cast<std::size_t>(index_of_record(r))]++] = r;

    return BinnedTrace(origin, width, std::move(sorted), std::move(offsets));
}

void PrefilterConfig::validate() const {
    if (alpha < 1) throw Error("alpha must be >= 1");
    if (beta < 1) throw Error("beta must be >= 1");
}

std::vector<FlowRecord> prefilter(std::span<const FlowRecord> records, const PrefilterConfig& cfg) {
    cfg.validate();
    std::vector<FlowRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [&](const FlowRecord& r) { return passes(r, cfg); });
    return out;
}

BinnedTrace prefilter(const BinnedTrace& trace, const PrefilterConfig& cfg) {
    cfg.validate();
    std::vector<FlowRecord> kept;
    std::vector<std::size_t> offsets{0};
    offsets.reserve(trace.size() + 1);
    for (std::size_t t = 0; t < trace.size(); ++t) {
        for (const auto& r : trace.bin(t)) {
            if (passes(r, cfg)) kept.push_back(r);
        }
        offsets.push_back(kept.size());
    }
    return BinnedTrace(trace.origin(), trace.width(), std::move(kept), std::move(offsets));
}

}  // namespace flowvote
