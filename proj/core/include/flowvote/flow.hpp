#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flowvote {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

using AsNumber = std::uint32_t;
using Port = std::uint16_t;
using Ipv4 = std::uint32_t;

/// Value of one traffic feature. AS numbers and ports share one integer domain.
using FeatureValue = std::uint32_t;

enum class Protocol : std::uint8_t { Tcp, Udp, Other };

struct FlowRecord {
    std::int64_t start_time = 0;
    std::uint32_t duration = 0;
    Ipv4 src_ip = 0;
    Ipv4 dst_ip = 0;
    AsNumber src_as = 0;
    AsNumber dst_as = 0;
    Port src_port = 0;
    Port dst_port = 0;
    Protocol protocol = Protocol::Tcp;
    std::uint32_t packets = 1;
    std::uint64_t bytes = 1;

    friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

enum class FeatureKind : std::uint8_t { SrcAs = 0, DstAs = 1, SrcPort = 2, DstPort = 3 };

inline constexpr std::array<FeatureKind, 4> kAllFeatures{
    FeatureKind::SrcAs, FeatureKind::DstAs, FeatureKind::SrcPort, FeatureKind::DstPort};

constexpr std::size_t index_of(FeatureKind f) { return static_cast<std::size_t>(f); }

std::string_view to_string(FeatureKind f);
std::string_view to_string(Protocol p);
std::optional<FeatureKind> parse_feature_kind(std::string_view s);

constexpr FeatureValue feature_value(const FlowRecord& r, FeatureKind f) {
    switch (f) {
    case FeatureKind::SrcAs: return r.src_as;
    case FeatureKind::DstAs: return r.dst_as;
    case FeatureKind::SrcPort: return r.src_port;
    case FeatureKind::DstPort: return r.dst_port;
    }
    return 0;
}

std::string format_ipv4(Ipv4 ip);
std::optional<Ipv4> parse_ipv4(std::string_view s);

// ---------------------------------------------------------------------------
// CSV flow format

inline constexpr std::string_view kTraceHeader =
    "start_time,duration,src_ip,dst_ip,src_as,dst_as,src_port,dst_port,protocol,packets,bytes";

struct TraceFormat {
    /// Lines starting with '#' before the header are metadata and skipped.
    bool allow_comments = true;
    /// Parsing aborts when the malformed share of data lines exceeds this.
    double max_malformed_fraction = 0.01;
};

struct ParsedTrace {
    std::vector<FlowRecord> records;
    std::size_t malformed_lines = 0;
    /// Up to the first few malformed lines, as "line N: reason".
    std::vector<std::string> diagnostics;
    std::uint64_t trace_id = 0;
};

/// Parses one data line. Returns the reason on failure.
std::optional<FlowRecord> parse_trace_line(std::string_view line, std::string* reason = nullptr);
std::string format_trace_line(const FlowRecord& r);

ParsedTrace parse_trace(const std::filesystem::path& path, const TraceFormat& format = {});
ParsedTrace parse_trace_text(std::string_view text, const TraceFormat& format = {});

/// Writes header plus one line per record. `comments` are emitted as "# ..." lines first.
void write_trace(const std::filesystem::path& path, std::span<const FlowRecord> records,
                 std::span<const std::string> comments = {});

/// Order-sensitive digest of the canonical record lines; identifies a trace across tools.
std::uint64_t trace_digest(std::span<const FlowRecord> records);

// ---------------------------------------------------------------------------
// Time binning

inline constexpr std::int64_t kDefaultBinWidth = 900;

struct TimeBin {
    std::size_t index = 0;
    std::int64_t start = 0;
    std::int64_t width = kDefaultBinWidth;
};

/// Records grouped by time bin. Bins are contiguous from 0 to size()-1; empty bins are kept.
class BinnedTrace {
public:
    BinnedTrace() = default;
    BinnedTrace(std::int64_t origin, std::int64_t width, std::vector<FlowRecord> records,
                std::vector<std::size_t> offsets);

    std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::span<const FlowRecord> bin(std::size_t index) const;
    TimeBin time_bin(std::size_t index) const;
    std::int64_t origin() const { return origin_; }
    std::int64_t width() const { return width_; }
    std::span<const FlowRecord> records() const { return records_; }

private:
    std::int64_t origin_ = 0;
    std::int64_t width_ = kDefaultBinWidth;
    std::vector<FlowRecord> records_;
    std::vector<std::size_t> offsets_;
};

struct BinningOptions {
    /// Trace start. Defaults to the earliest start_time rounded down to a multiple of the width.
    std::optional<std::int64_t> origin;
    /// Number of bins. Defaults to cover the latest record.
    std::optional<std::size_t> bin_count;
};

/// Assigns each record to bin floor((start_time - origin) / width). Stable within a bin.
BinnedTrace bin_records(std::span<const FlowRecord> records, std::int64_t width,
                        const BinningOptions& options = {});

// ---------------------------------------------------------------------------
// Small-flow pre-filters

enum class Heuristic : std::uint8_t { H1, H2 };

std::string_view to_string(Heuristic h);

struct PrefilterConfig {
    Heuristic heuristic = Heuristic::H1;
    std::uint32_t alpha = 3;
    std::uint64_t beta = 64;

    void validate() const;
};

constexpr bool passes(const FlowRecord& r, const PrefilterConfig& cfg) {
    return cfg.heuristic == Heuristic::H1 ? r.packets <= cfg.alpha : r.bytes <= cfg.beta;
}

std::vector<FlowRecord> prefilter(std::span<const FlowRecord> records, const PrefilterConfig& cfg);

/// Applies the pre-filter bin by bin, keeping the bin layout of the input.
BinnedTrace prefilter(const BinnedTrace& trace, const PrefilterConfig& cfg);

}  // namespace flowvote
