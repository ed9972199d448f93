#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flowvote {

/// Flat "key = value" text. '#' starts a comment; repeated keys are kept in order.
class KvConfig {
public:
    static KvConfig parse(std::string_view text);
    static KvConfig load(const std::filesystem::path& path);

    std::optional<std::string> get(std::string_view key) const;
    std::vector<std::string> get_all(std::string_view key) const;
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    double get_double(std::string_view key, double fallback) const;
    long long get_int(std::string_view key, long long fallback) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);
/// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace flowvote
