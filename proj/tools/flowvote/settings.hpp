#pragma once

#include "flowvote/kv_config.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace flowvote::cli {

inline constexpr const char* kOutDirEnv = "FLOWVOTE_OUT_DIR";

/// Bad invocation: unknown config keys, unparsable config values, conflicting options.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Resolves each setting as flag > config file > built-in default, and collects the effective
/// values into a canonical text whose hash is embedded in every output.
class Settings {
public:
    Settings(const CLI::App& sub, const std::string& config_path);

    /// Applies the config-file value of `name` unless --name was given on the command line.
    /// Paths and output names pass hashed=false; they do not change results.
    void resolve(const std::string& name, std::string& target, bool hashed = true);
    void resolve(const std::string& name, double& target);
    void resolve(const std::string& name, std::optional<double>& target);
    void resolve(const std::string& name, std::uint64_t& target);
    void resolve(const std::string& name, std::optional<std::uint64_t>& target);
    void resolve(const std::string& name, bool& target);

    /// Output directory: --out-dir, then the environment, then the config file, then ".".
    std::filesystem::path out_dir(const std::string& flag_value);

    bool given(const std::string& name) const;
    void record(const std::string& key, const std::string& value) { effective_[key] = value; }
    std::string config_hash() const;
    std::string canonical() const;

private:
    std::optional<std::string> from_config(const std::string& name) const;

    const CLI::App& sub_;
    std::optional<KvConfig> config_;
    std::map<std::string, std::string> effective_;
};

}  // namespace flowvote::cli
