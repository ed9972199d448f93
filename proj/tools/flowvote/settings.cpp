#include "settings.hpp"

#include "flowvote/digest.hpp"
#include "flowvote/flow.hpp"

#include <algorithm>
#include <cstdlib>

namespace flowvote::cli {

namespace {

std::string key_of(std::string name) {
    std::replace(name.begin(), name.end(), '-', '_');
    return name;
}

}  // namespace

Settings::Settings(const CLI::App& sub, const std::string& config_path) : sub_(sub) {
    if (config_path.empty()) return;
    try {
        config_ = KvConfig::load(config_path);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    for (const auto& [key, value] : config_->entries()) {
        std::string flag = key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        if (flag == "config" || sub_.get_option_no_throw("--" + flag) == nullptr) {
            throw UsageError(config_path + ": unknown key '" + key + "' for " + sub_.get_name());
        }
    }
}

bool Settings::given(const std::string& name) const {
    const auto* opt = sub_.get_option_no_throw("--" + name);
    return opt != nullptr && opt->count() > 0;
}

std::optional<std::string> Settings::from_config(const std::string& name) const {
    if (!config_ || given(name)) return std::nullopt;
    return config_->get(key_of(name));
}

void Settings::resolve(const std::string& name, std::string& target, bool hashed) {
    if (auto v = from_config(name)) target = *v;
    if (hashed) record(key_of(name), target);
}

void Settings::resolve(const std::string& name, double& target) {
    try {
        if (auto v = from_config(name)) target = parse_double(*v, name);
    } catch (const ParseError& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    record(key_of(name), format_double(target));
}

void Settings::resolve(const std::string& name, std::optional<double>& target) {
    try {
        if (auto v = from_config(name)) target = parse_double(*v, name);
    } catch (const ParseError& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    if (target) record(key_of(name), format_double(*target));
}

void Settings::resolve(const std::string& name, std::uint64_t& target) {
    try {
        if (auto v = from_config(name)) {
            const auto parsed = parse_int(*v, name);
            if (parsed < 0) throw UsageError("config: " + name + " must be non-negative");
            target = static_cast<std::uint64_t>(parsed);
        }
    } catch (const ParseError& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    record(key_of(name), std::to_string(target));
}

void Settings::resolve(const std::string& name, std::optional<std::uint64_t>& target) {
    if (auto v = from_config(name)) {
        std::uint64_t value = 0;
        try {
            const auto parsed = parse_int(*v, name);
            if (parsed < 0) throw UsageError("config: " + name + " must be non-negative");
            value = static_cast<std::uint64_t>(parsed);
        } catch (const ParseError& e) {
            throw UsageError(std::string("config: ") + e.what());
        }
        target = value;
    }
    if (target) record(key_of(name), std::to_string(*target));
}

void Settings::resolve(const std::string& name, bool& target) {
    if (auto v = from_config(name)) {
        if (*v == "true" || *v == "1") {
            target = true;
        } else if (*v == "false" || *v == "0") {
            target = false;
        } else {
            throw UsageError("config: " + name + " must be true or false");
        }
    }
    record(key_of(name), target ? "true" : "false");
}

std::filesystem::path Settings::out_dir(const std::string& flag_value) {
    if (given("out-dir")) return flag_value;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    if (config_) {
        if (auto v = config_->get("out_dir")) return *v;
    }
    return flag_value.empty() ? "." : flag_value;
}

std::string Settings::canonical() const {
    std::string out;
    for (const auto& [k, v] : effective_) out += k + "=" + v + "\n";
    return out;
}

std::string Settings::config_hash() const { return to_hex(fnv1a64(canonical())); }

}  // namespace flowvote::cli
