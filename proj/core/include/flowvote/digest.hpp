#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace flowvote {

/// 64-bit FNV-1a. Used for trace ids and config hashes, not for security.
class Fnv1a64 {
public:
    void update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
    }
    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
    Fnv1a64 h;
    h.update(bytes);
    return h.value();
}

std::string to_hex(std::uint64_t value);
std::uint64_t parse_hex(std::string_view text);

}  // namespace flowvote
