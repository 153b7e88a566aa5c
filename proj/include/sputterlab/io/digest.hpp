#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace sputter {

// FNV-1a 64; doubles are hashed by bit pattern so digests are exact.
class Fnv1a {
public:
    void add_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }
    void add(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v);
        add_bytes(&bits, sizeof bits);
    }
    void add(std::uint64_t v) { add_bytes(&v, sizeof v); }
    void add(std::string_view s) { add_bytes(s.data(), s.size()); }

    std::uint64_t value() const { return state_; }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
        return buf;
    }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace sputter
