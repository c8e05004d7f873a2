#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace coinworld {

// FNV-1a, 64-bit. Used for content fingerprints (worlds, vocabularies,
// parameters, count tables) where we need fast, stable, order-sensitive
// hashing — not cryptographic strength.
class Fnv1a {
public:
    static constexpr uint64_t kOffset = 14695981039346656037ULL;
    static constexpr uint64_t kPrime = 1099511628211ULL;

    void update(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= kPrime;
        }
    }

    void update(std::string_view s) { update(s.data(), s.size()); }

    void update_u64(uint64_t v) { update(&v, sizeof(v)); }
    void update_i64(int64_t v) { update(&v, sizeof(v)); }

    void update_double(double v) {
        // +0.0 and -0.0 hash identically; NaNs are not expected in fingerprinted data.
        if (v == 0.0) v = 0.0;
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        update_u64(bits);
    }

    uint64_t digest() const { return state_; }

private:
    uint64_t state_ = kOffset;
};

inline uint64_t fnv1a(std::string_view s) {
    Fnv1a h;
    h.update(s);
    return h.digest();
}

}  // namespace coinworld
