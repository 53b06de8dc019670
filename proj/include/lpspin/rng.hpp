// Counter-based random number generation: Philox4x32-10 keyed by a 64-bit
// seed, with a 64-bit stream index baked into the counter's high words.
// Identical (seed, stream) pairs produce bit-identical sequences on any
// platform, independent of scheduling, so parallel replicas stay
// reproducible.
//
// Stream index conventions used across the toolkit:
//   disorder sampling      stream = replica_index
//   solver restarts        stream = (restart_index << 8) | purpose byte
//   quadrature / MC layers stream = quad seed + layer index
// Callers only ever need "distinct streams are independent".
#pragma once

#include <cmath>
#include <cstdint>

namespace lpspin {

namespace detail {

struct philox_state {
    uint32_t ctr[4];
    uint32_t key[2];
};

inline void philox_round(philox_state& s) {
    // Multipliers and Weyl constants from the Random123 reference.
    constexpr uint64_t M0 = 0xD2511F53ull;
    constexpr uint64_t M1 = 0xCD9E8D57ull;
    uint64_t p0 = M0 * s.ctr[0];
    uint64_t p1 = M1 * s.ctr[2];
    uint32_t c0 = static_cast<uint32_t>(p1 >> 32) ^ s.ctr[1] ^ s.key[0];
    uint32_t c1 = static_cast<uint32_t>(p1);
    uint32_t c2 = static_cast<uint32_t>(p0 >> 32) ^ s.ctr[3] ^ s.key[1];
    uint32_t c3 = static_cast<uint32_t>(p0);
    s.ctr[0] = c0;
    s.ctr[1] = c1;
    s.ctr[2] = c2;
    s.ctr[3] = c3;
    s.key[0] += 0x9E3779B9u;
    s.key[1] += 0xBB67AE85u;
}

inline void philox_block(uint64_t seed, uint64_t stream, uint64_t pos, uint32_t out[4]) {
    philox_state s;
    s.ctr[0] = static_cast<uint32_t>(pos);
    s.ctr[1] = static_cast<uint32_t>(pos >> 32);
    s.ctr[2] = static_cast<uint32_t>(stream);
    s.ctr[3] = static_cast<uint32_t>(stream >> 32);
    s.key[0] = static_cast<uint32_t>(seed);
    s.key[1] = static_cast<uint32_t>(seed >> 32);
    for (int r = 0; r < 10; ++r) philox_round(s);
    out[0] = s.ctr[0];
    out[1] = s.ctr[1];
    out[2] = s.ctr[2];
    out[3] = s.ctr[3];
}

} // namespace detail

class rng_stream {
public:
    rng_stream(uint64_t seed, uint64_t stream)
        : seed_(seed), stream_(stream), pos_(0), buf_pos_(4), have_cached_normal_(false),
          cached_normal_(0.0) {}

    uint32_t next_u32() {
        if (buf_pos_ == 4) {
            detail::philox_block(seed_, stream_, pos_++, buf_);
            buf_pos_ = 0;
        }
        return buf_[buf_pos_++];
    }

    uint64_t next_u64() {
        uint64_t hi = next_u32();
        uint64_t lo = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on (0,1]: 53-bit mantissa, never exactly 0 so log() is safe.
    double uniform01() {
        uint64_t bits = next_u64() >> 11;
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the paired value is cached.
    double normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_normal_ = r * std::sin(a);
        have_cached_normal_ = true;
        return r * std::cos(a);
    }

    void fill_normal(double* out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out[i] = normal();
    }

private:
    uint64_t seed_;
    uint64_t stream_;
    uint64_t pos_;
    uint32_t buf_[4];
    int buf_pos_;
    bool have_cached_normal_;
    double cached_normal_;
};

} // namespace lpspin
