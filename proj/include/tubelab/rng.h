// rng.h -- deterministic random source.
// xoshiro256** with splitmix64 seeding. We avoid std:: distributions because
// their outputs are implementation-defined and the reports must be
// byte-reproducible for a given seed.
#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>
#include <vector>

#include "tubelab/vec.h"

namespace tubelab {

inline uint64_t splitmix64(uint64_t& s) {
    uint64_t z = (s += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Stable tag hash so sub-seeds derived from (seed, "purpose") never collide
// with plain counters.
inline uint64_t derive_seed(uint64_t seed, std::string_view tag) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    uint64_t s = seed ^ h;
    return splitmix64(s);
}

class rng {
  public:
    explicit rng(uint64_t seed = 1) {
        uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    uint64_t next() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return n ? next() % n : 0; }

    // Uniform on the unit sphere (rejection from the cube, deterministic order).
    vec3 unit_vector() {
        for (;;) {
            vec3 v{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
            double n2 = norm2(v);
            if (n2 > 1e-8 && n2 <= 1.0) return v / std::sqrt(n2);
        }
    }

    // Uniform in the closed ball of radius r.
    vec3 in_ball(double r) {
        for (;;) {
            vec3 v{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
            if (norm2(v) <= 1.0) return v * r;
        }
    }

    // Standard normal, Marsaglia polar.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform(-1, 1);
            v = uniform(-1, 1);
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    // Fisher-Yates shuffle of indices [0, n), returned as a vector.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; i--) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t state_[4]{};
    double spare_ = 0;
    bool have_spare_ = false;
};

} // namespace tubelab
