#include "rng.hpp"

#include <cmath>

namespace psidit {

uint64_t fnv1a64(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

RngStream::RngStream(uint64_t root_seed, std::string_view name, uint64_t index) {
    derive_key_ = splitmix64(root_seed ^ fnv1a64(name));
    uint64_t seed = splitmix64(derive_key_ ^ splitmix64(index * 0x9e3779b97f4a7c15ull + 1));
    gen_.seed(seed);
}

RngStream RngStream::substream(std::string_view name, uint64_t index) const {
    RngStream s;
    s.derive_key_ = splitmix64(derive_key_ ^ fnv1a64(name));
    uint64_t seed = splitmix64(s.derive_key_ ^ splitmix64(index * 0x9e3779b97f4a7c15ull + 1));
    s.gen_.seed(seed);
    return s;
}

double RngStream::uniform() {
    // 53 random bits -> double in [0,1)
    return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
}

double RngStream::uniform(double lo, double hi) {
    if (hi < lo) fail(ErrorCode::invalid_arg, "uniform: hi < lo");
    return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

int RngStream::uniform_int(int n) {
    if (n < 1) fail(ErrorCode::invalid_arg, "uniform_int: n < 1");
    // rejection sampling to avoid modulo bias
    uint64_t bound = ~0ull - (~0ull % static_cast<uint64_t>(n));
    uint64_t x;
    do {
        x = gen_();
    } while (x >= bound);
    return static_cast<int>(x % static_cast<uint64_t>(n));
}

}  // namespace psidit
