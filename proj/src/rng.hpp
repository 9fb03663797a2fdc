#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "tensor.hpp"

namespace psidit {

// Named, reproducible RNG stream. Distributions are implemented by hand
// (53-bit uniforms, Box-Muller normals) so draws do not depend on the
// standard library's unspecified distribution algorithms.
class RngStream {
  public:
    RngStream(uint64_t root_seed, std::string_view name, uint64_t index = 0);

    uint64_t next_u64() { return gen_(); }
    double uniform();                        // [0,1)
    double uniform(double lo, double hi);    // [lo,hi)
    double normal();                         // N(0,1)
    int uniform_int(int n);                  // [0,n), n >= 1

    // Derive an independent substream, e.g. one per sample index.
    RngStream substream(std::string_view name, uint64_t index = 0) const;

    template <class It>
    void shuffle(It first, It last) {
        auto n = static_cast<int64_t>(last - first);
        for (int64_t i = n - 1; i > 0; --i) {
            int j = uniform_int(static_cast<int>(i + 1));
            std::swap(first[i], first[j]);
        }
    }

  private:
    RngStream() = default;
    std::mt19937_64 gen_;
    uint64_t derive_key_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

uint64_t fnv1a64(const void* data, size_t n);
uint64_t fnv1a64(std::string_view s);
uint64_t splitmix64(uint64_t x);

template <class S>
void fill_normal(TensorT<S>& t, RngStream& rng) {
    for (auto& x : t.v) x = static_cast<S>(rng.normal());
}

template <class S>
void fill_normal(TensorT<S>& t, RngStream& rng, double stddev) {
    for (auto& x : t.v) x = static_cast<S>(rng.normal() * stddev);
}

template <class S>
void fill_uniform(TensorT<S>& t, RngStream& rng, double lo, double hi) {
    for (auto& x : t.v) x = static_cast<S>(rng.uniform(lo, hi));
}

}  // namespace psidit
