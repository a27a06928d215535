#ifndef LYLAB_RNG_HPP
#define LYLAB_RNG_HPP

#include <cstdint>
#include <random>

namespace lylab {

/// Splittable counter-based stream keys: mix (experiment id, seed, cell index)
/// into one 64-bit state so every (seed, epsilon) cell gets an independent,
/// reproducible generator regardless of scheduling order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_key(std::uint64_t experiment_id, std::uint64_t seed,
                                std::uint64_t cell_index) {
    std::uint64_t k = splitmix64(experiment_id);
    k = splitmix64(k ^ seed);
    k = splitmix64(k ^ cell_index);
    return k;
}

inline std::mt19937_64 make_rng(std::uint64_t key) { return std::mt19937_64(key); }

}  // namespace lylab

#endif
