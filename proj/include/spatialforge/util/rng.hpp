#pragma once

#include "spatialforge/util/sha256.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace spatialforge {

/// Derives a 64-bit seed from a global seed plus any number of identity parts
/// (scene id, frame ids, template id, slot ids). Generation becomes
/// order-independent: every record owns its RNG stream.
inline std::uint64_t derive_seed(std::uint64_t global_seed,
                                 const std::vector<std::string>& parts) {
    Sha256 h;
    h.update(std::to_string(global_seed));
    for (const auto& p : parts) {
        h.update("|");
        h.update(p);
    }
    const auto d = h.digest();
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out = (out << 8) | d[i];
    return out;
}

/// Uniform integer in [0, n). Avoids std::uniform_int_distribution, whose
/// output is implementation-defined; mt19937_64 itself is fully specified.
inline std::uint64_t rng_below(std::mt19937_64& rng, std::uint64_t n) {
    return n == 0 ? 0 : rng() % n;
}

template <class T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng_below(rng, i)]);
}

/// Classic reservoir sampling; keeps at most `cap` items in input order of
/// replacement (deterministic for a fixed RNG stream).
template <class T>
std::vector<T> reservoir_sample(const std::vector<T>& items, std::size_t cap,
                                std::mt19937_64& rng) {
    if (items.size() <= cap) return items;
    std::vector<T> out(items.begin(), items.begin() + cap);
    for (std::size_t i = cap; i < items.size(); ++i) {
        const std::uint64_t j = rng_below(rng, i + 1);
        if (j < cap) out[j] = items[i];
    }
    return out;
}

} // namespace spatialforge
