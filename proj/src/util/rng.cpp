#include "stylemt/util/rng.hpp"

namespace stylemt {

uint64_t fnv1a64(const std::string& data) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t derive_seed(uint64_t seed, const std::string& label) {
    uint64_t h = fnv1a64(label);
    // splitmix64 finalizer over the combination
    uint64_t z = seed ^ h;
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace stylemt
