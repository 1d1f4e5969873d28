#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace stylemt {

// Deterministic RNG wrapper. std::mt19937_64 has a standardized sequence, and
// all derived draws below avoid std::*_distribution (whose outputs are
// implementation-defined), so results are reproducible across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n) by rejection sampling.
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        uint64_t bound = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= bound);
        return x % n;
    }

    // Uniform double in [0, 1) with 53 bits of randomness.
    double real01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform double in [-a, a).
    double uniform_sym(double a) { return (2.0 * real01() - 1.0) * a; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// 64-bit FNV-1a over a byte string.
uint64_t fnv1a64(const std::string& data);

// Derives a per-stage seed from a global seed and a stage label, so changing
// one stage's draws cannot perturb another's.
uint64_t derive_seed(uint64_t seed, const std::string& label);

}  // namespace stylemt
