#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ecolab {

/// Deterministic random stream. Wraps std::mt19937_64 (whose output sequence
/// the standard pins down exactly) and derives doubles and bounded integers
/// by hand, so identical seeds give byte-identical results on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform in [0, n), unbiased via rejection.
    int uniform_int(int n) {
        const std::uint64_t bound = ~0ull - ~0ull % static_cast<std::uint64_t>(n);
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= bound);
        return static_cast<int>(r % static_cast<std::uint64_t>(n));
    }

  private:
    std::mt19937_64 engine_;
};

/// SplitMix64 step; used to derive per-(seed, generation) substream seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Multinomial draw: `n` samples from `probs`, returned as counts.
std::vector<long long> multinomial_counts(Rng& rng, long long n,
                                          std::span<const double> probs);

}  // namespace ecolab
