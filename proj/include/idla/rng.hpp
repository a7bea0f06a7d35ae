// Random number utilities: seed derivation, a keyed counter-based generator
// for re-derivable per-site instruction streams, and a buffered-bit sequential
// generator for the hot simulation loops.
//
// Two kinds of streams are used throughout:
//   * Rng        — sequential stream (mt19937_64 core) for plain walkers,
//                  one independently seeded instance per replica.
//   * KeyedPrf   — stateless keyed mixer; value at (a, b, c) is a pure
//                  function of (seed, a, b, c).  Backs instruction stacks and
//                  any randomness that two coupled processes must share.

#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <vector>

namespace idla {

// SplitMix64 finalizer; good avalanche, standard constants.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derive an independent stream seed from a master seed and up to four tag
// words (replica index, purpose id, ...).  Chained finalizer applications.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t t0 = 0,
                                    std::uint64_t t1 = 0, std::uint64_t t2 = 0,
                                    std::uint64_t t3 = 0) {
    std::uint64_t h = mix64(master ^ 0x6a09e667f3bcc909ull);
    h = mix64(h ^ t0);
    h = mix64(h ^ t1);
    h = mix64(h ^ t2);
    h = mix64(h ^ t3);
    return h;
}

// Purpose tags keeping derived streams disjoint across uses of one master seed.
enum class StreamPurpose : std::uint64_t {
    walker = 1,
    release = 2,
    stacks = 3,
    drops = 4,
    ff_resample = 5,
    coupling = 6,
    glue = 7,
    state_capture = 8,
};

constexpr std::uint64_t purpose_tag(StreamPurpose p) {
    return 0x9d2c5680u ^ (static_cast<std::uint64_t>(p) << 32);
}

// Stateless keyed generator: 64-bit output as a pure function of key and a
// three-word counter.  Random access, O(1) memory, reproducible.
class KeyedPrf {
  public:
    explicit KeyedPrf(std::uint64_t seed) : k_(mix64(seed ^ 0x3c6ef372fe94f82bull)) {}

    std::uint64_t operator()(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
        std::uint64_t h = mix64(k_ ^ a);
        h = mix64(h ^ (b + 0x452821e638d01377ull));
        h = mix64(h ^ (c + 0x13198a2e03707344ull));
        return h;
    }

    std::uint64_t key() const { return k_; }

  private:
    std::uint64_t k_;
};

// Sequential generator with a bit buffer: fair coins and Geometric(1/2)
// variables cost ~1 amortized bit instead of a full engine draw.  The
// vertical-skeleton loops consume billions of coins, so this matters.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t u64() { return eng_(); }

    // Uniform double in [0,1).
    double unit() { return (u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), n >= 1.  Lemire multiply-shift; the modulo
    // bias of the plain variant is below 2^-32 for n <= 2^32, invisible at
    // any sample size used here.
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>((static_cast<std::uint64_t>(static_cast<std::uint32_t>(u64())) * n) >> 32);
    }

    // Fair coin.
    bool bit() {
        if (nbits_ == 0) {
            buf_ = u64();
            nbits_ = 64;
        }
        bool b = buf_ & 1;
        buf_ >>= 1;
        --nbits_;
        return b;
    }

    // Geometric with P(g = j) = 2^-(j+1), j >= 0: number of consecutive
    // 1-bits before the first 0-bit.
    std::uint64_t geometric_half() {
        std::uint64_t g = 0;
        for (;;) {
            if (nbits_ == 0) {
                buf_ = u64();
                nbits_ = 64;
            }
            int ones = std::countr_one(buf_);
            if (ones < nbits_) {
                g += static_cast<std::uint64_t>(ones);
                buf_ >>= (ones + 1);
                nbits_ -= ones + 1;
                return g;
            }
            g += static_cast<std::uint64_t>(nbits_);
            nbits_ = 0;
        }
    }

  private:
    std::mt19937_64 eng_;
    std::uint64_t buf_ = 0;
    int nbits_ = 0;
};

// Sampler for a fixed discrete distribution via its CDF (binary search).
// Small supports only (base-graph vertices), so no alias table needed.
class DiscreteSampler {
  public:
    DiscreteSampler() = default;
    explicit DiscreteSampler(const std::vector<double>& weights);

    int sample(Rng& rng) const { return sample_unit(rng.unit()); }
    // Shared-key sampling: map a uniform u64 to the same outcome on both
    // sides of a coupling.
    int sample_word(std::uint64_t word) const {
        return sample_unit((word >> 11) * 0x1.0p-53);
    }
    int sample_unit(double u) const;

    const std::vector<double>& cdf() const { return cdf_; }

  private:
    std::vector<double> cdf_;
};

}  // namespace idla
