#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace penlik {

// Philox4x64-10 counter-based generator (Salmon et al., SC'11).
//
// A stream is identified by a 128-bit key; the 256-bit counter is advanced
// once per block of four outputs. Streams built from distinct (seed, stream)
// pairs are statistically independent, which is what lets Monte Carlo
// replications run in any order and still reproduce bit-for-bit.
class Philox {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    Philox(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // The raw bijection; exposed for known-answer tests.
    static Block encrypt(Block counter, Key key);

    // Derive an independent child stream, e.g. one per fitting restart.
    [[nodiscard]] Philox split(std::uint64_t tag) const;

private:
    Key key_;
    Block counter_{};
    Block buffer_{};
    int position_ = 4;
};

// Uniform double in [0, 1) from the top 53 bits.
double uniform01(Philox& rng);
double uniform(Philox& rng, double lo, double hi);
bool bernoulli(Philox& rng, double p);
// Inverse-CDF draw from an (unnormalised, nonnegative) weight vector.
std::size_t categorical(Philox& rng, std::span<const double> weights);
std::size_t uniform_index(Philox& rng, std::size_t size);

} // namespace penlik
