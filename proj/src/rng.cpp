#include "penlik/rng.hpp"

#include <cmath>
#include <numeric>

#include "penlik/error.hpp"

namespace penlik {
namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo)
{
    const unsigned __int128 product = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(product >> 64);
    lo = static_cast<std::uint64_t>(product);
}

inline std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

Philox::Block Philox::encrypt(Block ctr, Key key)
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

Philox::result_type Philox::operator()()
{
    if (position_ == 4) {
        for (auto& word : counter_) {
            if (++word != 0) break;
        }
        buffer_ = encrypt(counter_, key_);
        position_ = 0;
    }
    return buffer_[position_++];
}

Philox Philox::split(std::uint64_t tag) const
{
    return Philox(splitmix(key_[0] ^ splitmix(tag)), splitmix(key_[1] + 0x632BE59BD9B4E019ULL * (tag + 1)));
}

double uniform01(Philox& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(Philox& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

bool bernoulli(Philox& rng, double p)
{
    return uniform01(rng) < p;
}

std::size_t categorical(Philox& rng, std::span<const double> weights)
{
    if (weights.empty()) throw InvalidArgument("categorical: empty weight vector");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total)) throw InvalidArgument("categorical: weights must have positive finite sum");
    const double target = uniform01(rng) * total;
    double cumulative = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        cumulative += weights[k];
        if (target < cumulative) return k;
    }
    // Rounding can leave target == total; return the last positive weight.
    for (std::size_t k = weights.size(); k-- > 0;) {
        if (weights[k] > 0.0) return k;
    }
    return weights.size() - 1;
}

std::size_t uniform_index(Philox& rng, std::size_t size)
{
    if (size == 0) throw InvalidArgument("uniform_index: empty range");
    const auto idx = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(size));
    return idx < size ? idx : size - 1;
}

} // namespace penlik
