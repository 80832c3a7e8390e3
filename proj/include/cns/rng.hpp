#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace cns {

/// Independent purposes that draw randomness. Each one gets its own substream
/// so that, e.g., a different RNS seed never reshuffles sampled latencies.
enum class Stream : std::uint64_t {
    topology = 0x746f706fULL,
    latency = 0x6c617465ULL,
    rns = 0x726e7373ULL,
};

/// SplitMix64 finalizer; a bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for substream `index` of `stream` under a base seed.
std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index = 0) noexcept;

/// Seedable generator with bit-exact output across platforms.
///
/// The engine is std::mt19937_64 (its output sequence is fixed by the
/// standard). The standard distributions are not, so uniform integers and
/// normal variates are produced here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). `bound` must be positive.
    std::uint64_t uniform_below(std::uint64_t bound);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    /// Normal variate (Marsaglia polar method).
    double normal(double mean, double stddev);

    /// Moves a uniform random `count`-subset of `items` to the front, in
    /// sampled order (partial Fisher-Yates).
    template <class T>
    void partial_shuffle(std::span<T> items, std::size_t count) {
        const std::size_t limit = count < items.size() ? count : items.size();
        for (std::size_t i = 0; i < limit; ++i) {
            const auto j = i + uniform_below(items.size() - i);
            using std::swap;
            swap(items[i], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace cns
