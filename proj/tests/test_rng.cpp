#include <doctest.h>

#include "cns/rng.hpp"

#include <array>
#include <numeric>
#include <set>
#include <vector>

using namespace cns;

TEST_CASE("mt19937_64 engine matches the standard's reference value") {
    // The 10000th output of a default-seeded mt19937_64 is fixed by the standard.
    std::mt19937_64 reference;
    reference.discard(9999);
    CHECK(reference() == 9981545732273789042ULL);
}

TEST_CASE("derived substreams differ by stream and index") {
    std::set<std::uint64_t> seen;
    for (const auto stream : {Stream::topology, Stream::latency, Stream::rns}) {
        for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(7, stream, i));
    }
    CHECK(seen.size() == 150);
    CHECK(derive_seed(7, Stream::rns, 3) == derive_seed(7, Stream::rns, 3));
}

TEST_CASE("uniform_below covers the range evenly") {
    Rng rng(11);
    std::array<int, 7> counts{};
    constexpr int kDraws = 70000;
    for (int i = 0; i < kDraws; ++i) ++counts[rng.uniform_below(7)];
    for (const int c : counts) CHECK(std::abs(c - kDraws / 7) < 400);  // ~4.3 sd
}

TEST_CASE("normal variates have the requested moments") {
    Rng rng(3);
    constexpr int kDraws = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        const double x = rng.normal(10.0, 2.0);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / kDraws;
    const double var = sq / kDraws - mean * mean;
    CHECK(mean == doctest::Approx(10.0).epsilon(0.002));
    CHECK(var == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("partial_shuffle yields a distinct prefix") {
    Rng rng(5);
    std::vector<int> items(20);
    std::iota(items.begin(), items.end(), 0);
    rng.partial_shuffle(std::span<int>(items), 8);
    const std::set<int> prefix(items.begin(), items.begin() + 8);
    CHECK(prefix.size() == 8);
    const std::set<int> all(items.begin(), items.end());
    CHECK(all.size() == 20);
}
