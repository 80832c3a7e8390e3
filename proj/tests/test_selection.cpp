#include <doctest.h>

#include "cns/error.hpp"
#include "cns/rng.hpp"
#include "cns/selection.hpp"

#include <algorithm>
#include <set>
#include <sstream>

using namespace cns;

namespace {

NeighborTable table_of(NodeId owner, std::initializer_list<std::pair<NodeId, double>> entries) {
    NeighborTable t(owner);
    for (const auto& [peer, ms] : entries) t.refresh(peer, ms);
    return t;
}

std::set<NodeId> as_set(const NeighborSet& s) { return {s.selected.begin(), s.selected.end()}; }

} // namespace

TEST_CASE("init_table") {
    const std::vector<NodeId> peers{1, 2, 3};
    const auto t = NeighborTable::init(0, peers);
    CHECK(t.size() == 3);
    for (const auto& e : t.entries()) CHECK_FALSE(e.measured());
    CHECK(NeighborTable::init(0, {}).size() == 0);

    const std::vector<NodeId> with_self{0, 1};
    CHECK_THROWS_AS(NeighborTable::init(0, with_self), ParameterError);
    const std::vector<NodeId> dup{1, 1};
    CHECK_THROWS_AS(NeighborTable::init(0, dup), ParameterError);
}

TEST_CASE("refresh") {
    const std::vector<NodeId> peers{1, 2};
    auto t = NeighborTable::init(0, peers);
    t.refresh(1, 1200.0);
    CHECK(t.find(1)->latency_ms == 1200.0);

    const RefreshPolicy ewma{RefreshMode::ewma, 1.0 / 8.0};
    t.refresh(2, 1000.0, ewma);  // first sample replaces the sentinel
    CHECK(t.find(2)->latency_ms == 1000.0);
    t.refresh(2, 2000.0, ewma);
    CHECK(t.find(2)->latency_ms == 1125.0);
    t.refresh(2, 700.0);
    CHECK(t.find(2)->latency_ms == 700.0);

    t.refresh(5, RttSample{250000, 3, ProbeSide::client});
    CHECK(t.find(5)->latency_ms == 250.0);

    t.remove(9);
    CHECK(t.size() == 3);
    t.remove(1);
    CHECK(t.size() == 2);
    CHECK(t.find(1) == nullptr);

    CHECK_THROWS_AS(t.refresh(0, 10.0), ParameterError);
    CHECK_THROWS_AS(t.remove(0), ParameterError);
    CHECK_THROWS_AS(t.refresh(3, 0.0), ParameterError);
    CHECK_THROWS_AS(t.refresh(3, kUnmeasured), ParameterError);
}

TEST_CASE("select_cns examples") {
    const auto node4 = table_from_graph(table1_fixture(), 4);
    CHECK(select_cns(node4, 1).selected == std::vector<NodeId>{3});
    CHECK(select_cns(table_of(0, {{1, 500}, {2, 300}, {3, 700}}), 2).selected == std::vector<NodeId>{2, 1});
    CHECK(select_cns(table_of(0, {{1, 500}, {2, 500}}), 1).selected == std::vector<NodeId>{1});
    CHECK(select_cns(table_of(0, {{2, 500}, {1, 500}}), 1).selected == std::vector<NodeId>{1});
}

TEST_CASE("select_cns ranks unmeasured peers last") {
    const std::vector<NodeId> peers{5, 1, 3};
    auto t = NeighborTable::init(0, peers);
    t.refresh(3, 900.0);
    CHECK(select_cns(t, 1).selected == std::vector<NodeId>{3});
    CHECK(select_cns(t, 3).selected == std::vector<NodeId>{3, 1, 5});
    CHECK(select_cns(t, 10).selected.size() == 3);
}

TEST_CASE("select_rns basics") {
    const auto t = table_of(0, {{1, 5}, {2, 6}, {3, 7}});
    CHECK(as_set(select_rns(t, 3, 1)) == std::set<NodeId>{1, 2, 3});
    CHECK(select_rns(NeighborTable(0), 4, 1).selected.empty());
    CHECK(select_rns(t, 2, 9) == select_rns(t, 2, 9));
    CHECK_THROWS_AS(select_rns(t, 0, 1), ParameterError);
    CHECK_THROWS_AS(select_cns(t, 0), ParameterError);

    // RNS may pick unmeasured peers.
    const std::vector<NodeId> peers{1, 2};
    CHECK(select_rns(NeighborTable::init(0, peers), 2, 3).selected.size() == 2);
}

TEST_CASE("select_rns is uniform over peers") {
    std::vector<NodeId> peers;
    for (NodeId p = 1; p < 40; ++p) peers.push_back(p);
    auto t = NeighborTable::init(0, peers);
    std::vector<int> hits(40, 0);
    constexpr int kTrials = 20000;
    std::set<std::vector<NodeId>> distinct;
    for (int s = 0; s < kTrials; ++s) {
        const auto set = select_rns(t, 5, derive_seed(s, Stream::rns));
        CHECK(as_set(set).size() == 5);
        if (s < 20) distinct.insert(set.selected);
        for (const auto p : set.selected) ++hits[p];
    }
    CHECK(distinct.size() > 1);
    for (NodeId p = 1; p < 40; ++p) {
        CHECK(std::abs(static_cast<double>(hits[p]) / kTrials - 5.0 / 39.0) < 0.02);
    }
}

TEST_CASE("selection_stats") {
    const auto node4 = table_from_graph(table1_fixture(), 4);
    const auto s = selection_stats(node4, NeighborSet{4, {3, 2}});
    CHECK(s.avg_ms == 1103.0);
    CHECK(s.max_ms == 1258.0);
    const auto one = selection_stats(table_of(0, {{7, 500}}), NeighborSet{0, {7}});
    CHECK(one.avg_ms == 500.0);
    CHECK(one.max_ms == 500.0);

    const std::vector<NodeId> peers{1, 2};
    CHECK_THROWS_AS(selection_stats(NeighborTable::init(0, peers), NeighborSet{0, {1}}), ParameterError);
    CHECK_THROWS_AS(selection_stats(node4, NeighborSet{4, {9}}), ParameterError);
    CHECK_THROWS_AS(selection_stats(node4, NeighborSet{4, {}}), ParameterError);
}

TEST_CASE("stats do not depend on selection order") {
    const auto t = table_of(0, {{1, 0.1}, {2, 0.2}, {3, 0.3}, {4, 1e-9}});
    const auto a = selection_stats(t, NeighborSet{0, {1, 2, 3, 4}});
    const auto b = selection_stats(t, NeighborSet{0, {4, 3, 2, 1}});
    CHECK(a.avg_ms == b.avg_ms);
    CHECK(a.max_ms == b.max_ms);
}

TEST_CASE("CNS matches the best subset and beats every RNS draw on small tables") {
    // Brute force over all k-subsets of tables with up to 7 peers.
    Rng rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t size = 1 + rng.uniform_below(7);
        NeighborTable t(0);
        for (NodeId p = 1; p <= size; ++p) t.refresh(p, static_cast<double>(1 + rng.uniform_below(3000)));
        for (std::size_t k = 1; k <= 3; ++k) {
            const std::size_t m = std::min(k, size);
            double best_avg = 1e300, best_max = 1e300;
            for (unsigned mask = 0; mask < (1u << size); ++mask) {
                if (static_cast<std::size_t>(__builtin_popcount(mask)) != m) continue;
                double sum = 0.0, mx = 0.0;
                for (std::size_t i = 0; i < size; ++i) {
                    if (mask & (1u << i)) {
                        const double v = t.entries()[i].latency_ms;
                        sum += v;
                        mx = std::max(mx, v);
                    }
                }
                best_avg = std::min(best_avg, sum / static_cast<double>(m));
                best_max = std::min(best_max, mx);
            }
            const auto cns = selection_stats(t, select_cns(t, k));
            CHECK(cns.avg_ms == best_avg);
            CHECK(cns.max_ms == best_max);
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                const auto rns = selection_stats(t, select_rns(t, k, seed));
                CHECK(cns.avg_ms <= rns.avg_ms);
                CHECK(cns.max_ms <= rns.max_ms);
            }
        }
    }
}

TEST_CASE("k at or above table size makes both methods pick everything") {
    const auto t = table_from_matrix(sample_latency_matrix(12, LatencyParams{}, 3), 4);
    for (std::size_t k : {11, 12, 50}) {
        CHECK(as_set(select_cns(t, k)) == as_set(select_rns(t, k, k)));
        const auto a = selection_stats(t, select_cns(t, k));
        const auto b = selection_stats(t, select_rns(t, k, 77));
        CHECK(a.avg_ms == b.avg_ms);
        CHECK(a.max_ms == b.max_ms);
    }
}

TEST_CASE("CNS output ignores insertion order of tied entries") {
    std::vector<std::pair<NodeId, double>> entries{{1, 300}, {2, 300}, {3, 100}, {4, 300}, {5, 900}};
    std::vector<NodeId> first;
    Rng rng(4);
    for (int round = 0; round < 50; ++round) {
        rng.partial_shuffle(std::span(entries), entries.size());
        NeighborTable t(0);
        for (const auto& [p, ms] : entries) t.refresh(p, ms);
        const auto sel = select_cns(t, 3).selected;
        if (round == 0) first = sel;
        CHECK(sel == first);
    }
    CHECK(first == std::vector<NodeId>{3, 1, 2});
}

TEST_CASE("selection does not modify the table") {
    const auto t = table_of(0, {{1, 5}, {2, 6}, {3, 7}});
    const std::vector<NeighborEntry> before(t.entries().begin(), t.entries().end());
    select_cns(t, 2);
    select_rns(t, 2, 4);
    CHECK(std::equal(before.begin(), before.end(), t.entries().begin(), t.entries().end()));
}

TEST_CASE("table CSV uses inf for unmeasured peers") {
    const std::vector<NodeId> peers{2, 3};
    auto t = NeighborTable::init(1, peers);
    t.refresh(3, 12.5);
    std::ostringstream out;
    write_table_csv(t, out);
    CHECK(out.str() == "peer,latency_ms\n2,inf\n3,12.5\n");
}
