#include "cns/selection.hpp"

#include "cns/csv.hpp"
#include "cns/error.hpp"
#include "cns/rng.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace cns {

NeighborTable NeighborTable::init(NodeId owner, std::span<const NodeId> peers) {
    NeighborTable table(owner);
    table.entries_.reserve(peers.size());
    for (const NodeId peer : peers) {
        table.check_peer(peer);
        if (table.find(peer)) {
            throw ParameterError("duplicate peer " + std::to_string(peer) + " in neighbor list");
        }
        table.entries_.push_back({peer, kUnmeasured});
    }
    return table;
}

const NeighborEntry* NeighborTable::find(NodeId peer) const {
    const auto it = std::find_if(entries_.begin(), entries_.end(),
                                 [peer](const NeighborEntry& e) { return e.peer == peer; });
    return it == entries_.end() ? nullptr : &*it;
}

void NeighborTable::check_peer(NodeId peer) const {
    if (peer == owner_) {
        throw ParameterError("node " + std::to_string(owner_) + " cannot be its own neighbor");
    }
}

void NeighborTable::refresh(NodeId peer, double latency_ms, const RefreshPolicy& policy) {
    check_peer(peer);
    if (!(latency_ms > 0.0) || !std::isfinite(latency_ms)) {
        throw ParameterError("latency sample must be positive and finite, got " +
                             csv::format_number(latency_ms));
    }
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [peer](const NeighborEntry& e) { return e.peer == peer; });
    if (it == entries_.end()) {
        entries_.push_back({peer, latency_ms});
        return;
    }
    if (policy.mode == RefreshMode::ewma && it->measured()) {
        it->latency_ms += (latency_ms - it->latency_ms) * policy.ewma_factor;
    } else {
        it->latency_ms = latency_ms;
    }
}

void NeighborTable::refresh(NodeId peer, const RttSample& sample, const RefreshPolicy& policy) {
    refresh(peer, sample.value_ms(), policy);
}

void NeighborTable::remove(NodeId peer) {
    check_peer(peer);
    std::erase_if(entries_, [peer](const NeighborEntry& e) { return e.peer == peer; });
}

NeighborSet select_rns(const NeighborTable& table, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw ParameterError("must select at least one neighbor");
    std::vector<NodeId> peers;
    peers.reserve(table.size());
    for (const auto& entry : table.entries()) peers.push_back(entry.peer);
    const std::size_t count = std::min(k, peers.size());
    Rng rng(seed);
    rng.partial_shuffle(std::span<NodeId>(peers), count);
    peers.resize(count);
    return {table.owner(), std::move(peers)};
}

NeighborSet select_cns(const NeighborTable& table, std::size_t k) {
    if (k < 1) throw ParameterError("must select at least one neighbor");
    std::vector<NeighborEntry> ranked(table.entries().begin(), table.entries().end());
    const std::size_t count = std::min(k, ranked.size());
    // Infinity compares greater than every finite latency.
    const auto closer = [](const NeighborEntry& a, const NeighborEntry& b) {
        if (a.latency_ms != b.latency_ms) return a.latency_ms < b.latency_ms;
        return a.peer < b.peer;
    };
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(count), ranked.end(),
                      closer);
    NeighborSet set{table.owner(), {}};
    set.selected.reserve(count);
    for (std::size_t i = 0; i < count; ++i) set.selected.push_back(ranked[i].peer);
    return set;
}

SelectionStats selection_stats(const NeighborTable& table, const NeighborSet& set) {
    if (set.selected.empty()) throw ParameterError("statistics of an empty selection are undefined");
    std::vector<double> values;
    values.reserve(set.selected.size());
    for (const NodeId peer : set.selected) {
        const auto* entry = table.find(peer);
        if (!entry) {
            throw ParameterError("selected peer " + std::to_string(peer) + " is not in node " +
                                 std::to_string(table.owner()) + "'s table");
        }
        if (!entry->measured()) {
            throw ParameterError("selected peer " + std::to_string(peer) + " has no measured latency");
        }
        values.push_back(entry->latency_ms);
    }
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (const double v : values) sum += v;
    return {sum / static_cast<double>(values.size()), values.back()};
}

NeighborTable table_from_matrix(const LatencyMatrix& matrix, NodeId owner) {
    if (owner >= matrix.node_count()) {
        throw ParameterError("node " + std::to_string(owner) + " out of range");
    }
    NeighborTable table(owner);
    for (NodeId peer = 0; peer < matrix.node_count(); ++peer) {
        if (peer != owner) table.refresh(peer, matrix.at(owner, peer));
    }
    return table;
}

NeighborTable table_from_graph(const Graph& graph, NodeId owner) {
    NeighborTable table(owner);
    for (const auto& arc : graph.out_arcs(owner)) table.refresh(arc.to, arc.weight_ms);
    return table;
}

void write_table_csv(const NeighborTable& table, std::ostream& out) {
    out << "peer,latency_ms\n";
    for (const auto& entry : table.entries()) {
        out << entry.peer << ',' << (entry.measured() ? csv::format_number(entry.latency_ms) : "inf") << '\n';
    }
}

} // namespace cns
