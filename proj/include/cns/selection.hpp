#pragma once

#include "cns/latency_model.hpp"
#include "cns/rtt_probe.hpp"
#include "cns/topology.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace cns {

/// Latency of a peer that has not been measured yet.
inline constexpr double kUnmeasured = std::numeric_limits<double>::infinity();

struct NeighborEntry {
    NodeId peer = 0;
    double latency_ms = kUnmeasured;

    bool measured() const noexcept { return latency_ms != kUnmeasured; }

    friend bool operator==(const NeighborEntry&, const NeighborEntry&) = default;
};

enum class RefreshMode { latest, ewma };

struct RefreshPolicy {
    RefreshMode mode = RefreshMode::latest;
    double ewma_factor = 1.0 / 8.0;  // weight of the new sample
};

/// A node's list of potential peers and their measured latencies.
///
/// Entries keep insertion order; refresh/remove are the only mutations.
class NeighborTable {
public:
    explicit NeighborTable(NodeId owner) : owner_(owner) {}

    /// All peers start unmeasured. Throws ParameterError if `peers` contains
    /// the owner or a duplicate.
    static NeighborTable init(NodeId owner, std::span<const NodeId> peers);

    NodeId owner() const noexcept { return owner_; }
    std::span<const NeighborEntry> entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const NeighborEntry* find(NodeId peer) const;

    /// Adds `peer` or updates its latency per `policy`. The first sample
    /// always replaces the unmeasured sentinel.
    void refresh(NodeId peer, double latency_ms, const RefreshPolicy& policy = {});
    void refresh(NodeId peer, const RttSample& sample, const RefreshPolicy& policy = {});

    /// Drops a lost peer. Unknown peers are ignored.
    void remove(NodeId peer);

private:
    void check_peer(NodeId peer) const;

    NodeId owner_;
    std::vector<NeighborEntry> entries_;
};

struct NeighborSet {
    NodeId owner = 0;
    std::vector<NodeId> selected;

    friend bool operator==(const NeighborSet&, const NeighborSet&) = default;
};

/// Uniform sample of min(k, size) distinct peers, measured or not.
NeighborSet select_rns(const NeighborTable& table, std::size_t k, std::uint64_t seed);

/// The min(k, size) lowest-latency peers in ascending order; ties go to the
/// smaller id and unmeasured peers come last.
NeighborSet select_cns(const NeighborTable& table, std::size_t k);

struct SelectionStats {
    double avg_ms = 0.0;
    double max_ms = 0.0;
};

/// Mean and maximum latency over the selected peers. Values are summed in
/// ascending order, so equal sets give bitwise-equal results regardless of
/// selection order. Throws ParameterError on an unmeasured or unknown peer
/// or an empty set.
SelectionStats selection_stats(const NeighborTable& table, const NeighborSet& set);

/// Table over every other node with ground-truth latencies.
NeighborTable table_from_matrix(const LatencyMatrix& matrix, NodeId owner);

/// Table over `owner`'s out-arcs, using arc weights as latencies.
NeighborTable table_from_graph(const Graph& graph, NodeId owner);

/// CSV `peer,latency_ms`; unmeasured latencies are written as `inf`.
void write_table_csv(const NeighborTable& table, std::ostream& out);

} // namespace cns
