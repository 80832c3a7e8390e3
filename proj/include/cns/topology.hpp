#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace cns {

/// Dense node index, 0..n-1.
using NodeId = std::uint32_t;

struct Arc {
    NodeId from = 0;
    NodeId to = 0;
    double weight_ms = 0.0;

    friend bool operator==(const Arc&, const Arc&) = default;
};

/// Directed, weighted overlay graph. Immutable once built.
///
/// Arcs are kept sorted by (from, to); there are no self-arcs and no
/// duplicate (from, to) pairs.
class Graph {
public:
    Graph() = default;

    /// Validates and sorts `arcs`. Throws ParameterError on self-arcs,
    /// duplicates, out-of-range ids or negative weights.
    Graph(std::size_t node_count, std::vector<Arc> arcs);

    std::size_t node_count() const noexcept { return node_count_; }
    std::span<const Arc> arcs() const noexcept { return arcs_; }

    /// Arcs leaving `node`, sorted by target.
    std::span<const Arc> out_arcs(NodeId node) const;
    std::size_t out_degree(NodeId node) const { return out_arcs(node).size(); }

    std::optional<double> weight(NodeId from, NodeId to) const;

    /// True when every arc (u,v,w) has a reverse arc (v,u,w).
    bool is_symmetric() const;

    friend bool operator==(const Graph&, const Graph&) = default;

private:
    std::size_t node_count_ = 0;
    std::vector<Arc> arcs_;
    std::vector<std::size_t> offsets_;  // CSR row starts, size node_count_ + 1
};

/// Directed overlay built from per-node neighbor selections.
using Overlay = Graph;

struct DegreeSummary {
    std::size_t min_out = 0;
    std::size_t max_out = 0;
    double mean_out = 0.0;
    std::vector<std::size_t> per_node;
};

inline constexpr int kMaxGenerationRetries = 100;

/// Random symmetric graph where every node picks `degree` distinct partners
/// uniformly; each picked pair becomes two arcs of weight 0. Re-draws from a
/// derived substream until the result is weakly connected, giving up with
/// GenerationError after `max_retries` re-draws.
Graph generate_random_graph(std::size_t node_count, std::size_t degree, std::uint64_t seed,
                            int max_retries = kMaxGenerationRetries);

/// The ten-node network of the worked example: 12 arcs, latencies in ms.
Graph table1_fixture();

bool is_weakly_connected(const Graph& graph);

DegreeSummary degree_stats(const Graph& graph);

/// CSV with header `from,to,weight_ms`.
void write_graph_csv(const Graph& graph, std::ostream& out);

/// Node count is inferred as max id + 1.
Graph read_graph_csv(std::istream& in);

} // namespace cns
