#include "cns/topology.hpp"

#include "cns/csv.hpp"
#include "cns/error.hpp"
#include "cns/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <utility>

namespace cns {

Graph::Graph(std::size_t node_count, std::vector<Arc> arcs)
    : node_count_(node_count), arcs_(std::move(arcs)) {
    for (const auto& arc : arcs_) {
        if (arc.from >= node_count_ || arc.to >= node_count_) {
            throw ParameterError("arc (" + std::to_string(arc.from) + "," + std::to_string(arc.to) +
                                 ") references a node outside 0.." +
                                 std::to_string(node_count_ == 0 ? 0 : node_count_ - 1));
        }
        if (arc.from == arc.to) {
            throw ParameterError("self-arc on node " + std::to_string(arc.from));
        }
        if (!(arc.weight_ms >= 0.0) || !std::isfinite(arc.weight_ms)) {
            throw ParameterError("arc (" + std::to_string(arc.from) + "," + std::to_string(arc.to) +
                                 ") has invalid weight");
        }
    }
    std::sort(arcs_.begin(), arcs_.end(), [](const Arc& a, const Arc& b) {
        return std::pair(a.from, a.to) < std::pair(b.from, b.to);
    });
    const auto dup = std::adjacent_find(arcs_.begin(), arcs_.end(), [](const Arc& a, const Arc& b) {
        return a.from == b.from && a.to == b.to;
    });
    if (dup != arcs_.end()) {
        throw ParameterError("duplicate arc (" + std::to_string(dup->from) + "," +
                             std::to_string(dup->to) + ")");
    }

    offsets_.assign(node_count_ + 1, 0);
    for (const auto& arc : arcs_) ++offsets_[arc.from + 1];
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

std::span<const Arc> Graph::out_arcs(NodeId node) const {
    if (node >= node_count_) {
        throw ParameterError("node " + std::to_string(node) + " out of range");
    }
    return std::span<const Arc>(arcs_).subspan(offsets_[node], offsets_[node + 1] - offsets_[node]);
}

std::optional<double> Graph::weight(NodeId from, NodeId to) const {
    const auto row = out_arcs(from);
    const auto it = std::lower_bound(row.begin(), row.end(), to,
                                     [](const Arc& a, NodeId target) { return a.to < target; });
    if (it == row.end() || it->to != to) return std::nullopt;
    return it->weight_ms;
}

bool Graph::is_symmetric() const {
    return std::all_of(arcs_.begin(), arcs_.end(), [this](const Arc& a) {
        const auto back = weight(a.to, a.from);
        return back && *back == a.weight_ms;
    });
}

namespace {

Graph draw_symmetric_graph(std::size_t n, std::size_t degree, std::uint64_t stream_seed) {
    Rng rng(stream_seed);
    std::set<std::pair<NodeId, NodeId>> edges;
    std::vector<NodeId> others;
    others.reserve(n - 1);
    for (NodeId u = 0; u < n; ++u) {
        others.clear();
        for (NodeId v = 0; v < n; ++v) {
            if (v != u) others.push_back(v);
        }
        rng.partial_shuffle(std::span<NodeId>(others), degree);
        for (std::size_t i = 0; i < degree; ++i) {
            const NodeId v = others[i];
            edges.emplace(std::min(u, v), std::max(u, v));
        }
    }
    std::vector<Arc> arcs;
    arcs.reserve(edges.size() * 2);
    for (const auto& [a, b] : edges) {
        arcs.push_back({a, b, 0.0});
        arcs.push_back({b, a, 0.0});
    }
    return Graph(n, std::move(arcs));
}

} // namespace

Graph generate_random_graph(std::size_t node_count, std::size_t degree, std::uint64_t seed,
                            int max_retries) {
    if (node_count < 2) {
        throw ParameterError("random graph needs at least 2 nodes, got " + std::to_string(node_count));
    }
    if (degree < 1 || degree > node_count - 1) {
        throw ParameterError("degree " + std::to_string(degree) + " outside 1.." +
                             std::to_string(node_count - 1));
    }
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        auto graph = draw_symmetric_graph(node_count, degree,
                                          derive_seed(seed, Stream::topology, static_cast<std::uint64_t>(attempt)));
        if (is_weakly_connected(graph)) return graph;
    }
    throw GenerationError("no weakly connected graph for n=" + std::to_string(node_count) +
                          ", degree=" + std::to_string(degree) + " after " +
                          std::to_string(max_retries) + " retries");
}

Graph table1_fixture() {
    return Graph(10, {
                         {0, 6, 1431}, {1, 5, 1252}, {2, 4, 1258}, {3, 4, 948},
                         {4, 2, 1258}, {4, 3, 948},  {5, 1, 1252}, {5, 8, 1471},
                         {6, 0, 1431}, {7, 9, 1445}, {8, 5, 1471}, {9, 7, 1445},
                     });
}

bool is_weakly_connected(const Graph& graph) {
    const auto n = graph.node_count();
    if (n <= 1) return true;

    std::vector<NodeId> parent(n);
    std::iota(parent.begin(), parent.end(), NodeId{0});
    auto find = [&parent](NodeId x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::size_t components = n;
    for (const auto& arc : graph.arcs()) {
        const auto a = find(arc.from);
        const auto b = find(arc.to);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    return components == 1;
}

DegreeSummary degree_stats(const Graph& graph) {
    DegreeSummary summary;
    const auto n = graph.node_count();
    summary.per_node.resize(n);
    for (NodeId u = 0; u < n; ++u) summary.per_node[u] = graph.out_degree(u);
    if (n == 0) return summary;
    const auto [lo, hi] = std::minmax_element(summary.per_node.begin(), summary.per_node.end());
    summary.min_out = *lo;
    summary.max_out = *hi;
    summary.mean_out = static_cast<double>(graph.arcs().size()) / static_cast<double>(n);
    return summary;
}

void write_graph_csv(const Graph& graph, std::ostream& out) {
    out << "from,to,weight_ms\n";
    for (const auto& arc : graph.arcs()) {
        out << arc.from << ',' << arc.to << ',' << csv::format_number(arc.weight_ms) << '\n';
    }
}

Graph read_graph_csv(std::istream& in) {
    std::string line;
    if (!csv::next_line(in, line) || line != "from,to,weight_ms") {
        throw ParameterError("graph CSV must start with header 'from,to,weight_ms'");
    }
    std::vector<Arc> arcs;
    std::size_t node_count = 0;
    while (csv::next_line(in, line)) {
        const auto fields = csv::split(line);
        if (fields.size() != 3) throw ParameterError("malformed graph CSV row: '" + line + "'");
        Arc arc{static_cast<NodeId>(csv::parse_unsigned(fields[0])),
                static_cast<NodeId>(csv::parse_unsigned(fields[1])), csv::parse_double(fields[2])};
        node_count = std::max<std::size_t>(node_count, std::max(arc.from, arc.to) + std::size_t{1});
        arcs.push_back(arc);
    }
    return Graph(node_count, std::move(arcs));
}

} // namespace cns
