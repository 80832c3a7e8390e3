#include "cns/propagation.hpp"

#include "cns/csv.hpp"
#include "cns/error.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <ostream>
#include <queue>
#include <string>
#include <thread>
#include <utility>

namespace cns {

Overlay build_overlay(std::span<const NeighborSet> selections, const LatencyMatrix& matrix,
                      HopWeight hop) {
    const auto n = selections.size();
    if (n != matrix.node_count()) {
        throw ParameterError("got " + std::to_string(n) + " selections for a " +
                             std::to_string(matrix.node_count()) + "-node latency matrix");
    }
    std::vector<Arc> arcs;
    for (NodeId u = 0; u < n; ++u) {
        const auto& set = selections[u];
        if (set.owner != u) {
            throw ParameterError("selection " + std::to_string(u) + " belongs to node " +
                                 std::to_string(set.owner));
        }
        for (const NodeId v : set.selected) {
            if (v >= n) {
                throw ParameterError("node " + std::to_string(u) + " selects out-of-range node " +
                                     std::to_string(v));
            }
            const double w = matrix.at(u, v);
            arcs.push_back({u, v, hop == HopWeight::half_rtt ? w / 2.0 : w});
        }
    }
    return Overlay(n, std::move(arcs));
}

PropagationReport flood_arrival(const Overlay& overlay, NodeId source) {
    const auto n = overlay.node_count();
    if (source >= n) throw ParameterError("source " + std::to_string(source) + " out of range");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, kInf);
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
    dist[source] = 0.0;
    frontier.emplace(0.0, source);
    while (!frontier.empty()) {
        const auto [d, u] = frontier.top();
        frontier.pop();
        if (d > dist[u]) continue;
        for (const auto& arc : overlay.out_arcs(u)) {
            const double candidate = d + arc.weight_ms;
            if (candidate < dist[arc.to]) {
                dist[arc.to] = candidate;
                frontier.emplace(candidate, arc.to);
            }
        }
    }

    PropagationReport report;
    report.source = source;
    report.arrival_ms.resize(n);
    double sum = 0.0;
    std::size_t reached = 0;
    for (NodeId v = 0; v < n; ++v) {
        if (dist[v] == kInf) {
            ++report.unreachable_count;
            continue;
        }
        report.arrival_ms[v] = dist[v];
        if (v == source) continue;
        sum += dist[v];
        ++reached;
        report.max_arrival_ms = std::max(report.max_arrival_ms, dist[v]);
    }
    report.avg_arrival_ms = reached ? sum / static_cast<double>(reached) : 0.0;
    return report;
}

NetworkPropagation network_propagation_summary(const Overlay& overlay, unsigned threads) {
    const auto n = overlay.node_count();
    std::vector<PropagationReport> reports(n);
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (workers == 1) {
        for (NodeId s = 0; s < n; ++s) reports[s] = flood_arrival(overlay, s);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (NodeId s = w; s < n; s += workers) reports[s] = flood_arrival(overlay, s);
            });
        }
    }

    NetworkPropagation summary;
    double sum = 0.0;
    std::size_t sources = 0;
    for (const auto& report : reports) {
        if (report.unreachable_count > 0) summary.any_unreachable = true;
        if (report.unreachable_count + 1 == n) continue;  // nobody reached
        sum += report.avg_arrival_ms;
        ++sources;
        summary.max_ms = std::max(summary.max_ms, report.max_arrival_ms);
    }
    summary.avg_ms = sources ? sum / static_cast<double>(sources) : 0.0;
    return summary;
}

void write_propagation_csv(std::span<const PropagationReport> reports, std::ostream& out) {
    out << "source,target,arrival_ms\n";
    for (const auto& report : reports) {
        for (NodeId v = 0; v < report.arrival_ms.size(); ++v) {
            if (v == report.source) continue;
            out << report.source << ',' << v << ',';
            if (report.arrival_ms[v]) {
                out << csv::format_number(*report.arrival_ms[v]);
            } else {
                out << "unreachable";
            }
            out << '\n';
        }
    }
}

} // namespace cns
