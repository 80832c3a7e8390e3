#pragma once

#include "cns/latency_model.hpp"
#include "cns/selection.hpp"
#include "cns/topology.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace cns {

/// How a stored connection latency becomes a per-hop delay.
enum class HopWeight {
    raw,       // the stored value is the one-way delay
    half_rtt,  // the stored value is an RTT; use half of it
};

/// Arc (u,v) for every v in u's selection, weighted from `matrix`.
/// `selections[i]` must belong to node i.
Overlay build_overlay(std::span<const NeighborSet> selections, const LatencyMatrix& matrix,
                      HopWeight hop = HopWeight::raw);

struct PropagationReport {
    NodeId source = 0;
    std::vector<std::optional<double>> arrival_ms;  // nullopt: unreachable
    double avg_arrival_ms = 0.0;                    // over reachable non-source nodes
    double max_arrival_ms = 0.0;
    std::size_t unreachable_count = 0;
};

/// Earliest arrival of a message flooded from `source` when every node
/// relays immediately to all its out-neighbors (single-source shortest
/// paths).
PropagationReport flood_arrival(const Overlay& overlay, NodeId source);

struct NetworkPropagation {
    double avg_ms = 0.0;  // mean of per-source averages
    double max_ms = 0.0;  // max of per-source maxima
    bool any_unreachable = false;
};

/// Floods from every source. Sources are independent and may be spread over
/// `threads` workers; the result does not depend on the thread count.
NetworkPropagation network_propagation_summary(const Overlay& overlay, unsigned threads = 1);

/// CSV `source,target,arrival_ms`, `unreachable` for flagged targets.
void write_propagation_csv(std::span<const PropagationReport> reports, std::ostream& out);

} // namespace cns
