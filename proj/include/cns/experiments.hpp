#pragma once

#include "cns/latency_model.hpp"
#include "cns/topology.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace cns {

/// Where each node's candidate peers come from.
enum class CandidateMode {
    full_mesh,  // every other node, with ground-truth latency
    graph,      // neighbors in a generated random graph
};

struct Exp1Config {
    std::size_t n = 40;
    std::size_t k = 5;
    LatencyParams latency;
    std::vector<std::uint64_t> seeds;
    /// Perturbs only the RNS substreams.
    std::uint64_t rns_salt = 0;
    CandidateMode candidates = CandidateMode::full_mesh;
    /// Degree of the candidate graph in graph mode; 0 means use k.
    std::size_t graph_degree = 0;
    /// Also flood over the RNS and CNS overlays.
    bool propagation = false;
    unsigned threads = 1;

    void validate() const;
};

struct Exp2Config {
    std::size_t n = 100;
    std::vector<std::size_t> degrees;
    LatencyParams latency;
    std::vector<std::uint64_t> seeds;
    std::uint64_t rns_salt = 0;
    CandidateMode candidates = CandidateMode::full_mesh;
    bool propagation = false;
    unsigned threads = 1;

    void validate() const;
};

/// One node's neighbor-latency statistics under both methods.
struct NodeStats {
    std::uint64_t seed = 0;
    NodeId node = 0;
    double avg_rns_ms = 0.0;
    double avg_cns_ms = 0.0;
    double max_rns_ms = 0.0;
    double max_cns_ms = 0.0;
};

/// Flood-propagation comparison averaged over seeds.
struct PropagationComparison {
    double avg_rns_ms = 0.0;
    double avg_cns_ms = 0.0;
    double max_rns_ms = 0.0;
    double max_cns_ms = 0.0;
    std::size_t partitioned_rns = 0;  // seeds whose overlay left some pair unreachable
    std::size_t partitioned_cns = 0;
};

/// Grand mean over seeds with its standard error (0 for a single seed).
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

struct Exp1Result {
    Exp1Config config;
    std::vector<NodeStats> per_node;  // seed-major, then node
    Estimate avg_rns, avg_cns, max_rns, max_cns;
    double pct_decrease_avg = 0.0;
    double pct_decrease_max = 0.0;
    std::optional<PropagationComparison> propagation;
};

struct DegreePoint {
    std::size_t degree = 0;
    Estimate net_avg_rns, net_avg_cns, net_maxavg_rns, net_maxavg_cns;
    double pct_avg = 0.0;
    double pct_max = 0.0;
    std::optional<PropagationComparison> propagation;
};

struct Exp2Result {
    Exp2Config config;
    std::vector<DegreePoint> points;  // in config.degrees order
};

/// 100 * (rns - cns) / rns. Throws ParameterError unless rns > 0.
double pct_decrease(double rns_ms, double cns_ms);

/// RNS seed for one node's selection of `k` peers in run `seed`.
std::uint64_t node_rns_seed(std::uint64_t seed, std::uint64_t salt, std::size_t k, NodeId node);

Exp1Result run_experiment1(const Exp1Config& config);
Exp2Result run_experiment2(const Exp2Config& config);

/// Writes exp1_per_node.csv, exp1_summary.csv and plot_results.py into
/// `dir` (created if missing).
void write_results(const Exp1Result& result, const std::filesystem::path& dir);

/// Writes exp2_by_degree.csv (plus exp2_propagation.csv when present) and
/// plot_results.py into `dir`.
void write_results(const Exp2Result& result, const std::filesystem::path& dir);

} // namespace cns
