#pragma once

#include "cns/topology.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace cns {

/// Normal latency distribution, in milliseconds.
struct LatencyParams {
    double mu_ms = 2000.0;
    double sigma_ms = 500.0;

    /// Throws ParameterError unless mu > 0 and sigma > 0.
    void validate() const;
};

/// Normal probability density at `x_ms` (units 1/ms).
double normal_pdf(double x_ms, const LatencyParams& params);

/// Symmetric pairwise latencies for n nodes. Only the strict upper triangle
/// is stored; every stored value is positive and finite.
class LatencyMatrix {
public:
    LatencyMatrix() = default;

    /// `pair_values` in pair-lexicographic order (0,1),(0,2),...,(n-2,n-1).
    LatencyMatrix(std::size_t node_count, std::vector<double> pair_values);

    std::size_t node_count() const noexcept { return node_count_; }
    std::size_t pair_count() const noexcept { return values_.size(); }

    /// Throws ParameterError when u == v or either id is out of range.
    double at(NodeId u, NodeId v) const;

    const std::vector<double>& pair_values() const noexcept { return values_; }

    friend bool operator==(const LatencyMatrix&, const LatencyMatrix&) = default;

private:
    std::size_t index(NodeId u, NodeId v) const;

    std::size_t node_count_ = 0;
    std::vector<double> values_;
};

inline constexpr int kMaxRedrawsPerPair = 1000;

/// One draw per unordered pair in pair-lexicographic order; non-positive
/// draws are rejected and re-drawn.
LatencyMatrix sample_latency_matrix(std::size_t node_count, const LatencyParams& params,
                                    std::uint64_t seed);

inline double latency(const LatencyMatrix& matrix, NodeId u, NodeId v) { return matrix.at(u, v); }

/// Copy of `graph` with every arc weighted from `matrix`.
Graph attach_weights(const Graph& graph, const LatencyMatrix& matrix);

/// CSV with header `u,v,latency_ms`, one row per pair u < v.
void write_matrix_csv(const LatencyMatrix& matrix, std::ostream& out);
LatencyMatrix read_matrix_csv(std::istream& in);

} // namespace cns
