#include "cns/latency_model.hpp"

#include "cns/csv.hpp"
#include "cns/error.hpp"
#include "cns/rng.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

namespace cns {

void LatencyParams::validate() const {
    if (!(mu_ms > 0.0) || !std::isfinite(mu_ms)) {
        throw ParameterError("latency mean must be positive, got " + csv::format_number(mu_ms));
    }
    if (!(sigma_ms > 0.0) || !std::isfinite(sigma_ms)) {
        throw ParameterError("latency standard deviation must be positive, got " +
                             csv::format_number(sigma_ms));
    }
}

double normal_pdf(double x_ms, const LatencyParams& params) {
    const double z = (x_ms - params.mu_ms) / params.sigma_ms;
    return std::exp(-0.5 * z * z) / (params.sigma_ms * std::sqrt(2.0 * std::numbers::pi));
}

LatencyMatrix::LatencyMatrix(std::size_t node_count, std::vector<double> pair_values)
    : node_count_(node_count), values_(std::move(pair_values)) {
    const std::size_t expected = node_count_ < 2 ? 0 : node_count_ * (node_count_ - 1) / 2;
    if (values_.size() != expected) {
        throw ParameterError("latency matrix for " + std::to_string(node_count_) + " nodes needs " +
                             std::to_string(expected) + " pair values, got " +
                             std::to_string(values_.size()));
    }
    for (const double value : values_) {
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw ParameterError("latencies must be positive and finite, got " + csv::format_number(value));
        }
    }
}

std::size_t LatencyMatrix::index(NodeId u, NodeId v) const {
    if (u == v) {
        throw ParameterError("latency from node " + std::to_string(u) + " to itself is undefined");
    }
    if (u >= node_count_ || v >= node_count_) {
        throw ParameterError("node pair (" + std::to_string(u) + "," + std::to_string(v) +
                             ") out of range for " + std::to_string(node_count_) + " nodes");
    }
    if (u > v) std::swap(u, v);
    // Rows 0..u-1 hold (n-1) + (n-2) + ... + (n-u) pairs.
    const std::size_t n = node_count_;
    return u * (2 * n - u - 1) / 2 + (v - u - 1);
}

double LatencyMatrix::at(NodeId u, NodeId v) const { return values_[index(u, v)]; }

LatencyMatrix sample_latency_matrix(std::size_t node_count, const LatencyParams& params,
                                    std::uint64_t seed) {
    if (node_count < 2) {
        throw ParameterError("latency matrix needs at least 2 nodes, got " + std::to_string(node_count));
    }
    params.validate();
    Rng rng(derive_seed(seed, Stream::latency));
    std::vector<double> values;
    values.reserve(node_count * (node_count - 1) / 2);
    for (std::size_t u = 0; u + 1 < node_count; ++u) {
        for (std::size_t v = u + 1; v < node_count; ++v) {
            double draw = rng.normal(params.mu_ms, params.sigma_ms);
            int redraws = 0;
            while (!(draw > 0.0)) {
                if (++redraws > kMaxRedrawsPerPair) {
                    throw GenerationError("pair (" + std::to_string(u) + "," + std::to_string(v) +
                                          ") drew no positive latency in " +
                                          std::to_string(kMaxRedrawsPerPair) + " redraws");
                }
                draw = rng.normal(params.mu_ms, params.sigma_ms);
            }
            values.push_back(draw);
        }
    }
    return LatencyMatrix(node_count, std::move(values));
}

Graph attach_weights(const Graph& graph, const LatencyMatrix& matrix) {
    if (graph.node_count() != matrix.node_count()) {
        throw ParameterError("graph has " + std::to_string(graph.node_count()) +
                             " nodes but latency matrix has " + std::to_string(matrix.node_count()));
    }
    std::vector<Arc> arcs(graph.arcs().begin(), graph.arcs().end());
    for (auto& arc : arcs) arc.weight_ms = matrix.at(arc.from, arc.to);
    return Graph(graph.node_count(), std::move(arcs));
}

void write_matrix_csv(const LatencyMatrix& matrix, std::ostream& out) {
    out << "u,v,latency_ms\n";
    const auto n = matrix.node_count();
    std::size_t i = 0;
    for (std::size_t u = 0; u + 1 < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            out << u << ',' << v << ',' << csv::format_number(matrix.pair_values()[i++]) << '\n';
        }
    }
}

LatencyMatrix read_matrix_csv(std::istream& in) {
    std::string line;
    if (!csv::next_line(in, line) || line != "u,v,latency_ms") {
        throw ParameterError("latency CSV must start with header 'u,v,latency_ms'");
    }
    struct Row {
        std::size_t u, v;
        double value;
    };
    std::vector<Row> rows;
    std::size_t node_count = 0;
    while (csv::next_line(in, line)) {
        const auto fields = csv::split(line);
        if (fields.size() != 3) throw ParameterError("malformed latency CSV row: '" + line + "'");
        Row row{csv::parse_unsigned(fields[0]), csv::parse_unsigned(fields[1]), csv::parse_double(fields[2])};
        if (row.u >= row.v) throw ParameterError("latency CSV rows need u < v: '" + line + "'");
        node_count = std::max(node_count, row.v + 1);
        rows.push_back(row);
    }
    const std::size_t pairs = node_count < 2 ? 0 : node_count * (node_count - 1) / 2;
    std::vector<double> values(pairs, 0.0);
    std::vector<bool> seen(pairs, false);
    for (const auto& row : rows) {
        const std::size_t idx = row.u * (2 * node_count - row.u - 1) / 2 + (row.v - row.u - 1);
        if (seen[idx]) {
            throw ParameterError("duplicate latency row for pair (" + std::to_string(row.u) + "," +
                                 std::to_string(row.v) + ")");
        }
        seen[idx] = true;
        values[idx] = row.value;
    }
    if (rows.size() != pairs) {
        throw ParameterError("latency CSV covers " + std::to_string(rows.size()) + " of " +
                             std::to_string(pairs) + " pairs");
    }
    return LatencyMatrix(node_count, std::move(values));
}

} // namespace cns
