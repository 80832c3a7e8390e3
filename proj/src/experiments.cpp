#include "cns/experiments.hpp"

#include "cns/csv.hpp"
#include "cns/error.hpp"
#include "cns/propagation.hpp"
#include "cns/rng.hpp"
#include "cns/selection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <thread>

namespace cns {

namespace {

void check_common(std::size_t n, const LatencyParams& latency, const std::vector<std::uint64_t>& seeds) {
    if (n < 2) throw ParameterError("experiments need at least 2 nodes, got " + std::to_string(n));
    latency.validate();
    if (seeds.empty()) throw ParameterError("at least one seed is required");
}

/// Runs `job(i)` for i in [0, count) on up to `threads` workers.
void for_each_index(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) job(i);
        });
    }
}

std::vector<NeighborTable> full_mesh_tables(const LatencyMatrix& matrix) {
    std::vector<NeighborTable> tables;
    tables.reserve(matrix.node_count());
    for (NodeId u = 0; u < matrix.node_count(); ++u) tables.push_back(table_from_matrix(matrix, u));
    return tables;
}

std::vector<NeighborTable> graph_tables(const LatencyMatrix& matrix, std::size_t degree, std::uint64_t seed) {
    const auto graph = attach_weights(
        generate_random_graph(matrix.node_count(), degree, derive_seed(seed, Stream::topology, degree)), matrix);
    std::vector<NeighborTable> tables;
    tables.reserve(matrix.node_count());
    for (NodeId u = 0; u < matrix.node_count(); ++u) tables.push_back(table_from_graph(graph, u));
    return tables;
}

struct SeedRun {
    std::vector<NodeStats> nodes;
    NetworkPropagation flood_rns, flood_cns;
};

SeedRun select_and_measure(const std::vector<NeighborTable>& tables, const LatencyMatrix& matrix,
                           std::size_t k, std::uint64_t seed, std::uint64_t salt, bool propagation) {
    SeedRun run;
    std::vector<NeighborSet> rns_sets, cns_sets;
    run.nodes.reserve(tables.size());
    for (NodeId u = 0; u < tables.size(); ++u) {
        auto rns = select_rns(tables[u], k, node_rns_seed(seed, salt, k, u));
        auto cns = select_cns(tables[u], k);
        const auto rs = selection_stats(tables[u], rns);
        const auto cs = selection_stats(tables[u], cns);
        run.nodes.push_back({seed, u, rs.avg_ms, cs.avg_ms, rs.max_ms, cs.max_ms});
        if (propagation) {
            rns_sets.push_back(std::move(rns));
            cns_sets.push_back(std::move(cns));
        }
    }
    if (propagation) {
        run.flood_rns = network_propagation_summary(build_overlay(rns_sets, matrix));
        run.flood_cns = network_propagation_summary(build_overlay(cns_sets, matrix));
    }
    return run;
}

Estimate estimate(const std::vector<double>& per_seed) {
    Estimate e;
    double sum = 0.0;
    for (const double v : per_seed) sum += v;
    const auto count = static_cast<double>(per_seed.size());
    e.mean = sum / count;
    if (per_seed.size() > 1) {
        double sq = 0.0;
        for (const double v : per_seed) sq += (v - e.mean) * (v - e.mean);
        e.std_error = std::sqrt(sq / (count - 1.0)) / std::sqrt(count);
    }
    return e;
}

struct SeedMeans {
    double avg_rns = 0.0, avg_cns = 0.0, max_rns = 0.0, max_cns = 0.0;
};

SeedMeans node_means(const std::vector<NodeStats>& nodes) {
    SeedMeans m;
    for (const auto& s : nodes) {
        m.avg_rns += s.avg_rns_ms;
        m.avg_cns += s.avg_cns_ms;
        m.max_rns += s.max_rns_ms;
        m.max_cns += s.max_cns_ms;
    }
    const auto count = static_cast<double>(nodes.size());
    m.avg_rns /= count;
    m.avg_cns /= count;
    m.max_rns /= count;
    m.max_cns /= count;
    return m;
}

struct Aggregate {
    Estimate avg_rns, avg_cns, max_rns, max_cns;
    std::optional<PropagationComparison> propagation;
};

Aggregate aggregate(const std::vector<SeedRun>& runs, bool propagation) {
    std::vector<double> avg_rns, avg_cns, max_rns, max_cns;
    for (const auto& run : runs) {
        const auto m = node_means(run.nodes);
        avg_rns.push_back(m.avg_rns);
        avg_cns.push_back(m.avg_cns);
        max_rns.push_back(m.max_rns);
        max_cns.push_back(m.max_cns);
    }
    Aggregate agg{estimate(avg_rns), estimate(avg_cns), estimate(max_rns), estimate(max_cns), std::nullopt};
    if (propagation) {
        PropagationComparison p;
        for (const auto& run : runs) {
            p.avg_rns_ms += run.flood_rns.avg_ms;
            p.avg_cns_ms += run.flood_cns.avg_ms;
            p.max_rns_ms += run.flood_rns.max_ms;
            p.max_cns_ms += run.flood_cns.max_ms;
            p.partitioned_rns += run.flood_rns.any_unreachable ? 1 : 0;
            p.partitioned_cns += run.flood_cns.any_unreachable ? 1 : 0;
        }
        const auto count = static_cast<double>(runs.size());
        p.avg_rns_ms /= count;
        p.avg_cns_ms /= count;
        p.max_rns_ms /= count;
        p.max_cns_ms /= count;
        agg.propagation = p;
    }
    return agg;
}

} // namespace

void Exp1Config::validate() const {
    check_common(n, latency, seeds);
    if (k < 1 || k > n - 1) {
        throw ParameterError("k=" + std::to_string(k) + " outside 1.." + std::to_string(n - 1));
    }
    if (candidates == CandidateMode::graph && graph_degree > n - 1) {
        throw ParameterError("graph degree " + std::to_string(graph_degree) + " exceeds " +
                             std::to_string(n - 1));
    }
}

void Exp2Config::validate() const {
    check_common(n, latency, seeds);
    if (degrees.empty()) throw ParameterError("at least one degree is required");
    for (const auto d : degrees) {
        if (d < 1 || d > n - 1) {
            throw ParameterError("degree " + std::to_string(d) + " outside 1.." + std::to_string(n - 1));
        }
    }
}

double pct_decrease(double rns_ms, double cns_ms) {
    if (!(rns_ms > 0.0)) {
        throw ParameterError("percentage decrease needs a positive baseline, got " + csv::format_number(rns_ms));
    }
    return 100.0 * (rns_ms - cns_ms) / rns_ms;
}

std::uint64_t node_rns_seed(std::uint64_t seed, std::uint64_t salt, std::size_t k, NodeId node) {
    return derive_seed(derive_seed(derive_seed(seed, Stream::rns, salt), Stream::rns, k), Stream::rns, node);
}

Exp1Result run_experiment1(const Exp1Config& config) {
    config.validate();
    std::vector<SeedRun> runs(config.seeds.size());
    for_each_index(runs.size(), config.threads, [&](std::size_t i) {
        const auto seed = config.seeds[i];
        const auto matrix = sample_latency_matrix(config.n, config.latency, seed);
        const auto tables = config.candidates == CandidateMode::full_mesh
                                ? full_mesh_tables(matrix)
                                : graph_tables(matrix, config.graph_degree ? config.graph_degree : config.k, seed);
        runs[i] = select_and_measure(tables, matrix, config.k, seed, config.rns_salt, config.propagation);
    });

    Exp1Result result;
    result.config = config;
    for (auto& run : runs) {
        result.per_node.insert(result.per_node.end(), run.nodes.begin(), run.nodes.end());
    }
    const auto agg = aggregate(runs, config.propagation);
    result.avg_rns = agg.avg_rns;
    result.avg_cns = agg.avg_cns;
    result.max_rns = agg.max_rns;
    result.max_cns = agg.max_cns;
    result.pct_decrease_avg = pct_decrease(agg.avg_rns.mean, agg.avg_cns.mean);
    result.pct_decrease_max = pct_decrease(agg.max_rns.mean, agg.max_cns.mean);
    result.propagation = agg.propagation;
    return result;
}

Exp2Result run_experiment2(const Exp2Config& config) {
    config.validate();
    const auto degree_count = config.degrees.size();
    // runs[d][s]: degree index d, seed index s.
    std::vector<std::vector<SeedRun>> runs(degree_count, std::vector<SeedRun>(config.seeds.size()));
    for_each_index(config.seeds.size(), config.threads, [&](std::size_t s) {
        const auto seed = config.seeds[s];
        const auto matrix = sample_latency_matrix(config.n, config.latency, seed);
        std::vector<NeighborTable> mesh;
        if (config.candidates == CandidateMode::full_mesh) mesh = full_mesh_tables(matrix);
        for (std::size_t d = 0; d < degree_count; ++d) {
            const auto degree = config.degrees[d];
            if (config.candidates == CandidateMode::full_mesh) {
                runs[d][s] = select_and_measure(mesh, matrix, degree, seed, config.rns_salt, config.propagation);
            } else {
                runs[d][s] = select_and_measure(graph_tables(matrix, degree, seed), matrix, degree, seed,
                                                config.rns_salt, config.propagation);
            }
        }
    });

    Exp2Result result;
    result.config = config;
    for (std::size_t d = 0; d < degree_count; ++d) {
        const auto agg = aggregate(runs[d], config.propagation);
        DegreePoint point;
        point.degree = config.degrees[d];
        point.net_avg_rns = agg.avg_rns;
        point.net_avg_cns = agg.avg_cns;
        point.net_maxavg_rns = agg.max_rns;
        point.net_maxavg_cns = agg.max_cns;
        point.pct_avg = pct_decrease(agg.avg_rns.mean, agg.avg_cns.mean);
        point.pct_max = pct_decrease(agg.max_rns.mean, agg.max_cns.mean);
        point.propagation = agg.propagation;
        result.points.push_back(point);
    }
    return result;
}

namespace {

constexpr const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Regenerate the RNS vs CNS comparison figures from the CSVs in this directory."""
import csv
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def rows(name):
    path = os.path.join(HERE, name)
    if not os.path.exists(path):
        return None
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def pct(rns, cns):
    return [100.0 * (r - c) / r for r, c in zip(rns, cns)]


def per_node_figure(data, metric, title, out):
    first_seed = data[0]["seed"]
    sel = [r for r in data if r["seed"] == first_seed]
    nodes = [int(r["node"]) for r in sel]
    rns = [float(r[metric + "_rns_ms"]) for r in sel]
    cns = [float(r[metric + "_cns_ms"]) for r in sel]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(nodes, rns, "-o", ms=3, label="RNS")
    ax.plot(nodes, cns, "-s", ms=3, label="CNS")
    ax.set_xlabel("node")
    ax.set_ylabel("latency (ms)")
    ax2 = ax.twinx()
    ax2.plot(nodes, pct(rns, cns), "--", color="gray", label="decrease")
    ax2.set_ylabel("decrease (%)")
    ax.set_title("%s (seed %s)" % (title, first_seed))
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, out), dpi=120)


def degree_figure(data, rns_key, cns_key, pct_key, title, out):
    deg = [int(r["degree"]) for r in data]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(deg, [float(r[rns_key]) for r in data], "-o", ms=3, label="RNS")
    ax.plot(deg, [float(r[cns_key]) for r in data], "-s", ms=3, label="CNS")
    ax.set_xlabel("degree")
    ax.set_ylabel("latency (ms)")
    ax2 = ax.twinx()
    ax2.plot(deg, [float(r[pct_key]) for r in data], "--", color="gray")
    ax2.set_ylabel("decrease (%)")
    ax.set_title(title)
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, out), dpi=120)


def main():
    made = False
    exp1 = rows("exp1_per_node.csv")
    if exp1:
        per_node_figure(exp1, "avg", "Neighbors' average latency", "exp1_avg.png")
        per_node_figure(exp1, "max", "Neighbors' maximum latency", "exp1_max.png")
        made = True
    exp2 = rows("exp2_by_degree.csv")
    if exp2:
        degree_figure(exp2, "net_avg_rns_ms", "net_avg_cns_ms", "pct_avg",
                      "Network average latency by degree", "exp2_avg.png")
        degree_figure(exp2, "net_maxavg_rns_ms", "net_maxavg_cns_ms", "pct_max",
                      "Network average of per-node maximum latency by degree", "exp2_max.png")
        made = True
    if not made:
        sys.exit("no experiment CSVs found in " + HERE)


if __name__ == "__main__":
    main()
)PY";

void write_plot_script(const std::filesystem::path& dir) {
    auto out = csv::open_output(dir / "plot_results.py");
    out << kPlotScript;
    if (!out) throw IoError("failed writing " + (dir / "plot_results.py").string());
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string num(double v) { return csv::format_number(v); }

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace

void write_results(const Exp1Result& result, const std::filesystem::path& dir) {
    ensure_dir(dir);
    {
        const auto path = dir / "exp1_per_node.csv";
        auto out = csv::open_output(path);
        out << "seed,node,avg_rns_ms,avg_cns_ms,max_rns_ms,max_cns_ms\n";
        for (const auto& s : result.per_node) {
            out << s.seed << ',' << s.node << ',' << num(s.avg_rns_ms) << ',' << num(s.avg_cns_ms) << ','
                << num(s.max_rns_ms) << ',' << num(s.max_cns_ms) << '\n';
        }
        finish(out, path);
    }
    {
        const auto path = dir / "exp1_summary.csv";
        auto out = csv::open_output(path);
        out << "metric,rns_ms,cns_ms,pct_decrease\n";
        out << "avg," << num(result.avg_rns.mean) << ',' << num(result.avg_cns.mean) << ','
            << num(result.pct_decrease_avg) << '\n';
        out << "max," << num(result.max_rns.mean) << ',' << num(result.max_cns.mean) << ','
            << num(result.pct_decrease_max) << '\n';
        if (const auto& p = result.propagation) {
            out << "propagation_avg," << num(p->avg_rns_ms) << ',' << num(p->avg_cns_ms) << ','
                << num(pct_decrease(p->avg_rns_ms, p->avg_cns_ms)) << '\n';
            out << "propagation_max," << num(p->max_rns_ms) << ',' << num(p->max_cns_ms) << ','
                << num(pct_decrease(p->max_rns_ms, p->max_cns_ms)) << '\n';
        }
        finish(out, path);
    }
    write_plot_script(dir);
}

void write_results(const Exp2Result& result, const std::filesystem::path& dir) {
    ensure_dir(dir);
    {
        const auto path = dir / "exp2_by_degree.csv";
        auto out = csv::open_output(path);
        out << "degree,net_avg_rns_ms,net_avg_cns_ms,pct_avg,net_maxavg_rns_ms,net_maxavg_cns_ms,pct_max\n";
        for (const auto& p : result.points) {
            out << p.degree << ',' << num(p.net_avg_rns.mean) << ',' << num(p.net_avg_cns.mean) << ','
                << num(p.pct_avg) << ',' << num(p.net_maxavg_rns.mean) << ',' << num(p.net_maxavg_cns.mean)
                << ',' << num(p.pct_max) << '\n';
        }
        finish(out, path);
    }
    if (result.config.propagation) {
        const auto path = dir / "exp2_propagation.csv";
        auto out = csv::open_output(path);
        out << "degree,prop_avg_rns_ms,prop_avg_cns_ms,prop_max_rns_ms,prop_max_cns_ms,"
               "partitioned_seeds_rns,partitioned_seeds_cns\n";
        for (const auto& p : result.points) {
            const auto& f = *p.propagation;
            out << p.degree << ',' << num(f.avg_rns_ms) << ',' << num(f.avg_cns_ms) << ',' << num(f.max_rns_ms)
                << ',' << num(f.max_cns_ms) << ',' << f.partitioned_rns << ',' << f.partitioned_cns << '\n';
        }
        finish(out, path);
    }
    write_plot_script(dir);
}

} // namespace cns
