#include "cli.hpp"

#include "cns/csv.hpp"
#include "cns/error.hpp"
#include "cns/experiments.hpp"
#include "cns/latency_model.hpp"
#include "cns/propagation.hpp"
#include "cns/rtt_probe.hpp"
#include "cns/selection.hpp"
#include "cns/topology.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace cns::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string out = ".";
    bool quiet = false;

    // gen / sample / experiments
    std::size_t n = 0;
    std::size_t degree = 0;
    std::uint64_t seed = 1;
    double mu = 2000.0;
    double sigma = 500.0;
    std::string graph;

    // experiments
    std::size_t k = 5;
    std::size_t seeds = 30;
    std::string seed_list;
    std::optional<std::uint64_t> single_seed;
    std::string degrees = "1-20";
    std::uint64_t rns_seed = 0;
    std::string candidates = "full-mesh";
    std::size_t graph_degree = 0;
    bool propagation = false;
    unsigned threads = 1;

    // probe-sim
    std::string out_delay = "100ms";
    std::string back_delay = "100ms";
    std::string processing = "50ms";
    std::string client_idle;
    std::string client_offset = "0";
    std::string server_offset = "0";
    std::uint32_t rounds = 3;

    // propagate
    std::string method = "cns";
    std::string hop = "raw";
    std::optional<NodeId> source;
    std::string latency;
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

/// "250us", "100ms", "-500s"; a bare integer is microseconds.
std::int64_t parse_duration(const std::string& text, const char* flag) {
    std::string_view body = text;
    std::int64_t scale = 1;
    if (body.ends_with("us")) {
        body.remove_suffix(2);
    } else if (body.ends_with("ms")) {
        body.remove_suffix(2);
        scale = 1000;
    } else if (body.ends_with("s")) {
        body.remove_suffix(1);
        scale = 1000000;
    }
    bool negative = false;
    if (!body.empty() && (body.front() == '-' || body.front() == '+')) {
        negative = body.front() == '-';
        body.remove_prefix(1);
    }
    try {
        const auto magnitude = static_cast<std::int64_t>(csv::parse_unsigned(body));
        return (negative ? -magnitude : magnitude) * scale;
    } catch (const ParameterError&) {
        throw ParameterError(std::string(flag) + ": invalid duration '" + text + "'");
    }
}

Micros parse_nonneg_duration(const std::string& text, const char* flag) {
    const auto value = parse_duration(text, flag);
    if (value < 0) throw ParameterError(std::string(flag) + ": duration must be non-negative");
    return static_cast<Micros>(value);
}

/// "1-20" or "1,2,5" or a mix such as "1-5,10,20".
std::vector<std::uint64_t> parse_list(const std::string& text, const char* flag) {
    std::vector<std::uint64_t> values;
    try {
        for (const auto part : csv::split(text)) {
            const auto item = trim(part);
            const auto dash = item.find('-');
            if (dash == std::string::npos) {
                values.push_back(csv::parse_unsigned(item));
                continue;
            }
            const auto lo = csv::parse_unsigned(trim(std::string_view(item).substr(0, dash)));
            const auto hi = csv::parse_unsigned(trim(std::string_view(item).substr(dash + 1)));
            if (lo > hi) throw ParameterError("empty range");
            for (auto v = lo; v <= hi; ++v) values.push_back(v);
        }
    } catch (const ParameterError&) {
        throw ParameterError(std::string(flag) + ": invalid list '" + text + "'");
    }
    return values;
}

std::vector<std::uint64_t> resolve_seeds(const Options& o) {
    if (o.single_seed) return {*o.single_seed};
    if (!o.seed_list.empty()) return parse_list(o.seed_list, "--seed-list");
    if (o.seeds < 1) throw ParameterError("--seeds must be at least 1");
    std::vector<std::uint64_t> seeds(o.seeds);
    for (std::size_t i = 0; i < o.seeds; ++i) seeds[i] = i + 1;
    return seeds;
}

CandidateMode parse_candidates(const std::string& text) {
    if (text == "full-mesh") return CandidateMode::full_mesh;
    if (text == "graph") return CandidateMode::graph;
    throw ParameterError("--candidates: expected 'full-mesh' or 'graph', got '" + text + "'");
}

std::string fixed(double value, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
    auto out = csv::open_output(path);
    writer(out);
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

/// Replayable record of the resolved options of `command`.
void write_run_config(const CLI::App& command, const fs::path& dir) {
    write_file(dir / "run_config", [&](std::ostream& out) {
        out << "# replay: cns_sim " << command.get_name() << " --config <this file>\n";
        out << "command = " << command.get_name() << '\n';
        for (const auto* opt : command.get_options()) {
            const auto name = opt->get_single_name();
            if (name == "help" || name == "config" || opt->get_lnames().empty()) continue;
            std::string value;
            if (opt->count() > 0) {
                value = opt->results().empty() ? "true" : opt->results().back();
            } else if (opt->get_expected_min() == 0) {
                value = "false";
            } else {
                value = opt->get_default_str();
                if (value.empty()) continue;
            }
            out << name << " = " << value << '\n';
        }
    });
}

/// Flat `key = value` file turned into `--key=value` arguments.
std::vector<std::string> config_arguments(const std::string& path, const std::string& command) {
    auto in = csv::open_input(path);
    std::vector<std::string> args;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ParameterError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        auto key = trim(std::string_view(body).substr(0, eq));
        const auto value = trim(std::string_view(body).substr(eq + 1));
        std::replace(key.begin(), key.end(), '_', '-');
        if (key == "command") {
            if (value != command) {
                throw ParameterError(path + ":" + std::to_string(line_no) + ": config is for command '" +
                                     value + "', not '" + command + "'");
            }
            continue;
        }
        args.push_back("--" + key + "=" + value);
    }
    return args;
}

using Action = std::function<void(const Options&, std::ostream&)>;

void cmd_gen(const Options& o, std::ostream& out) {
    const auto graph = generate_random_graph(o.n, o.degree, o.seed);
    const fs::path dir = o.out;
    ensure_dir(dir);
    write_file(dir / "graph.csv", [&](std::ostream& f) { write_graph_csv(graph, f); });
    const auto stats = degree_stats(graph);
    out << "graph: " << graph.node_count() << " nodes, " << graph.arcs().size() << " arcs -> "
        << (dir / "graph.csv").string() << '\n';
    out << "out-degree: min " << stats.min_out << ", max " << stats.max_out << ", mean "
        << fixed(stats.mean_out, 3) << '\n';
    out << "weakly connected: " << (is_weakly_connected(graph) ? "yes" : "no") << '\n';
}

void cmd_sample(const Options& o, std::ostream& out) {
    const fs::path dir = o.out;
    std::optional<Graph> graph;
    fs::path graph_path = o.graph;
    if (graph_path.empty() && fs::exists(dir / "graph.csv")) graph_path = dir / "graph.csv";
    if (!graph_path.empty()) {
        auto in = csv::open_input(graph_path);
        graph = read_graph_csv(in);
    }
    std::size_t n = o.n;
    if (graph) {
        if (n != 0 && n != graph->node_count()) {
            throw ParameterError("--n " + std::to_string(n) + " disagrees with " + graph_path.string() +
                                 " (" + std::to_string(graph->node_count()) + " nodes)");
        }
        n = graph->node_count();
    }
    if (n == 0) throw ParameterError("sample needs --n or a graph (--graph or <out>/graph.csv)");

    const LatencyParams params{o.mu, o.sigma};
    const auto matrix = sample_latency_matrix(n, params, o.seed);
    ensure_dir(dir);
    write_file(dir / "latency.csv", [&](std::ostream& f) { write_matrix_csv(matrix, f); });

    const auto& values = matrix.pair_values();
    double sum = 0.0;
    for (const double v : values) sum += v;
    out << "latency: " << values.size() << " pairs, mean " << fixed(sum / static_cast<double>(values.size()))
        << " ms -> " << (dir / "latency.csv").string() << '\n';
    if (graph) {
        const auto weighted = attach_weights(*graph, matrix);
        write_file(dir / "weighted_graph.csv", [&](std::ostream& f) { write_graph_csv(weighted, f); });
        out << "weighted graph: " << weighted.arcs().size() << " arcs -> "
            << (dir / "weighted_graph.csv").string() << '\n';
    }
}

void cmd_probe_sim(const Options& o, std::ostream& out) {
    ExchangeTiming timing;
    timing.one_way_out = parse_nonneg_duration(o.out_delay, "--out-delay");
    timing.one_way_back = parse_nonneg_duration(o.back_delay, "--back-delay");
    timing.processing = parse_nonneg_duration(o.processing, "--processing");
    if (!o.client_idle.empty()) timing.client_idle = parse_nonneg_duration(o.client_idle, "--client-idle");
    timing.client_offset = parse_duration(o.client_offset, "--client-offset");
    timing.server_offset = parse_duration(o.server_offset, "--server-offset");
    const auto rounds = simulate_probe_exchange(timing, o.rounds);

    std::ostringstream table;
    table << "round,side,rtt_us\n";
    std::size_t client_count = 0, server_count = 0;
    for (const auto& r : rounds) {
        out << "round " << r.client.round << " client RTT_c = " << fixed(r.client.value_ms(), 3) << " ms\n";
        table << r.client.round << ",client," << r.client.value_us << '\n';
        ++client_count;
        if (r.server) {
            out << "round " << r.server->round << " server RTT_s = " << fixed(r.server->value_ms(), 3) << " ms\n";
            table << r.server->round << ",server," << r.server->value_us << '\n';
            ++server_count;
        }
    }
    out << "samples: " << client_count << " client, " << server_count << " server\n";
    if (o.out != ".") {
        ensure_dir(o.out);
        write_file(fs::path(o.out) / "probe_samples.csv", [&](std::ostream& f) { f << table.str(); });
    }
}

void print_line(std::ostream& out, const char* metric, const Estimate& rns, const Estimate& cns, double pct) {
    out << metric << ": RNS " << fixed(rns.mean) << " ms (se " << fixed(rns.std_error) << "), CNS "
        << fixed(cns.mean) << " ms (se " << fixed(cns.std_error) << "), decrease " << fixed(pct) << "%\n";
}

void cmd_exp1(const Options& o, std::ostream& out) {
    Exp1Config cfg;
    cfg.n = o.n ? o.n : 40;
    cfg.k = o.k;
    cfg.latency = {o.mu, o.sigma};
    cfg.seeds = resolve_seeds(o);
    cfg.rns_salt = o.rns_seed;
    cfg.candidates = parse_candidates(o.candidates);
    cfg.graph_degree = o.graph_degree;
    cfg.propagation = o.propagation;
    cfg.threads = o.threads;
    const auto result = run_experiment1(cfg);
    write_results(result, o.out);

    out << "exp1: n=" << cfg.n << " k=" << cfg.k << " seeds=" << cfg.seeds.size() << '\n';
    print_line(out, "avg", result.avg_rns, result.avg_cns, result.pct_decrease_avg);
    print_line(out, "max", result.max_rns, result.max_cns, result.pct_decrease_max);
    if (const auto& p = result.propagation) {
        out << "propagation avg (extension): RNS " << fixed(p->avg_rns_ms) << " ms, CNS " << fixed(p->avg_cns_ms)
            << " ms\n";
        out << "propagation max (extension): RNS " << fixed(p->max_rns_ms) << " ms, CNS " << fixed(p->max_cns_ms)
            << " ms\n";
        if (p->partitioned_rns || p->partitioned_cns) {
            out << "WARNING: overlay partitioned in " << p->partitioned_rns << " RNS and " << p->partitioned_cns
                << " CNS runs; unreachable targets excluded from propagation averages\n";
        }
    }
}

void cmd_exp2(const Options& o, std::ostream& out) {
    Exp2Config cfg;
    cfg.n = o.n ? o.n : 100;
    for (const auto d : parse_list(o.degrees, "--degrees")) cfg.degrees.push_back(d);
    cfg.latency = {o.mu, o.sigma};
    cfg.seeds = resolve_seeds(o);
    cfg.rns_salt = o.rns_seed;
    cfg.candidates = parse_candidates(o.candidates);
    cfg.propagation = o.propagation;
    cfg.threads = o.threads;
    const auto result = run_experiment2(cfg);
    write_results(result, o.out);

    out << "exp2: n=" << cfg.n << " degrees=" << cfg.degrees.size() << " seeds=" << cfg.seeds.size() << '\n';
    for (const auto& p : result.points) {
        out << "degree " << p.degree << ": avg RNS " << fixed(p.net_avg_rns.mean) << " CNS "
            << fixed(p.net_avg_cns.mean) << " (-" << fixed(p.pct_avg) << "%), max RNS "
            << fixed(p.net_maxavg_rns.mean) << " CNS " << fixed(p.net_maxavg_cns.mean) << " (-"
            << fixed(p.pct_max) << "%)\n";
    }
}

void cmd_propagate(const Options& o, std::ostream& out) {
    LatencyMatrix matrix;
    if (!o.latency.empty()) {
        auto in = csv::open_input(o.latency);
        matrix = read_matrix_csv(in);
    } else {
        matrix = sample_latency_matrix(o.n ? o.n : 40, LatencyParams{o.mu, o.sigma}, o.seed);
    }
    const auto n = matrix.node_count();
    if (o.method != "cns" && o.method != "rns") {
        throw ParameterError("--method: expected 'cns' or 'rns', got '" + o.method + "'");
    }
    if (o.hop != "raw" && o.hop != "half-rtt") {
        throw ParameterError("--hop: expected 'raw' or 'half-rtt', got '" + o.hop + "'");
    }
    std::vector<NeighborSet> selections;
    for (NodeId u = 0; u < n; ++u) {
        const auto table = table_from_matrix(matrix, u);
        selections.push_back(o.method == "cns" ? select_cns(table, o.k)
                                               : select_rns(table, o.k, node_rns_seed(o.seed, o.rns_seed, o.k, u)));
    }
    const auto overlay =
        build_overlay(selections, matrix, o.hop == "raw" ? HopWeight::raw : HopWeight::half_rtt);

    std::vector<PropagationReport> reports;
    if (o.source) {
        reports.push_back(flood_arrival(overlay, *o.source));
    } else {
        for (NodeId s = 0; s < n; ++s) reports.push_back(flood_arrival(overlay, s));
    }
    const fs::path dir = o.out;
    ensure_dir(dir);
    const auto path = dir / ("propagation_" + o.method + ".csv");
    write_file(path, [&](std::ostream& f) { write_propagation_csv(reports, f); });

    double avg = 0.0, max = 0.0;
    std::size_t unreachable = 0, counted = 0;
    for (const auto& r : reports) {
        unreachable += r.unreachable_count;
        if (r.unreachable_count + 1 == n) continue;
        avg += r.avg_arrival_ms;
        max = std::max(max, r.max_arrival_ms);
        ++counted;
    }
    avg = counted ? avg / static_cast<double>(counted) : 0.0;
    out << "propagation (" << o.method << ", k=" << o.k << ", " << reports.size() << " sources): avg "
        << fixed(avg) << " ms, max " << fixed(max) << " ms -> " << path.string() << '\n';
    if (unreachable > 0) {
        out << "WARNING: " << unreachable << " (source, target) pairs unreachable; excluded from avg/max\n";
    }
}

struct Cli {
    CLI::App app{"Closest- vs random-neighbor selection simulator for P2P overlays", "cns_sim"};
    Options options;
    std::map<const CLI::App*, Action> actions;

    Cli() {
        app.require_subcommand(1);
        app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

        auto common = [this](CLI::App* sub, bool writes_files = true) {
            sub->add_option("--config", options.config, "Flat 'key = value' file; flags override it");
            if (writes_files) sub->add_option("--out", options.out, "Output directory");
            sub->add_flag("--quiet", options.quiet, "Suppress summary lines");
        };
        auto latency_opts = [this](CLI::App* sub) {
            sub->add_option("--mu", options.mu, "Mean latency (ms)");
            sub->add_option("--sigma", options.sigma, "Latency standard deviation (ms)");
        };
        auto experiment_opts = [this](CLI::App* sub) {
            sub->add_option("--seeds", options.seeds, "Run seeds 1..N");
            sub->add_option("--seed-list", options.seed_list, "Explicit seeds, e.g. 3,7,10-12");
            sub->add_option("--single-seed", options.single_seed, "Run only this seed");
            sub->add_option("--rns-seed", options.rns_seed, "Salt for RNS choices only");
            sub->add_option("--candidates", options.candidates, "full-mesh | graph");
            sub->add_flag("--propagation", options.propagation, "Also report flood propagation (extension)");
            sub->add_option("--threads", options.threads, "Worker threads across seeds")
                ->check(CLI::PositiveNumber);
        };

        auto* gen = app.add_subcommand("gen", "Generate a random connected overlay graph");
        common(gen);
        gen->add_option("--n", options.n, "Node count")->required();
        gen->add_option("--degree", options.degree, "Target out-degree")->required();
        gen->add_option("--seed", options.seed, "RNG seed");
        actions[gen] = cmd_gen;

        auto* sample = app.add_subcommand("sample", "Sample a normal latency matrix (and weight a graph)");
        common(sample);
        sample->add_option("--n", options.n, "Node count (inferred from the graph when given)");
        latency_opts(sample);
        sample->add_option("--seed", options.seed, "RNG seed");
        sample->add_option("--graph", options.graph, "Graph CSV to weight (default <out>/graph.csv)");
        actions[sample] = cmd_sample;

        auto* probe = app.add_subcommand("probe-sim", "Simulate the stateless RTT probe exchange");
        common(probe);
        probe->add_option("--out-delay", options.out_delay, "Client-to-server delay (us|ms|s)");
        probe->add_option("--back-delay", options.back_delay, "Server-to-client delay");
        probe->add_option("--processing", options.processing, "Server processing time");
        probe->add_option("--client-idle", options.client_idle, "Client wait between rounds (default: processing)");
        probe->add_option("--client-offset", options.client_offset, "Client clock offset");
        probe->add_option("--server-offset", options.server_offset, "Server clock offset");
        probe->add_option("--rounds", options.rounds, "Probe rounds")->check(CLI::PositiveNumber);
        actions[probe] = cmd_probe_sim;

        auto* exp1 = app.add_subcommand("exp1", "Per-node neighbor latency, RNS vs CNS");
        common(exp1);
        exp1->add_option("--n", options.n, "Node count")->default_str("40");
        exp1->add_option("--k", options.k, "Neighbors per node");
        exp1->add_option("--graph-degree", options.graph_degree, "Candidate graph degree in graph mode (0: k)");
        latency_opts(exp1);
        experiment_opts(exp1);
        actions[exp1] = cmd_exp1;

        auto* exp2 = app.add_subcommand("exp2", "Network latency across degrees, RNS vs CNS");
        common(exp2);
        exp2->add_option("--n", options.n, "Node count")->default_str("100");
        exp2->add_option("--degrees", options.degrees, "Degrees, e.g. 1-20");
        latency_opts(exp2);
        experiment_opts(exp2);
        actions[exp2] = cmd_exp2;

        auto* prop = app.add_subcommand("propagate", "Flood arrival times over a selected overlay");
        common(prop);
        prop->add_option("--n", options.n, "Node count")->default_str("40");
        prop->add_option("--k", options.k, "Neighbors per node");
        latency_opts(prop);
        prop->add_option("--seed", options.seed, "Latency and RNS seed");
        prop->add_option("--rns-seed", options.rns_seed, "Salt for RNS choices only");
        prop->add_option("--method", options.method, "cns | rns");
        prop->add_option("--hop", options.hop, "raw | half-rtt");
        prop->add_option("--source", options.source, "Single source node (default: all)");
        prop->add_option("--latency", options.latency, "Latency CSV to use instead of sampling");
        actions[prop] = cmd_propagate;
    }

    const CLI::App* selected() const {
        for (const auto& [sub, action] : actions) {
            if (sub->parsed()) return sub;
        }
        return nullptr;
    }

    void parse(std::vector<std::string> args) {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    }
};

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    auto cli = std::make_unique<Cli>();
    try {
        cli->parse(args);
        if (!cli->options.config.empty()) {
            const std::string command = cli->selected()->get_name();
            const auto pos = std::find(args.begin(), args.end(), command);
            std::vector<std::string> merged{command};
            auto file_args = config_arguments(cli->options.config, command);
            merged.insert(merged.end(), file_args.begin(), file_args.end());
            merged.insert(merged.end(), pos + 1, args.end());
            cli = std::make_unique<Cli>();
            cli->parse(merged);
        }
    } catch (const CLI::ParseError& e) {
        return cli->app.exit(e, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    const auto* command = cli->selected();
    try {
        std::ostringstream summary;
        cli->actions.at(command)(cli->options, summary);
        const bool writes_dir = command->get_name() != "probe-sim" || cli->options.out != ".";
        if (writes_dir) {
            ensure_dir(cli->options.out);
            write_run_config(*command, cli->options.out);
        }
        if (!cli->options.quiet) out << summary.str();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace cns::cli
