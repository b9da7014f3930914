// wormchain command-line driver: sample | fpras | oracle | flows | bench

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <wormchain/report_json.hpp>
#include <wormchain/wormchain.hpp>

namespace wc = wormchain;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_verification = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Config {
    std::string graph;
    std::string graph_file;
    double x = 0;
    double beta = 0;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "csv";
    std::string config;

    std::uint64_t steps = 0;
    std::uint64_t stride = 1000;
    std::string summary;

    std::string target = "chi";
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    std::size_t k = 0;
    double eps = 0.2;
    double eta = 0.2;
    unsigned threads = 1;
    bool plan_only = false;
    std::uint64_t run_length = 0;

    std::vector<double> deltas{0.25};
    std::size_t top = 10;
};

struct Common {
    CLI::Option* graph;
    CLI::Option* graph_file;
    CLI::Option* x;
    CLI::Option* beta;
};

Common add_common(CLI::App* cmd, Config& c) {
    Common o{};
    o.graph = cmd->add_option("--graph", c.graph, "Generator: k<n>, path<n>, cycle<n>, grid<r>x<c>, torus<r>x<c>");
    o.graph_file = cmd->add_option("--graph-file", c.graph_file, "Edge-list file ('n m' then m lines 'u v', '#' comments)");
    o.x = cmd->add_option("--x", c.x, "High-temperature parameter x = tanh(beta), in (0,1)");
    o.beta = cmd->add_option("--beta", c.beta, "Inverse temperature; converted to x = tanh(beta)");
    cmd->add_option("--seed", c.seed, "64-bit seed")->capture_default_str();
    cmd->add_option("--out", c.out, "Output path (default: stdout)");
    cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    cmd->add_option("--config", c.config, "JSON file of option values; command-line flags take precedence");
    return o;
}

// Fills options absent from the command line with values from the JSON config file.
void merge_config(CLI::App* cmd, const Config& c, const Common& o) {
    if (c.config.empty()) return;
    std::ifstream in(c.config);
    if (!in) throw UsageError("cannot open config file '" + c.config + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw UsageError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    const bool temperature_given = o.x->count() + o.beta->count() > 0;
    const bool graph_given = o.graph->count() + o.graph_file->count() > 0;
    for (const auto& [key, value] : j.items()) {
        if (key == "config") throw UsageError("config files cannot nest");
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr) throw UsageError("unknown config key '" + key + "' for " + cmd->get_name());
        if (opt->count() > 0) continue;
        if ((key == "x" || key == "beta") && temperature_given) continue;
        if ((key == "graph" || key == "graph-file") && graph_given) continue;
        std::vector<std::string> items;
        auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        if (value.is_array()) {
            for (const auto& v : value) items.push_back(text(v));
        } else if (value.is_boolean()) {
            if (!value.get<bool>()) continue;
            items.emplace_back("true");
        } else {
            items.push_back(text(value));
        }
        try {
            opt->add_result(items);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError("config key '" + key + "': " + e.what());
        }
    }
}

struct Setup {
    wc::Graph graph;
    std::string graph_source;
    wc::ChainParams params;
};

Setup resolve(const Config& c, const Common& o) {
    if (o.graph->count() + o.graph_file->count() != 1) throw UsageError("give exactly one of --graph or --graph-file");
    if (o.x->count() + o.beta->count() != 1) throw UsageError("give exactly one of --x or --beta");
    std::optional<wc::ChainParams> p;
    try {
        p = o.x->count() ? wc::ChainParams::from_x(c.x) : wc::ChainParams::from_beta(c.beta);
    } catch (const std::domain_error& e) {
        throw UsageError(e.what());
    }
    try {
        if (o.graph->count()) return {wc::generate(c.graph), c.graph, *p};
        std::ifstream in(c.graph_file);
        if (!in) throw UsageError("cannot open graph file '" + c.graph_file + "'");
        return {wc::load_graph(in), c.graph_file, *p};
    } catch (const wc::GraphError& e) {
        throw UsageError(std::string("graph: ") + e.what());
    }
}

std::string hex64(std::uint64_t h) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json effective_config(const std::string& command, const Config& c, const Setup& s) {
    json j{{"command", command}, {"graph", s.graph_source}, {"x", s.params.x()}, {"seed", c.seed}};
    if (command == "sample") {
        j["steps"] = c.steps;
        j["stride"] = c.stride;
    } else if (command == "fpras") {
        j.update({{"target", c.target}, {"eps", c.eps}, {"eta", c.eta}, {"plan_only", c.plan_only}});
        if (c.target == "corr" || c.target == "cuv") j.update({{"u", c.u}, {"v", c.v}, {"k", c.k}});
        if (c.run_length > 0) j["run_length"] = c.run_length;
    } else if (command == "oracle" || command == "flows") {
        j["deltas"] = c.deltas;
        j["top"] = c.top;
    } else if (command == "bench") {
        j["steps"] = c.steps;
    }
    return j;
}

json provenance(const std::string& command, const Config& c, const Setup& s) {
    return {{"tool", "wormchain"},
            {"version", std::string(wc::version)},
            {"command", command},
            {"generator", std::string(wc::generator_id)},
            {"seed", c.seed},
            {"graph",
             {{"source", s.graph_source},
              {"n", s.graph.vertex_count()},
              {"m", s.graph.edge_count()},
              {"max_degree", s.graph.max_degree()},
              {"hash", hex64(s.graph.hash())}}},
            {"x", s.params.x()},
            {"beta", s.params.beta()},
            {"config_hash", hex64(fnv1a(effective_config(command, c, s).dump()))}};
}

void write_provenance_csv(std::ostream& out, const json& prov) {
    out << "# tool: wormchain " << prov["version"].get<std::string>() << " " << prov["command"].get<std::string>() << "\n"
        << "# generator: " << prov["generator"].get<std::string>() << "\n"
        << "# seed: " << prov["seed"] << "\n"
        << "# graph: " << prov["graph"]["source"].get<std::string>() << " n=" << prov["graph"]["n"]
        << " m=" << prov["graph"]["m"] << " hash=" << prov["graph"]["hash"].get<std::string>() << "\n"
        << "# x: " << prov["x"] << " beta: " << prov["beta"] << "\n"
        << "# config_hash: " << prov["config_hash"].get<std::string>() << "\n";
}

// Output sink: a file when --out is set, stdout otherwise.
class Output {
  public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw UsageError("cannot open output file '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

  private:
    std::ofstream file_;
};

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

void write_checks_csv(std::ostream& out, const wc::VerificationRecord& rec) {
    out << "check,passed,lhs,rhs,detail\n" << std::setprecision(17);
    for (const wc::Check& c : rec.checks)
        out << csv_field(c.name) << "," << (c.passed ? 1 : 0) << "," << c.lhs << "," << c.rhs << "," << csv_field(c.detail)
            << "\n";
}

void report_checks(const wc::VerificationRecord& rec) {
    std::size_t failed = 0;
    for (const wc::Check& c : rec.checks)
        if (!c.passed) {
            ++failed;
            std::cerr << "FAILED " << c.name << ": " << c.lhs << " vs " << c.rhs
                      << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
        }
    if (failed == 0) std::cerr << "all " << rec.checks.size() << " checks passed\n";
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_sample(const Config& c, const Setup& s) {
    if (c.steps == 0) throw UsageError("--steps must be positive");
    if (c.stride == 0) throw UsageError("--stride must be positive");
    const json prov = provenance("sample", c, s);
    wc::Engine rng(c.seed);
    wc::WormState state(s.graph);
    struct Row {
        std::uint64_t t;
        bool c0;
        std::size_t edges;
        wc::Vertex u, v;
    };
    std::vector<Row> rows;
    wc::RunOptions opt;
    opt.stride = c.stride;
    const wc::RunStats st = wc::run(
        s.graph, state, c.steps, s.params, rng,
        [&](std::uint64_t t, const wc::WormState& w) {
            rows.push_back({t, w.in_c0(), w.edge_count(), w.in_c0() ? 0 : w.defects()[0], w.in_c0() ? 0 : w.defects()[1]});
        },
        opt);

    json pairs = json::array();
    for (wc::Vertex a = 0; a < s.graph.vertex_count() && !st.pair_counts.empty(); ++a)
        for (wc::Vertex b = a + 1; b < s.graph.vertex_count(); ++b)
            if (auto n = st.pair_count(a, b)) pairs.push_back({a, b, n});
    json summary{{"steps", st.steps},
                 {"samples", st.samples},
                 {"accepted", st.accepted},
                 {"time_in_c0", st.time_in_c0},
                 {"fraction_c0", st.fraction_c0()},
                 {"mean_edge_count", st.mean_edge_count()},
                 {"final_edge_count", state.edge_count()}};

    Output out(c.out);
    std::ostream& os = out.stream();
    if (c.format == "json") {
        json trace = json::array();
        for (const Row& r : rows) {
            json row{{"t", r.t}, {"in_c0", r.c0}, {"edge_count", r.edges}};
            if (!r.c0) row["defects"] = {r.u, r.v};
            trace.push_back(std::move(row));
        }
        os << json{{"provenance", prov}, {"summary", summary}, {"pair_counts", pairs}, {"trace", trace}}.dump(2) << "\n";
    } else {
        write_provenance_csv(os, prov);
        os << "t,in_c0,edge_count,defect_u,defect_v\n";
        for (const Row& r : rows) {
            os << r.t << "," << (r.c0 ? 1 : 0) << "," << r.edges << ",";
            if (!r.c0) os << r.u << "," << r.v;
            else os << ",";
            os << "\n";
        }
        os << std::setprecision(17);
        for (const auto& [key, value] : summary.items()) os << "# " << key << ": " << value << "\n";
        for (const auto& p : pairs) os << "# pair_count " << p[0] << " " << p[1] << ": " << p[2] << "\n";
    }
    if (!c.summary.empty()) {
        std::ofstream sj(c.summary);
        if (!sj) throw UsageError("cannot open summary file '" + c.summary + "'");
        sj << json{{"provenance", prov}, {"summary", summary}, {"pair_counts", pairs}}.dump(2) << "\n";
    }
    return exit_ok;
}

int cmd_fpras(const Config& c, const Setup& s, bool k_given) {
    const bool pair_target = c.target == "corr" || c.target == "cuv";
    if (pair_target) {
        if (c.u >= s.graph.vertex_count() || c.v >= s.graph.vertex_count() || c.u == c.v)
            throw UsageError("--u and --v must be distinct vertices of the graph");
    }
    // Accuracy split: chi = beta/pi(C0) needs eps/(1+eps) on pi(C0); the correlation is a ratio
    // of two estimates, each run at eps/(2+eps) and eta/2.
    double eps = c.eps;
    double eta = c.eta;
    if (c.target == "chi") eps = c.eps / (1.0 + c.eps);
    if (c.target == "corr") {
        eps = c.eps / (2.0 + c.eps);
        eta = c.eta / 2.0;
    }
    std::vector<wc::FprasPlan> plans;
    try {
        auto plan_for = [&](const wc::Event& ev) {
            auto plan = wc::make_fpras_plan(s.graph, s.params, ev, eps, eta,
                                            k_given ? std::optional<std::size_t>(c.k) : std::nullopt);
            if (c.run_length > 0) {
                plan.run_length = c.run_length;
                plan.run_length_overridden = true;
            }
            return plan;
        };
        if (c.target == "chi" || c.target == "c0" || c.target == "corr") plans.push_back(plan_for(wc::Event::c0()));
        if (pair_target) plans.push_back(plan_for(wc::Event::pair(c.u, c.v)));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    } catch (const std::domain_error& e) {
        throw UsageError(e.what());
    }

    const json prov = provenance("fpras", c, s);
    json plan_json = json::array();
    for (const auto& p : plans) plan_json.push_back(wc::to_json(p));
    json result{{"target", c.target}, {"eps", c.eps}, {"eta", c.eta}, {"eps_per_estimate", eps}, {"eta_per_estimate", eta}};
    if (pair_target) result.update({{"u", std::min(c.u, c.v)}, {"v", std::max(c.u, c.v)}});

    if (!c.plan_only) {
        for (const auto& p : plans)
            if (!p.run_length)
                throw UsageError("run length " + std::to_string(p.bound_run_length) +
                                 " exceeds 64 bits; use --plan-only or --run-length");
        const auto start = std::chrono::steady_clock::now();
        std::vector<wc::FprasResult> runs;
        for (std::size_t i = 0; i < plans.size(); ++i)
            runs.push_back(wc::fpras(s.graph, s.params, plans[i], wc::mix64(c.seed + i), c.threads));
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cerr << "wall time: " << seconds << " s\n";
        json means = json::array();
        for (const auto& r : runs) means.push_back(r.sample_means);
        result["sample_means"] = means;
        if (c.target == "chi") {
            result["pi_c0"] = runs[0].estimate;
            result["estimate"] = runs[0].estimate > 0 ? json(wc::susceptibility(runs[0].estimate, s.params.beta())) : json(nullptr);
        } else if (c.target == "c0") {
            result["estimate"] = runs[0].estimate;
        } else if (c.target == "cuv") {
            result["estimate"] = runs[0].estimate;
        } else {
            result["pi_c0"] = runs[0].estimate;
            result["pi_cuv"] = runs[1].estimate;
            result["estimate"] = runs[0].estimate > 0
                                     ? json(wc::two_point(runs[1].estimate, runs[0].estimate, s.graph.vertex_count()))
                                     : json(nullptr);
        }
    }

    Output out(c.out);
    std::ostream& os = out.stream();
    if (c.format == "json") {
        os << json{{"provenance", prov}, {"plans", plan_json}, {"result", result}}.dump(2) << "\n";
    } else {
        write_provenance_csv(os, prov);
        os << "key,value\n" << std::setprecision(17);
        for (std::size_t i = 0; i < plan_json.size(); ++i)
            for (const auto& [key, value] : plan_json[i].items())
                os << "plan" << i << "." << key << "," << (value.is_string() ? value.get<std::string>() : value.dump())
                   << "\n";
        for (const auto& [key, value] : result.items())
            if (key != "sample_means") os << key << "," << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
    }
    return exit_ok;
}

int cmd_oracle(const Config& c, const Setup& s) {
    const auto report = wc::oracle::verify_exact_invariants(s.graph, s.params.x(), c.deltas);
    Output out(c.out);
    std::ostream& os = out.stream();
    if (c.format == "json") {
        os << json{{"provenance", provenance("oracle", c, s)}, {"report", wc::to_json(report)}}.dump(2) << "\n";
    } else {
        write_provenance_csv(os, provenance("oracle", c, s));
        for (const auto& [dl, mix] : report.mixing.mixing_times) os << "# mix(" << dl << "): " << mix << "\n";
        write_checks_csv(os, report.record);
    }
    for (const auto& [dl, mix] : report.mixing.mixing_times)
        std::cerr << "mix(" << dl << ") = " << mix << ", mixing-time bound = " << wc::mixing_time_bound(s.graph, s.params.x(), dl)
                  << "\n";
    report_checks(report.record);
    return report.record.all_passed() ? exit_ok : exit_verification;
}

int cmd_flows(const Config& c, const Setup& s) {
    wc::VerificationRecord all;
    json reports = json::array();
    std::vector<wc::flows::BoundChainReport> runs;
    for (double dl : c.deltas) {
        runs.push_back(wc::flows::verify_bound_chain(s.graph, s.params.x(), dl, c.top));
        all.append(runs.back().record, "delta=" + std::to_string(dl) + ": ");
        reports.push_back(wc::to_json(s.graph, runs.back()));
    }
    Output out(c.out);
    std::ostream& os = out.stream();
    if (c.format == "json") {
        os << json{{"provenance", provenance("flows", c, s)}, {"reports", reports}}.dump(2) << "\n";
    } else {
        write_provenance_csv(os, provenance("flows", c, s));
        const auto& cr = runs.front().congestion;
        os << std::setprecision(17) << "# phi: " << cr.congestion << "\n# phi_bound: " << cr.bound
           << "\n# max_path_length: " << cr.max_path_length << "\n";
        write_checks_csv(os, all);
    }
    const auto& cr = runs.front().congestion;
    std::cerr << "phi = " << cr.congestion << ", bound = " << cr.bound << "\n";
    report_checks(all);
    return all.all_passed() ? exit_ok : exit_verification;
}

int cmd_bench(const Config& c, const Setup& s) {
    if (c.steps == 0) throw UsageError("--steps must be positive");
    const wc::Sampler sampler(s.graph, s.params);
    wc::Engine rng(c.seed);
    wc::WormState state(s.graph);
    sampler.advance(state, std::min<std::uint64_t>(c.steps / 10, 1'000'000), rng);
    const auto start = std::chrono::steady_clock::now();
    sampler.advance(state, c.steps, rng);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double rate = static_cast<double>(c.steps) / seconds;
    const json prov = provenance("bench", c, s);
    json result{{"steps", c.steps}, {"seconds", seconds}, {"steps_per_second", rate}, {"final_edge_count", state.edge_count()}};
    Output out(c.out);
    std::ostream& os = out.stream();
    if (c.format == "json") {
        os << json{{"provenance", prov}, {"result", result}}.dump(2) << "\n";
    } else {
        write_provenance_csv(os, prov);
        os << "steps,seconds,steps_per_second\n" << c.steps << "," << seconds << "," << rate << "\n";
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Worm-algorithm Markov chain for the Ising model: sampling, approximation, exact verification"};
    app.set_version_flag("--version", std::string(wc::version));
    app.require_subcommand(1);
    app.footer(
        "Exit status: 0 ok, 1 usage or input error (including exact-mode cap exceeded), 2 verification failure.\n"
        "CSV outputs start with '#' provenance lines (tool, generator, seed, graph hash, x, config hash).");
    Config c;

    auto* sample = app.add_subcommand("sample", "Run the chain from the empty set and record a trace");
    const Common sample_o = add_common(sample, c);
    sample->add_option("--steps", c.steps, "Number of steps (required)");
    sample->add_option("--stride", c.stride, "Record every stride-th state")->capture_default_str();
    sample->add_option("--summary", c.summary, "Also write the JSON summary to this path");
    sample->footer(
        "CSV columns: t (step index), in_c0 (1 if no defects), edge_count (|A|), defect_u, defect_v\n"
        "(the two odd vertices, empty in C0). Trailing '#' lines hold the summary and per-pair defect counts.");

    auto* fpras = app.add_subcommand("fpras", "Median-of-means approximation of chi, a correlation, or pi of an event");
    const Common fpras_o = add_common(fpras, c);
    fpras->add_option("--target", c.target, "chi, corr (<s_u s_v>), c0 (pi(C0)) or cuv (pi(C_uv))")
        ->check(CLI::IsMember({"chi", "corr", "c0", "cuv"}))
        ->capture_default_str();
    fpras->add_option("--u", c.u, "First vertex of the pair");
    fpras->add_option("--v", c.v, "Second vertex of the pair");
    auto* k_opt = fpras->add_option("--k", c.k, "Distance budget k >= d(u,v) (default d(u,v))");
    fpras->add_option("--eps", c.eps, "Relative accuracy in (0,1/4)")->capture_default_str();
    fpras->add_option("--eta", c.eta, "Failure probability in (0,1/4)")->capture_default_str();
    fpras->add_option("--threads", c.threads, "Worker threads (0: hardware concurrency)")->capture_default_str();
    fpras->add_flag("--plan-only", c.plan_only, "Print the run plan without sampling");
    fpras->add_option("--run-length", c.run_length,
                      "Override the steps per sample; the output marks R_overridden and the guarantee no longer applies");
    fpras->footer("CSV columns: key,value (plan fields as planN.<field>, then the result fields).");

    auto* oracle = app.add_subcommand("oracle", "Exact enumeration, transition matrix, mixing times and invariant checks");
    const Common oracle_o = add_common(oracle, c);
    oracle->add_option("--delta", c.deltas, "TV thresholds for mix(delta)")->capture_default_str();
    oracle->footer("CSV columns: check,passed,lhs,rhs,detail (a check passes when lhs <= rhs).");

    auto* flows = app.add_subcommand("flows", "Canonical paths, congestion and the mixing-bound inequality chain");
    const Common flows_o = add_common(flows, c);
    flows->add_option("--delta", c.deltas, "TV thresholds")->capture_default_str();
    flows->add_option("--top", c.top, "Most loaded transitions to report")->capture_default_str();
    flows->footer("CSV columns: check,passed,lhs,rhs,detail (a check passes when lhs <= rhs).");

    auto* bench = app.add_subcommand("bench", "Measure sampler throughput in steps per second");
    const Common bench_o = add_common(bench, c);
    bench->add_option("--steps", c.steps, "Timed steps")->default_val(100'000'000);
    bench->footer("CSV columns: steps,seconds,steps_per_second");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    const std::vector<std::pair<CLI::App*, const Common*>> commands{
        {sample, &sample_o}, {fpras, &fpras_o}, {oracle, &oracle_o}, {flows, &flows_o}, {bench, &bench_o}};
    try {
        for (const auto& [cmd, common] : commands) {
            if (!cmd->parsed()) continue;
            merge_config(cmd, c, *common);
            const Setup s = resolve(c, *common);
            const std::string name = cmd->get_name();
            if (name == "sample") return cmd_sample(c, s);
            if (name == "fpras") return cmd_fpras(c, s, k_opt->count() > 0);
            if (name == "oracle") return cmd_oracle(c, s);
            if (name == "flows") return cmd_flows(c, s);
            return cmd_bench(c, s);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const wc::oracle::CapExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    return exit_usage;
}
