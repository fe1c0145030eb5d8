#include "dispo/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dispo/landscape.hpp"
#include "dispo/metrics.hpp"

namespace dispo {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct GlobalConfig {
    std::optional<fs::path> pool;
    std::optional<fs::path> store;
    std::optional<fs::path> registry;
    std::map<std::string, std::string> credentials;  // model id -> env var name
    int verbosity = 0;
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int verbose = 0;
};

GlobalConfig load_global_config(const std::string& path) {
    GlobalConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path r(p);
        return r.is_absolute() ? r : base / r;
    };
    try {
        const json doc = json::parse(in);
        if (doc.contains("pool")) cfg.pool = resolve(doc.at("pool").get<std::string>());
        if (doc.contains("store")) cfg.store = resolve(doc.at("store").get<std::string>());
        if (doc.contains("instruction_registry")) cfg.registry = resolve(doc.at("instruction_registry").get<std::string>());
        if (doc.contains("credentials")) cfg.credentials = doc.at("credentials").get<std::map<std::string, std::string>>();
        cfg.verbosity = doc.value("verbosity", 0);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    for (const auto* p : {&cfg.pool, &cfg.registry}) {
        if (*p && !fs::exists(**p)) throw ConfigError("config " + path + ": " + (*p)->string() + " does not exist");
    }
    return cfg;
}

int default_parallelism() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

double parse_number(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid " + what + " '" + text + "'");
    }
}

std::vector<CellKey> parse_cells(const std::string& text) {
    std::vector<CellKey> cells;
    for (const auto& item : split_list(text)) cells.push_back(CellKey::parse(item));
    if (cells.empty()) throw ConfigError("no cells given");
    return cells;
}

std::string alpha_model_id(double alpha) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "alpha-%g", alpha);
    return buf;
}

fs::path require_store(const std::string& flag, const GlobalConfig& cfg) {
    if (!flag.empty()) return flag;
    if (cfg.store) return *cfg.store;
    throw ConfigError("no store given (--store or config \"store\")");
}

ExecuteOptions execute_options(int parallelism, const CliHooks& hooks, const ExperimentPlan& plan, const RunStore& store,
                               int verbosity, std::ostream& out) {
    ExecuteOptions opts;
    opts.parallelism = parallelism;
    opts.provider_factory = hooks.provider_factory;
    auto done = std::make_shared<std::map<CellKey, int>>();
    for (const auto& cell : plan.cells()) {
        int n = 0;
        for (int r = 0; r < plan.replications; ++r) n += store.has(cell, r) ? 1 : 0;
        (*done)[cell] = n;
    }
    const int reps = plan.replications;
    opts.on_record = [done, reps, verbosity, &out](const RunRecord& rec) {
        const int n = ++(*done)[rec.cell];
        if (verbosity > 0) {
            out << "  " << rec.cell.str() << " #" << rec.replication << ' '
                << (rec.status == RunStatus::valid ? "valid" : "invalid: " + rec.error) << '\n';
        }
        if (n == reps) out << "cell " << rec.cell.str() << " complete (" << reps << " runs)\n";
    };
    return opts;
}

int report_summary(const ExecutionSummary& summary, std::ostream& out, std::ostream& err) {
    out << "cell\tvalid\tinvalid\tmissing\n";
    for (const auto& c : summary.cells) {
        out << c.cell.str() << '\t' << c.valid << '\t' << c.invalid << '\t' << c.missing << '\n';
    }
    out << "appended " << summary.appended << " records, " << summary.elicitations << " elicitations\n";
    if (summary.all_complete()) return kExitOk;
    err << "incomplete cells:";
    for (const auto& c : summary.cells) {
        if (c.complete()) continue;
        err << ' ' << c.cell.str();
        if (!c.errors.empty()) err << " (" << c.errors.front() << ")";
    }
    err << '\n';
    return kExitIncomplete;
}

RunStore open_for_run(const fs::path& path, const ConstraintPool& pool, bool resume) {
    RunStore store = RunStore::open(path, pool);
    if (!resume && !store.empty()) {
        throw ConfigError("store " + path.string() + " already holds runs; use --resume or a new store");
    }
    return store;
}

// ---- run ----

struct RunArgs {
    std::string plan;
    std::string store;
    int parallelism = 0;
    bool resume = true;
};

int cmd_run(const RunArgs& a, const Globals& g, const CliHooks& hooks, std::ostream& out, std::ostream& err) {
    const GlobalConfig cfg = load_global_config(g.config_path);
    std::ifstream in(a.plan);
    if (!in) throw ConfigError("cannot open plan " + a.plan);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("plan " + a.plan + ": " + e.what());
    }
    if (!doc.contains("pool") && cfg.pool) doc["pool"] = fs::absolute(*cfg.pool).string();
    if (!doc.contains("instruction_registry") && cfg.registry) {
        doc["instruction_registry"] = fs::absolute(*cfg.registry).string();
    }
    if (g.seed) doc["base_seed"] = *g.seed;
    if (doc.contains("models") && doc["models"].is_array()) {
        for (auto& m : doc["models"]) {
            const auto it = cfg.credentials.find(m.value("id", std::string{}));
            if (it != cfg.credentials.end()) m["live"]["api_key_env"] = it->second;
        }
    }
    const ExperimentPlan plan = plan_from_json(doc, fs::path(a.plan).parent_path());

    int parallelism = a.parallelism > 0 ? a.parallelism : default_parallelism();
    if (a.parallelism <= 0) {
        int live_cap = 0;
        for (const auto& m : plan.models) {
            if (m.kind == ProviderKind::live) live_cap += m.live.max_in_flight;
        }
        if (live_cap > 0) parallelism = std::min(parallelism, live_cap);
    }

    RunStore store = open_for_run(require_store(a.store, cfg), plan.pool, a.resume);
    const int verbosity = std::max(g.verbose, cfg.verbosity);
    out << "plan: " << plan.models.size() << " models x " << plan.instructions.size() << " instruction types x "
        << plan.replications << " replications, budget " << plan.budget << '\n';
    const auto summary = execute(plan, store, execute_options(parallelism, hooks, plan, store, verbosity, out));
    return report_summary(summary, out, err);
}

// ---- simulate ----

struct SimulateArgs {
    std::string pool;
    std::string alphas;
    int replications = 30;
    int budget = 20;
    std::string instructions = "Basic";
    std::string store;
    int parallelism = 0;
    double instruction_shift = 0.0;
    bool resume = true;
};

ExperimentPlan synthetic_plan(const ConstraintPool& pool, const InstructionRegistry& registry,
                              const std::vector<double>& alphas, const std::vector<std::string>& instructions,
                              int replications, int budget, std::uint64_t seed, double shift) {
    ExperimentPlan plan;
    plan.pool = pool;
    plan.registry = registry;
    plan.instructions = instructions;
    plan.replications = replications;
    plan.budget = budget;
    plan.base_seed = seed;
    for (double alpha : alphas) {
        ProviderConfig c;
        c.kind = ProviderKind::synthetic;
        c.model_id = alpha_model_id(alpha);
        c.remote_model = c.model_id;
        c.synthetic.concentration = alpha;
        c.synthetic.seed = seed;
        c.synthetic.instruction_shift = shift;
        plan.models.push_back(std::move(c));
    }
    plan.validate();
    return plan;
}

std::vector<double> parse_alphas(const std::string& text) {
    std::vector<double> alphas;
    for (const auto& item : split_list(text)) {
        const double a = parse_number(item, "alpha");
        if (!std::isfinite(a) || a <= 0.0) throw ConfigError("invalid alpha " + item + ": concentration must be > 0");
        alphas.push_back(a);
    }
    if (alphas.empty()) throw ConfigError("no alpha values given");
    return alphas;
}

void print_report(const RunStore& store, std::ostream& out) {
    out << format_report_tsv(build_report(store));
}

int cmd_simulate(const SimulateArgs& a, const Globals& g, const CliHooks& hooks, std::ostream& out,
                 std::ostream& err) {
    const GlobalConfig cfg = load_global_config(g.config_path);
    const auto alphas = parse_alphas(a.alphas);
    ConstraintPool pool;
    try {
        if (!a.pool.empty()) {
            pool = load_pool(a.pool);
        } else if (cfg.pool) {
            pool = load_pool(*cfg.pool);
        } else {
            pool = placeholder_pool();
        }
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    } catch (const PoolError& e) {
        throw ConfigError(e.what());
    }
    const InstructionRegistry registry = cfg.registry ? load_instruction_registry(*cfg.registry)
                                                      : builtin_instruction_registry();
    if (a.instruction_shift < 0.0 || a.instruction_shift > 1.0) throw ConfigError("instruction shift must lie in [0, 1]");
    const ExperimentPlan plan = synthetic_plan(pool, registry, alphas, split_list(a.instructions), a.replications,
                                               a.budget, g.seed.value_or(0), a.instruction_shift);
    RunStore store = open_for_run(require_store(a.store, cfg), plan.pool, a.resume);
    const int parallelism = a.parallelism > 0 ? a.parallelism : default_parallelism();
    const auto summary = execute(plan, store, execute_options(parallelism, hooks, plan, store, g.verbose, out));
    const int code = report_summary(summary, out, err);
    if (code != kExitOk) return code;
    out << '\n';
    print_report(store, out);
    return kExitOk;
}

// ---- metrics ----

struct MetricsArgs {
    std::string store;
    std::string cell;
    bool json_out = false;
    bool deltas = false;
};

int cmd_metrics(const MetricsArgs& a, const Globals& g, std::ostream& out) {
    const GlobalConfig cfg = load_global_config(g.config_path);
    const RunStore store = RunStore::open_existing(require_store(a.store, cfg));
    std::optional<CellKey> only;
    if (!a.cell.empty()) only = CellKey::parse(a.cell);
    const MetricsReport report = build_report(store, only);
    if (a.json_out) {
        json doc = report_to_json(report);
        if (a.deltas) {
            json d = json::array();
            for (const auto& delta : jaccard_deltas(report)) {
                d.push_back({{"model", delta.model},
                             {"instruction_a", delta.instruction_a},
                             {"instruction_b", delta.instruction_b},
                             {"delta", delta.delta}});
            }
            doc["deltas"] = d;
        }
        out << doc.dump(2) << '\n';
    } else {
        out << format_report_tsv(report);
        if (a.deltas) out << '\n' << format_deltas_tsv(jaccard_deltas(report));
    }
    return kExitOk;
}

// ---- landscape ----

struct LandscapeArgs {
    std::string store;
    std::string cells;
    std::string out;
    std::string format = "svg";
    int grid = kDefaultGridResolution;
    std::string bandwidth;
    std::string levels;
    std::string style;
};

LandscapeOptions landscape_options(const LandscapeArgs& a) {
    LandscapeOptions opts;
    if (a.grid < 8 || a.grid > 4096) throw ConfigError("--grid must lie in [8, 4096]");
    opts.grid_resolution = a.grid;
    if (!a.bandwidth.empty()) {
        const auto parts = split_list(a.bandwidth);
        if (parts.size() != 2) throw ConfigError("--bandwidth expects hx,hy");
        const Bandwidth bw{parse_number(parts[0], "bandwidth"), parse_number(parts[1], "bandwidth")};
        if (!(bw.hx > 0.0) || !(bw.hy > 0.0) || !std::isfinite(bw.hx) || !std::isfinite(bw.hy)) {
            throw ConfigError("--bandwidth values must be positive");
        }
        opts.bandwidth = bw;
    }
    if (!a.levels.empty()) {
        opts.level_masses.clear();
        for (const auto& item : split_list(a.levels)) {
            const double q = parse_number(item, "level");
            if (!(q > 0.0 && q < 1.0)) throw ConfigError("--levels values must lie in (0, 1)");
            opts.level_masses.push_back(q);
        }
    }
    return opts;
}

int cmd_landscape(const LandscapeArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    const GlobalConfig cfg = load_global_config(g.config_path);
    RenderFormat format;
    if (a.format == "svg") {
        format = RenderFormat::svg;
    } else if (a.format == "plotdata") {
        format = RenderFormat::plotdata;
    } else {
        throw ConfigError("--format must be svg or plotdata");
    }
    const LandscapeOptions opts = landscape_options(a);
    const RenderStyle style = a.style.empty() ? RenderStyle{} : load_render_style(a.style);
    const auto cells = parse_cells(a.cells);
    const RunStore store = RunStore::open_existing(require_store(a.store, cfg));
    const auto present = store.cells();
    for (const auto& c : cells) {
        if (std::find(present.begin(), present.end(), c) == present.end()) {
            throw DataError("cell " + c.str() + " is not in store " + store.path().string());
        }
    }
    const Landscape landscape = build_landscape(store, cells, opts);
    for (const auto& w : landscape.warnings) err << "warning: " << w << '\n';
    render_landscape(landscape, a.out, format, style);
    out << "wrote " << a.out << " (" << landscape.fields.size() << " density cells, "
        << landscape.degenerate_cells.size() << " landmark-only)\n";
    return kExitOk;
}

// ---- demo ----

struct DemoArgs {
    std::string out = "dispo-demo";
    int parallelism = 0;
};

int cmd_demo(const DemoArgs& a, const Globals& g, const CliHooks& hooks, std::ostream& out, std::ostream& err) {
    const fs::path dir(a.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());

    const std::uint64_t seed = g.seed.value_or(0);
    const std::vector<double> alphas{0.05, 1.0, 100.0};
    const std::vector<std::string> instructions{"Basic", "Quality-focused", "Creativity-focused"};
    const ConstraintPool pool = placeholder_pool();
    const ExperimentPlan plan =
        synthetic_plan(pool, builtin_instruction_registry(), alphas, instructions, 30, 20, seed, 0.3);

    write_pool(pool, dir / "pool.json");
    json plan_doc = {{"pool", "pool.json"},
                     {"instruction_types", plan.instructions},
                     {"replications", plan.replications},
                     {"budget", plan.budget},
                     {"base_seed", plan.base_seed},
                     {"max_attempts", plan.max_attempts}};
    plan_doc["models"] = json::array();
    for (const auto& m : plan.models) plan_doc["models"].push_back(provider_config_to_json(m));
    {
        std::ofstream f(dir / "plan.json");
        f << plan_doc.dump(2) << '\n';
        if (!f) throw ConfigError("cannot write " + (dir / "plan.json").string());
    }

    RunStore store = RunStore::open(dir / "runs.jsonl", plan.pool);
    const int parallelism = a.parallelism > 0 ? a.parallelism : default_parallelism();
    const auto summary = execute(plan, store, execute_options(parallelism, hooks, plan, store, g.verbose, out));
    const int code = report_summary(summary, out, err);
    if (code != kExitOk) return code;

    const MetricsReport report = build_report(store);
    {
        std::ofstream f(dir / "metrics.tsv");
        f << format_report_tsv(report);
        std::ofstream j(dir / "metrics.json");
        j << report_to_json(report).dump(2) << '\n';
    }

    std::vector<CellKey> across_models;
    for (const auto& m : plan.models) across_models.push_back({m.model_id, "Basic"});
    const std::string focus = plan.models[1].model_id;
    std::vector<CellKey> across_instructions;
    for (const auto& i : instructions) across_instructions.push_back({focus, i});

    const std::vector<std::pair<std::string, std::vector<CellKey>>> figures{
        {"landscape_basic", across_models}, {"landscape_" + focus, across_instructions}};
    for (const auto& [name, cells] : figures) {
        const Landscape landscape = build_landscape(store, cells);
        for (const auto& w : landscape.warnings) err << "warning: " << w << '\n';
        render_landscape(landscape, dir / (name + ".svg"), RenderFormat::svg);
        render_landscape(landscape, dir / (name + ".plotdata.json"), RenderFormat::plotdata);
    }

    out << '\n' << format_report_tsv(report);
    out << "\ndemo outputs in " << dir.string() << '\n';
    return kExitOk;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParseError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const PoolError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        err << "missing data: " << e.what() << '\n';
        return kExitMissingData;
    } catch (const NumericError& e) {
        err << "insufficient data: " << e.what() << '\n';
        return kExitMissingData;
    } catch (const RenderError& e) {
        err << "render error: " << e.what() << '\n';
        return kExitRender;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliHooks& hooks) {
    CLI::App app{"Disposition profiling toolkit", "dispo"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::uint64_t seed_value = 0;
    app.add_option("--config", g.config_path, "JSON config: pool, store, instruction_registry, credentials");
    auto* seed_opt = app.add_option("--seed", seed_value, "Seed for all synthetic randomness");
    app.add_flag("-v,--verbose", g.verbose, "Per-run progress output");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Execute an experiment plan");
    run_cmd->add_option("--plan", run.plan, "Plan file")->required();
    run_cmd->add_option("--store", run.store, "Run log (JSONL)");
    run_cmd->add_option("--parallelism", run.parallelism, "Concurrent elicitations");
    run_cmd->add_flag("--resume,!--no-resume", run.resume, "Continue an existing store (default)");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a synthetic disposition grid offline");
    sim_cmd->add_option("--pool", sim.pool, "Pool file (default: placeholder pool)");
    sim_cmd->add_option("--alpha", sim.alphas, "Comma-separated Dirichlet concentrations")->required();
    sim_cmd->add_option("--replications", sim.replications, "Runs per cell");
    sim_cmd->add_option("--budget", sim.budget, "Selections per run");
    sim_cmd->add_option("--instructions", sim.instructions, "Comma-separated instruction types");
    sim_cmd->add_option("--instruction-shift", sim.instruction_shift, "Per-instruction preference blend in [0, 1]");
    sim_cmd->add_option("--store", sim.store, "Run log (JSONL)");
    sim_cmd->add_option("--parallelism", sim.parallelism, "Concurrent elicitations");
    sim_cmd->add_flag("--resume,!--no-resume", sim.resume, "Continue an existing store (default)");

    MetricsArgs met;
    auto* met_cmd = app.add_subcommand("metrics", "Consistency and diversity report");
    met_cmd->add_option("--store", met.store, "Run log (JSONL)");
    met_cmd->add_option("--cell", met.cell, "Only this model:instruction cell");
    met_cmd->add_flag("--json", met.json_out, "Structured output");
    met_cmd->add_flag("--deltas", met.deltas, "Within-model Jaccard differences between instruction types");

    LandscapeArgs land;
    auto* land_cmd = app.add_subcommand("landscape", "Render the shared-space selection landscape");
    land_cmd->add_option("--store", land.store, "Run log (JSONL)");
    land_cmd->add_option("--cells", land.cells, "Comma-separated model:instruction cells")->required();
    land_cmd->add_option("--out", land.out, "Output file")->required();
    land_cmd->add_option("--format", land.format, "svg or plotdata");
    land_cmd->add_option("--grid", land.grid, "Grid nodes per axis");
    land_cmd->add_option("--bandwidth", land.bandwidth, "Fixed bandwidth hx,hy");
    land_cmd->add_option("--levels", land.levels, "Comma-separated HDR masses");
    land_cmd->add_option("--style", land.style, "Style file (JSON)");

    DemoArgs demo;
    auto* demo_cmd = app.add_subcommand("demo", "Synthetic 3 x 3 grid, metrics and landscapes");
    demo_cmd->add_option("--out", demo.out, "Output directory");
    demo_cmd->add_option("--parallelism", demo.parallelism, "Concurrent elicitations");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitConfig;
    }
    if (*seed_opt) g.seed = seed_value;

    if (*run_cmd) return guarded([&] { return cmd_run(run, g, hooks, out, err); }, err);
    if (*sim_cmd) return guarded([&] { return cmd_simulate(sim, g, hooks, out, err); }, err);
    if (*met_cmd) return guarded([&] { return cmd_metrics(met, g, out); }, err);
    if (*land_cmd) return guarded([&] { return cmd_landscape(land, g, out, err); }, err);
    if (*demo_cmd) return guarded([&] { return cmd_demo(demo, g, hooks, out, err); }, err);
    return kExitConfig;
}

}  // namespace dispo
