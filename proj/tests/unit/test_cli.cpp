#include <doctest.h>

#include <sstream>

#include "dispo/cli.hpp"
#include "dispo/errors.hpp"
#include "../support.hpp"

using namespace dispo;
using namespace dispo::test;

namespace {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult cli(const std::vector<std::string>& args, const CliHooks& hooks = {}) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err, hooks);
    return {code, out.str(), err.str()};
}

class DownProvider final : public Provider {
public:
    explicit DownProvider(ProviderConfig c) : config_(std::move(c)) {}
    SelectionResponse elicit(const ElicitRequest&) override { throw TransportError("HTTP 502: bad gateway", true); }
    [[nodiscard]] const ProviderConfig& config() const noexcept override { return config_; }

private:
    ProviderConfig config_;
};

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string simulate_store(const TempDir& dir, const std::string& name, const std::string& seed = "3") {
    const auto store = (dir / name).string();
    const auto r = cli({"--seed", seed, "simulate", "--alpha", "0.1,10", "--instructions", "Basic,Creativity-focused",
                        "--replications", "6", "--store", store, "--parallelism", "2"});
    REQUIRE(r.code == kExitOk);
    return store;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors") {
    CHECK(cli({"--help"}).code == kExitOk);
    CHECK(cli({}).code == kExitConfig);
    CHECK(cli({"frobnicate"}).code == kExitConfig);
    CHECK(cli({"simulate"}).code == kExitConfig);
}

TEST_CASE("demo writes the full artifact set") {
    TempDir dir("demo");
    const auto out = (dir / "demo").string();
    const auto r = cli({"--seed", "5", "demo", "--out", out});
    REQUIRE(r.code == kExitOk);
    for (const char* name : {"pool.json", "plan.json", "runs.jsonl", "metrics.tsv", "metrics.json",
                             "landscape_basic.svg", "landscape_basic.plotdata.json", "landscape_alpha-1.svg",
                             "landscape_alpha-1.plotdata.json"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir / "demo" / name), name);
    }
    CHECK(read_lines(dir / "demo" / "metrics.tsv").size() == 10);
}

TEST_CASE("simulate is deterministic per seed and validates alpha") {
    TempDir dir("sim");
    const auto a = simulate_store(dir, "a.jsonl");
    const auto b = simulate_store(dir, "b.jsonl");
    const auto c = simulate_store(dir, "c.jsonl", "4");
    CHECK(read_file(a) == read_file(b));
    CHECK(read_file(a) != read_file(c));

    const auto bad = cli({"simulate", "--alpha", "-1", "--store", (dir / "x.jsonl").string()});
    CHECK(bad.code == kExitConfig);
    CHECK(bad.err.find("alpha") != std::string::npos);
    CHECK(cli({"simulate", "--alpha", "abc", "--store", (dir / "x.jsonl").string()}).code == kExitConfig);
    CHECK(cli({"simulate", "--alpha", "1", "--instruction-shift", "2", "--store", (dir / "x.jsonl").string()}).code ==
          kExitConfig);
}

TEST_CASE("resume policy") {
    TempDir dir("resume");
    const auto store = simulate_store(dir, "runs.jsonl");
    const auto again = cli({"--seed", "3", "simulate", "--alpha", "0.1,10", "--instructions",
                            "Basic,Creativity-focused", "--replications", "6", "--store", store});
    CHECK(again.code == kExitOk);
    CHECK(again.out.find("appended 0 records, 0 elicitations") != std::string::npos);
    const auto refused = cli({"--seed", "3", "simulate", "--alpha", "0.1", "--replications", "6", "--store", store,
                              "--no-resume"});
    CHECK(refused.code == kExitConfig);
    CHECK(refused.err.find("already holds runs") != std::string::npos);
}

TEST_CASE("metrics output and data errors") {
    TempDir dir("metrics");
    const auto store = simulate_store(dir, "runs.jsonl");
    const auto tsv = cli({"metrics", "--store", store, "--deltas"});
    REQUIRE(tsv.code == kExitOk);
    CHECK(tsv.out.find("instruction_a\tinstruction_b\tdelta_jaccard") != std::string::npos);

    const auto js = cli({"metrics", "--store", store, "--json"});
    REQUIRE(js.code == kExitOk);
    const auto report = report_from_json(nlohmann::json::parse(js.out));
    CHECK(report.rows.size() == 4);
    const auto direct = build_report(RunStore::open_existing(store));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(report.rows[i].cell == direct.rows[i].cell);
        CHECK(report.rows[i].jaccard_mean == direct.rows[i].jaccard_mean);
    }

    const auto one = cli({"metrics", "--store", store, "--cell", "alpha-10:Basic"});
    CHECK(one.code == kExitOk);
    CHECK(read_lines(store).size() == 25);
    CHECK(cli({"metrics", "--store", store, "--cell", "alpha-7:Basic"}).code == kExitMissingData);
    CHECK(cli({"metrics", "--store", (dir / "none.jsonl").string()}).code == kExitMissingData);
    { auto empty = RunStore::open(dir / "empty.jsonl", placeholder_pool()); }
    const auto empty = cli({"metrics", "--store", (dir / "empty.jsonl").string()});
    CHECK(empty.code == kExitMissingData);
    CHECK(empty.err.find("holds no runs") != std::string::npos);
}

TEST_CASE("landscape output, missing cells and unwritable targets") {
    TempDir dir("land");
    const auto store = simulate_store(dir, "runs.jsonl");
    const auto svg = (dir / "l.svg").string();
    const auto r = cli({"landscape", "--store", store, "--cells", "alpha-0.1:Basic,alpha-10:Basic", "--out", svg,
                        "--grid", "64"});
    REQUIRE(r.code == kExitOk);
    CHECK(read_file(svg).find("data-cell=\"alpha-10:Basic\"") != std::string::npos);

    const auto plot = (dir / "l.json").string();
    CHECK(cli({"landscape", "--store", store, "--cells", "alpha-0.1:Basic", "--out", plot, "--format", "plotdata",
               "--grid", "32", "--levels", "0.5,0.8", "--bandwidth", "0.01,0.01"})
              .code == kExitOk);
    const auto doc = nlohmann::json::parse(read_file(plot));
    CHECK(doc.at("cells").at(0).at("contours").size() == 2);
    CHECK(doc.at("cells").at(0).at("bandwidth").at("hx") == 0.01);

    CHECK(cli({"landscape", "--store", store, "--cells", "alpha-5:Basic", "--out", svg}).code == kExitMissingData);
    CHECK(cli({"landscape", "--store", store, "--cells", "alpha-0.1:Basic", "--out",
               (dir / "no" / "such" / "dir.svg").string()})
              .code == kExitRender);
    CHECK(cli({"landscape", "--store", store, "--cells", "alpha-0.1:Basic", "--out", svg, "--format", "png"}).code ==
          kExitConfig);
    CHECK(cli({"landscape", "--store", store, "--cells", "alpha-0.1:Basic", "--out", svg, "--levels", "1.5"}).code ==
          kExitConfig);
}

TEST_CASE("degenerate cells are reported and drawn as landmarks") {
    TempDir dir("degenerate");
    Rng rng(1);
    std::map<CellKey, std::vector<std::vector<int>>> cells;
    cells[{"spread", "Basic"}] = random_cell(rng, 200, 20, 8);
    cells[{"point", "Basic"}] = std::vector<std::vector<int>>(4, std::vector<int>{9});
    { auto s = store_with_runs(dir / "runs.jsonl", placeholder_pool(), cells); }
    const auto r = cli({"landscape", "--store", (dir / "runs.jsonl").string(), "--cells", "spread:Basic,point:Basic",
                        "--out", (dir / "l.svg").string(), "--grid", "48"});
    CHECK(r.code == kExitOk);
    CHECK(r.err.find("point:Basic") != std::string::npos);
    CHECK(read_file(dir / "l.svg").find("point:Basic (landmarks only)") != std::string::npos);
}

TEST_CASE("run: credentials, incomplete cells and config files") {
    TempDir dir("run");
    ::unsetenv("DISPO_CLI_ABSENT_KEY");
    write_text(dir / "live.json", R"({
      "models": [{"id": "remote", "provider": "live",
                  "live": {"endpoint": "http://127.0.0.1:9/v1/chat/completions", "api_key_env": "DISPO_CLI_ABSENT_KEY"}}],
      "instruction_types": ["Basic"], "replications": 3, "budget": 20})");
    const auto missing = cli({"run", "--plan", (dir / "live.json").string(), "--store", (dir / "r.jsonl").string()});
    CHECK(missing.code == kExitConfig);
    CHECK(missing.err.find("DISPO_CLI_ABSENT_KEY") != std::string::npos);

    write_text(dir / "synthetic.json", R"({
      "models": [{"id": "down", "synthetic": {"concentration": 1.0}},
                 {"id": "up", "synthetic": {"concentration": 1.0}}],
      "instruction_types": ["Basic"], "replications": 3, "budget": 20})");
    CliHooks hooks;
    hooks.provider_factory = [](const ProviderConfig& c) -> std::unique_ptr<Provider> {
        if (c.model_id == "down") return std::make_unique<DownProvider>(c);
        return make_provider(c);
    };
    const auto incomplete =
        cli({"run", "--plan", (dir / "synthetic.json").string(), "--store", (dir / "s.jsonl").string()}, hooks);
    CHECK(incomplete.code == kExitIncomplete);
    CHECK(incomplete.err.find("down:Basic") != std::string::npos);
    CHECK(incomplete.err.find("up:Basic") == std::string::npos);

    const auto resumed = cli({"run", "--plan", (dir / "synthetic.json").string(), "--store", (dir / "s.jsonl").string()});
    CHECK(resumed.code == kExitOk);
    CHECK(resumed.out.find("cell down:Basic complete") != std::string::npos);

    write_text(dir / "config.json", R"({"store": "from-config.jsonl", "verbosity": 1})");
    const auto configured = cli({"--config", (dir / "config.json").string(), "--seed", "2", "run", "--plan",
                                 (dir / "synthetic.json").string()});
    CHECK(configured.code == kExitOk);
    CHECK(std::filesystem::exists(dir / "from-config.jsonl"));
    CHECK(configured.out.find("up:Basic #2 valid") != std::string::npos);

    write_text(dir / "broken.json", R"({"pool": "nowhere.json"})");
    CHECK(cli({"--config", (dir / "broken.json").string(), "metrics"}).code == kExitConfig);
    CHECK(cli({"run", "--plan", (dir / "absent.json").string(), "--store", (dir / "q.jsonl").string()}).code ==
          kExitConfig);
    CHECK(cli({"metrics"}).code == kExitConfig);
}

}
