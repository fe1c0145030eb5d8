#include "dispo/harness.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "dispo/errors.hpp"
#include "dispo/rng.hpp"

namespace dispo {

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

struct WorkItem {
    std::size_t model_index;
    CellKey cell;
    int replication;
};

struct Outcome {
    std::optional<RunRecord> record;
    std::string failure;
    std::size_t elicitations = 0;
};

Outcome run_item(const ExperimentPlan& plan, Provider& provider, const WorkItem& item) {
    Outcome outcome;
    const bool live = provider.config().kind == ProviderKind::live;
    const auto& system_prompt = plan.registry.system_prompt(item.cell.instruction);
    std::string last_error;
    std::string last_raw;
    std::uint64_t last_seed = 0;
    std::optional<std::string> started;

    for (int attempt = 0; attempt < plan.max_attempts; ++attempt) {
        const auto seed = derive_seed(plan.base_seed, item.cell, item.replication, attempt);
        last_seed = seed;
        const auto permutation = permute(plan.pool, seed);
        if (live && !started) started = utc_now();
        ++outcome.elicitations;
        try {
            auto response = provider.elicit(
                {plan.pool, permutation, item.cell.instruction, system_prompt, plan.budget});
            RunRecord r;
            r.run_id = run_uuid(seed);
            r.cell = item.cell;
            r.replication = item.replication;
            r.attempt = attempt;
            r.permutation_seed = seed;
            r.selected = std::move(response.selected);
            r.justifications = std::move(response.justifications);
            r.compatibility = std::move(response.compatibility);
            r.raw_payload = std::move(response.raw_payload);
            r.status = RunStatus::valid;
            r.provider = provider_metadata(provider.config());
            if (live) {
                r.started_at = started;
                r.finished_at = utc_now();
            }
            outcome.record = std::move(r);
            return outcome;
        } catch (const SelectionError& e) {
            last_error = e.what();
            last_raw = e.raw_payload();
        } catch (const TransportError& e) {
            outcome.failure = e.what();
            return outcome;
        }
    }

    RunRecord r;
    r.run_id = run_uuid(last_seed);
    r.cell = item.cell;
    r.replication = item.replication;
    r.attempt = plan.max_attempts - 1;
    r.permutation_seed = last_seed;
    r.raw_payload = std::move(last_raw);
    r.status = RunStatus::invalid;
    r.error = last_error;
    r.provider = provider_metadata(provider.config());
    if (live) {
        r.started_at = started;
        r.finished_at = utc_now();
    }
    outcome.record = std::move(r);
    return outcome;
}

}  // namespace

void ExperimentPlan::validate() const {
    validate_pool(pool);
    if (models.empty()) throw ConfigError("plan lists no models");
    if (instructions.empty()) throw ConfigError("plan lists no instruction types");
    if (replications < 2) throw ConfigError("replications must be at least 2");
    if (budget < 1 || static_cast<std::size_t>(budget) > pool.size()) {
        throw ConfigError("budget must lie in [1, " + std::to_string(pool.size()) + "]");
    }
    if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    std::set<std::string> ids;
    for (const auto& m : models) {
        m.validate();
        if (!ids.insert(m.model_id).second) throw ConfigError("duplicate model id '" + m.model_id + "'");
    }
    std::set<std::string> seen;
    for (const auto& name : instructions) {
        if (!registry.contains(name)) throw ConfigError("instruction type '" + name + "' is not in the registry");
        if (!seen.insert(name).second) throw ConfigError("duplicate instruction type '" + name + "'");
    }
}

std::vector<CellKey> ExperimentPlan::cells() const {
    std::vector<CellKey> out;
    for (const auto& m : models) {
        for (const auto& i : instructions) out.push_back({m.model_id, i});
    }
    return out;
}

ExperimentPlan plan_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    ExperimentPlan plan;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };
    try {
        plan.pool = doc.contains("pool") ? load_pool(resolve(doc.at("pool").get<std::string>())) : placeholder_pool();
        plan.registry = doc.contains("instruction_registry")
                            ? load_instruction_registry(resolve(doc.at("instruction_registry").get<std::string>()))
                            : builtin_instruction_registry();
        for (const auto& m : doc.at("models")) plan.models.push_back(provider_config_from_json(m));
        plan.instructions = doc.at("instruction_types").get<std::vector<std::string>>();
        plan.replications = doc.value("replications", plan.replications);
        plan.budget = doc.value("budget", plan.budget);
        plan.base_seed = doc.value("base_seed", plan.base_seed);
        plan.max_attempts = doc.value("max_attempts", plan.max_attempts);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("plan: ") + e.what());
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    } catch (const PoolError& e) {
        throw ConfigError(e.what());
    }
    plan.validate();
    return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open plan " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("plan " + path.string() + ": " + e.what());
    }
    return plan_from_json(doc, path.parent_path());
}

std::uint64_t derive_seed(std::uint64_t base_seed, const CellKey& cell, int replication, int attempt) {
    SeedHasher h;
    h.add(base_seed).add(cell.model).add(cell.instruction).add(static_cast<std::uint64_t>(replication));
    if (attempt > 0) h.add(static_cast<std::uint64_t>(attempt));
    return h.finish();
}

std::string run_uuid(std::uint64_t seed) {
    const std::uint64_t hi = splitmix64(seed);
    const std::uint64_t lo = splitmix64(hi ^ 0x5851f42d4c957f2dULL);
    const std::uint64_t a = (hi & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;  // version 4
    const std::uint64_t b = (lo & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;  // variant 10
    char buf[37];
    std::snprintf(buf, sizeof buf, "%08llx-%04llx-%04llx-%04llx-%012llx",
                  static_cast<unsigned long long>(a >> 32), static_cast<unsigned long long>((a >> 16) & 0xffff),
                  static_cast<unsigned long long>(a & 0xffff), static_cast<unsigned long long>(b >> 48),
                  static_cast<unsigned long long>(b & 0xffffffffffffULL));
    return buf;
}

bool ExecutionSummary::all_complete() const noexcept {
    for (const auto& c : cells) {
        if (!c.complete()) return false;
    }
    return true;
}

std::vector<CellKey> ExecutionSummary::incomplete_cells() const {
    std::vector<CellKey> out;
    for (const auto& c : cells) {
        if (!c.complete()) out.push_back(c.cell);
    }
    return out;
}

ExecutionSummary execute(const ExperimentPlan& plan, RunStore& store, const ExecuteOptions& options) {
    plan.validate();
    if (!(store.pool() == plan.pool)) throw ConfigError("store pool differs from plan pool");
    if (options.parallelism < 1) throw ConfigError("parallelism must be at least 1");

    const ProviderFactory factory =
        options.provider_factory ? options.provider_factory : [](const ProviderConfig& c) { return make_provider(c); };
    std::vector<std::unique_ptr<Provider>> providers;
    for (const auto& m : plan.models) providers.push_back(factory(m));

    std::vector<WorkItem> items;
    for (std::size_t m = 0; m < plan.models.size(); ++m) {
        for (const auto& instruction : plan.instructions) {
            const CellKey cell{plan.models[m].model_id, instruction};
            for (int r = 0; r < plan.replications; ++r) {
                if (!store.has(cell, r)) items.push_back({m, cell, r});
            }
        }
    }

    std::vector<std::optional<Outcome>> outcomes(items.size());
    std::map<CellKey, std::vector<std::string>> failures;
    std::mutex commit_mutex;
    std::size_t next_commit = 0;
    std::size_t appended = 0;
    std::size_t elicitations = 0;
    std::atomic<std::size_t> next_item{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first_error;

    auto commit_ready = [&] {
        // Caller holds commit_mutex.
        while (next_commit < items.size() && outcomes[next_commit]) {
            auto& outcome = *outcomes[next_commit];
            elicitations += outcome.elicitations;
            if (outcome.record) {
                if (options.stop_after && appended >= *options.stop_after) {
                    stop = true;
                    return;
                }
                store.append(*outcome.record);
                ++appended;
                if (options.on_record) options.on_record(*outcome.record);
            } else {
                failures[items[next_commit].cell].push_back(outcome.failure);
            }
            outcomes[next_commit].reset();
            ++next_commit;
        }
    };

    auto worker = [&] {
        while (!stop) {
            const std::size_t i = next_item.fetch_add(1);
            if (i >= items.size()) return;
            try {
                Outcome outcome = run_item(plan, *providers[items[i].model_index], items[i]);
                std::lock_guard lock(commit_mutex);
                outcomes[i] = std::move(outcome);
                commit_ready();
            } catch (...) {
                std::lock_guard lock(commit_mutex);
                if (!first_error) first_error = std::current_exception();
                stop = true;
                return;
            }
        }
    };

    const int thread_count = static_cast<int>(std::min<std::size_t>(options.parallelism, std::max<std::size_t>(items.size(), 1)));
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    }
    if (first_error) std::rethrow_exception(first_error);

    ExecutionSummary summary;
    summary.elicitations = elicitations;
    summary.appended = appended;
    for (const auto& cell : plan.cells()) {
        CellSummary cs;
        cs.cell = cell;
        cs.planned = plan.replications;
        for (int r = 0; r < plan.replications; ++r) {
            const RunRecord* rec = store.latest(cell, r);
            if (rec == nullptr) {
                ++cs.missing;
            } else if (rec->status == RunStatus::valid) {
                ++cs.valid;
            } else {
                ++cs.invalid;
            }
        }
        if (const auto it = failures.find(cell); it != failures.end()) cs.errors = it->second;
        summary.cells.push_back(std::move(cs));
    }
    return summary;
}

std::vector<RunRecord> load_cell(const RunStore& store, const CellKey& cell) { return store.load_cell(cell); }

}  // namespace dispo
