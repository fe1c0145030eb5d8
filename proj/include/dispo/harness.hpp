#pragma once
// Replication grids: model x instruction type x replication index.
//
// The permutation seed of run (cell, index, attempt) is
//   SeedHasher().add(base_seed).add(model).add(instruction).add(index)[.add(attempt) if attempt > 0]
// so two executions of the same plan present identical orderings, and a
// resumed execution picks up exactly the pairs missing from the store.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dispo/instructions.hpp"
#include "dispo/pool.hpp"
#include "dispo/providers.hpp"
#include "dispo/run_store.hpp"

namespace dispo {

struct ExperimentPlan {
    ConstraintPool pool;
    std::vector<ProviderConfig> models;
    std::vector<std::string> instructions;
    InstructionRegistry registry;
    int replications = 160;
    int budget = 20;
    std::uint64_t base_seed = 0;
    /// Elicitation attempts per run before it is recorded invalid (1 + retries).
    int max_attempts = 4;

    /// Throws ConfigError.
    void validate() const;
    [[nodiscard]] std::vector<CellKey> cells() const;
};

/// Plan document: {"pool": path?, "instruction_registry": path?, "models": [...],
/// "instruction_types": [...], "replications", "budget", "base_seed", "max_attempts"}.
/// Relative paths resolve against `base_dir`; a missing pool or registry
/// selects the built-in placeholder pool / registry.
ExperimentPlan plan_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentPlan load_plan(const std::filesystem::path& path);

std::uint64_t derive_seed(std::uint64_t base_seed, const CellKey& cell, int replication, int attempt = 0);

/// RFC 4122 version-4 layout filled from a seed (deterministic run ids).
std::string run_uuid(std::uint64_t seed);

struct CellSummary {
    CellKey cell;
    int planned = 0;
    int valid = 0;
    int invalid = 0;
    int missing = 0;
    std::vector<std::string> errors;

    [[nodiscard]] bool complete() const noexcept { return missing == 0; }
};

struct ExecutionSummary {
    std::vector<CellSummary> cells;
    std::size_t elicitations = 0;
    std::size_t appended = 0;

    [[nodiscard]] bool all_complete() const noexcept;
    [[nodiscard]] std::vector<CellKey> incomplete_cells() const;
};

using ProviderFactory = std::function<std::unique_ptr<Provider>(const ProviderConfig&)>;

struct ExecuteOptions {
    int parallelism = 1;
    /// Defaults to make_provider.
    ProviderFactory provider_factory;
    /// Called after every committed record, under the appender lock.
    std::function<void(const RunRecord&)> on_record;
    /// Stop dispatching once this many records were appended (simulated interruption).
    std::optional<std::size_t> stop_after;
};

/// Runs every (cell, replication) missing from the store. Providers are built
/// up front, so credential problems surface as ConfigError before any run.
/// Records are committed in plan order whatever the worker timing.
ExecutionSummary execute(const ExperimentPlan& plan, RunStore& store, const ExecuteOptions& options = {});

/// Valid records of one cell ordered by replication index.
std::vector<RunRecord> load_cell(const RunStore& store, const CellKey& cell);

}  // namespace dispo
