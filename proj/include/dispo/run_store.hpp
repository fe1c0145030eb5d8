#pragma once
// Append-only JSONL run log.
//
// Line 1 is a header {"schema": "dispo.runlog", "version": 1, "pool": {...}}
// embedding the pool the runs were drawn from. Every further line is one
// RunRecord. Records are never rewritten; a later record for the same
// (cell, replication) supersedes earlier ones. A torn final line (crash during
// append) is ignored on load and cut off before the next append.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dispo/pool.hpp"

namespace dispo {

inline constexpr const char* kRunLogSchema = "dispo.runlog";
inline constexpr int kRunLogVersion = 1;

struct CellKey {
    std::string model;
    std::string instruction;

    auto operator<=>(const CellKey&) const = default;

    /// "model:instruction"
    [[nodiscard]] std::string str() const { return model + ":" + instruction; }
    /// Splits at the last ':'. Throws ConfigError if there is none.
    static CellKey parse(const std::string& text);
};

enum class RunStatus { valid, invalid };

struct RunRecord {
    std::string run_id;
    CellKey cell;
    int replication = 0;
    int attempt = 0;
    std::uint64_t permutation_seed = 0;
    std::vector<int> selected;
    std::vector<std::string> justifications;
    std::string compatibility;
    std::string raw_payload;
    RunStatus status = RunStatus::valid;
    std::string error;
    std::optional<std::string> supersedes;
    std::optional<std::string> started_at;
    std::optional<std::string> finished_at;
    nlohmann::json provider = nlohmann::json::object();

    bool operator==(const RunRecord&) const = default;
};

nlohmann::json run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& doc);

class RunStore {
public:
    /// Opens or creates the log. An existing log must embed an identical pool
    /// (ConfigError otherwise).
    static RunStore open(const std::filesystem::path& path, const ConstraintPool& pool);
    /// Opens an existing log, taking the pool from its header. DataError if absent.
    static RunStore open_existing(const std::filesystem::path& path);

    RunStore(RunStore&&) noexcept = default;
    RunStore& operator=(RunStore&&) noexcept = default;

    /// Writes one line and flushes. Safe to call from several threads.
    void append(const RunRecord& record);
    /// Appends an invalid record superseding the current one at (cell, replication).
    void invalidate(const CellKey& cell, int replication, const std::string& reason);

    [[nodiscard]] const ConstraintPool& pool() const noexcept { return pool_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

    /// True if any record (valid or invalid) exists for the pair.
    [[nodiscard]] bool has(const CellKey& cell, int replication) const;
    [[nodiscard]] const RunRecord* latest(const CellKey& cell, int replication) const;
    [[nodiscard]] std::vector<CellKey> cells() const;
    [[nodiscard]] bool empty() const;
    /// Lines in the log, excluding the header.
    [[nodiscard]] std::size_t record_count() const;

    /// Valid current records of a cell ordered by replication. DataError for unknown cells.
    [[nodiscard]] std::vector<RunRecord> load_cell(const CellKey& cell) const;
    /// Current records of a cell whose status is invalid.
    [[nodiscard]] std::size_t excluded_count(const CellKey& cell) const;

private:
    RunStore() = default;
    void load();
    void index(RunRecord record);

    std::filesystem::path path_;
    ConstraintPool pool_;
    std::map<CellKey, std::map<int, RunRecord>> current_;
    std::size_t lines_ = 0;
    std::unique_ptr<std::ofstream> out_;
    std::unique_ptr<std::mutex> mutex_;
};

}  // namespace dispo
