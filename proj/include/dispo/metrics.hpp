#pragma once
// Consistency and diversity of repeated selections.
//
//   J(A, B) = |A n B| / |A u B|                (consistency, averaged over run pairs)
//   GS = 1 - sum p_k^2,  EN = 1 / sum p_k^2     (diversity; p_k = share of all selections in the cell)
//
// GS is computed as 1 - 1/EN so the pair agrees exactly.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dispo/run_store.hpp"

namespace dispo {

/// Fixed-width bitset over constraint ids.
class IdBitset {
public:
    IdBitset(std::span<const int> ids, int max_id);

    [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return words_; }
    [[nodiscard]] std::size_t count() const noexcept;

private:
    std::vector<std::uint64_t> words_;
};

/// Throws NumericError if both sets are empty.
double jaccard(std::span<const int> a, std::span<const int> b);

/// Mean J over all unordered pairs. Throws NumericError for fewer than 2 runs.
double mean_pairwise_jaccard(const std::vector<std::vector<int>>& runs);

struct FrequencyDistribution {
    std::map<int, std::uint64_t> counts;
    std::uint64_t total = 0;

    void add(std::span<const int> ids);
};

struct Diversity {
    double gini_simpson = 0.0;
    double effective_number = 0.0;
};

/// Throws NumericError for an empty distribution.
Diversity diversity(const FrequencyDistribution& dist);

struct CellMetrics {
    CellKey cell;
    double jaccard_mean = 0.0;
    double gini_simpson = 0.0;
    double effective_number = 0.0;
    std::size_t unique_constraints = 0;
    std::size_t run_count = 0;
    std::size_t excluded_runs = 0;
};

/// Needs >= 2 valid runs of one cell (NumericError / DataError otherwise).
CellMetrics cell_metrics(const std::vector<RunRecord>& runs, std::size_t excluded_runs = 0);

struct MetricsReport {
    /// Sorted by jaccard_mean descending.
    std::vector<CellMetrics> rows;
};

/// All cells of the store, or only `only`. DataError when the store is empty
/// or the requested cell is absent.
MetricsReport build_report(const RunStore& store, const std::optional<CellKey>& only = std::nullopt);

/// model, instruction_type, jaccard, gini_simpson, effective_number,
/// unique_constraints, runs, excluded (tab-separated, header first).
std::string format_report_tsv(const MetricsReport& report, int precision = 4);
nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& doc);

struct JaccardDelta {
    std::string model;
    std::string instruction_a;
    std::string instruction_b;
    double delta = 0.0;  // J(a) - J(b)
};

/// Within-model differences of mean J between every pair of instruction types.
std::vector<JaccardDelta> jaccard_deltas(const MetricsReport& report);
std::string format_deltas_tsv(const std::vector<JaccardDelta>& deltas, int precision = 4);

}  // namespace dispo
