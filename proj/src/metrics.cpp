#include "dispo/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <sstream>

#include "dispo/errors.hpp"
#include "dispo/simd/kernels.hpp"

namespace dispo {

namespace {

int max_id_of(std::span<const int> ids) {
    int m = 0;
    for (int id : ids) {
        if (id < 0) throw NumericError("negative constraint id " + std::to_string(id));
        m = std::max(m, id);
    }
    return m;
}

std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

}  // namespace

IdBitset::IdBitset(std::span<const int> ids, int max_id)
    : words_(static_cast<std::size_t>(max_id) / 64 + 1, 0) {
    for (int id : ids) {
        if (id < 0 || id > max_id) throw NumericError("id " + std::to_string(id) + " outside bitset range");
        words_[static_cast<std::size_t>(id) / 64] |= std::uint64_t{1} << (static_cast<unsigned>(id) % 64);
    }
}

std::size_t IdBitset::count() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

double jaccard(std::span<const int> a, std::span<const int> b) {
    if (a.empty() && b.empty()) throw NumericError("jaccard of two empty sets is undefined");
    const int max_id = std::max(max_id_of(a), max_id_of(b));
    const IdBitset sa(a, max_id);
    const IdBitset sb(b, max_id);
    const auto inter = simd::popcount_and(sa.words(), sb.words());
    const auto uni = simd::popcount_or(sa.words(), sb.words());
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_pairwise_jaccard(const std::vector<std::vector<int>>& runs) {
    if (runs.size() < 2) throw NumericError("mean pairwise Jaccard needs at least 2 runs");
    int max_id = 0;
    for (const auto& r : runs) {
        if (r.empty()) throw NumericError("mean pairwise Jaccard: empty run");
        max_id = std::max(max_id, max_id_of(r));
    }
    std::vector<IdBitset> sets;
    sets.reserve(runs.size());
    for (const auto& r : runs) sets.emplace_back(r, max_id);

    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            const auto inter = simd::popcount_and(sets[i].words(), sets[j].words());
            const auto uni = simd::popcount_or(sets[i].words(), sets[j].words());
            total += static_cast<double>(inter) / static_cast<double>(uni);
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

void FrequencyDistribution::add(std::span<const int> ids) {
    for (int id : ids) {
        ++counts[id];
        ++total;
    }
}

Diversity diversity(const FrequencyDistribution& dist) {
    if (dist.total == 0) throw NumericError("diversity of an empty distribution");
    // sum p^2 = sum c^2 / T^2; both integers are exact in a double, so EN is correctly rounded.
    std::uint64_t sum_c2 = 0;
    for (const auto& [_, count] : dist.counts) sum_c2 += count * count;
    const double t = static_cast<double>(dist.total);
    Diversity d;
    d.effective_number = (t * t) / static_cast<double>(sum_c2);
    d.gini_simpson = 1.0 - 1.0 / d.effective_number;
    return d;
}

CellMetrics cell_metrics(const std::vector<RunRecord>& runs, std::size_t excluded_runs) {
    if (runs.size() < 2) throw NumericError("cell metrics need at least 2 valid runs");
    const CellKey& cell = runs.front().cell;
    std::vector<std::vector<int>> sets;
    FrequencyDistribution dist;
    for (const auto& r : runs) {
        if (r.cell != cell) throw DataError("cell metrics: mixed cells " + cell.str() + " and " + r.cell.str());
        if (r.status != RunStatus::valid) throw DataError("cell metrics: invalid run " + r.run_id);
        sets.push_back(r.selected);
        dist.add(r.selected);
    }
    CellMetrics m;
    m.cell = cell;
    m.jaccard_mean = mean_pairwise_jaccard(sets);
    const auto d = diversity(dist);
    m.gini_simpson = d.gini_simpson;
    m.effective_number = d.effective_number;
    m.unique_constraints = dist.counts.size();
    m.run_count = runs.size();
    m.excluded_runs = excluded_runs;
    return m;
}

MetricsReport build_report(const RunStore& store, const std::optional<CellKey>& only) {
    if (store.empty()) throw DataError("store " + store.path().string() + " holds no runs");
    std::vector<CellKey> cells;
    if (only) {
        const auto all = store.cells();
        if (std::find(all.begin(), all.end(), *only) == all.end()) {
            throw DataError("store has no cell " + only->str());
        }
        cells.push_back(*only);
    } else {
        cells = store.cells();
    }
    MetricsReport report;
    for (const auto& cell : cells) {
        report.rows.push_back(cell_metrics(store.load_cell(cell), store.excluded_count(cell)));
    }
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const CellMetrics& a, const CellMetrics& b) {
        if (a.jaccard_mean != b.jaccard_mean) return a.jaccard_mean > b.jaccard_mean;
        return a.cell < b.cell;
    });
    return report;
}

std::string format_report_tsv(const MetricsReport& report, int precision) {
    std::ostringstream out;
    out << "model\tinstruction_type\tjaccard\tgini_simpson\teffective_number\tunique_constraints\truns\texcluded\n";
    for (const auto& r : report.rows) {
        out << r.cell.model << '\t' << r.cell.instruction << '\t' << fixed(r.jaccard_mean, precision) << '\t'
            << fixed(r.gini_simpson, precision) << '\t' << fixed(r.effective_number, precision) << '\t'
            << r.unique_constraints << '\t' << r.run_count << '\t' << r.excluded_runs << '\n';
    }
    return out.str();
}

nlohmann::json report_to_json(const MetricsReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"model", r.cell.model},
                        {"instruction_type", r.cell.instruction},
                        {"jaccard", r.jaccard_mean},
                        {"gini_simpson", r.gini_simpson},
                        {"effective_number", r.effective_number},
                        {"unique_constraints", r.unique_constraints},
                        {"runs", r.run_count},
                        {"excluded", r.excluded_runs}});
    }
    return {{"rows", rows}};
}

MetricsReport report_from_json(const nlohmann::json& doc) {
    MetricsReport report;
    try {
        for (const auto& row : doc.at("rows")) {
            CellMetrics m;
            m.cell = {row.at("model").get<std::string>(), row.at("instruction_type").get<std::string>()};
            m.jaccard_mean = row.at("jaccard").get<double>();
            m.gini_simpson = row.at("gini_simpson").get<double>();
            m.effective_number = row.at("effective_number").get<double>();
            m.unique_constraints = row.at("unique_constraints").get<std::size_t>();
            m.run_count = row.at("runs").get<std::size_t>();
            m.excluded_runs = row.at("excluded").get<std::size_t>();
            report.rows.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("metrics report: ") + e.what());
    }
    return report;
}

std::vector<JaccardDelta> jaccard_deltas(const MetricsReport& report) {
    std::map<std::string, std::vector<const CellMetrics*>> by_model;
    for (const auto& r : report.rows) by_model[r.cell.model].push_back(&r);
    std::vector<JaccardDelta> out;
    for (auto& [model, rows] : by_model) {
        std::sort(rows.begin(), rows.end(),
                  [](const CellMetrics* a, const CellMetrics* b) { return a->cell.instruction < b->cell.instruction; });
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = i + 1; j < rows.size(); ++j) {
                out.push_back({model, rows[i]->cell.instruction, rows[j]->cell.instruction,
                               rows[i]->jaccard_mean - rows[j]->jaccard_mean});
            }
        }
    }
    return out;
}

std::string format_deltas_tsv(const std::vector<JaccardDelta>& deltas, int precision) {
    std::ostringstream out;
    out << "model\tinstruction_a\tinstruction_b\tdelta_jaccard\n";
    for (const auto& d : deltas) {
        out << d.model << '\t' << d.instruction_a << '\t' << d.instruction_b << '\t' << fixed(d.delta, precision)
            << '\n';
    }
    return out.str();
}

}  // namespace dispo
