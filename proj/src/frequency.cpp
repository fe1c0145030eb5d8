#include <algorithm>

#include "dispo/landscape.hpp"

namespace dispo {

std::vector<double> FrequencyMatrix::column(std::size_t c) const {
    std::vector<double> out(values.rows());
    for (std::size_t r = 0; r < values.rows(); ++r) out[r] = values(r, c);
    return out;
}

FrequencyMatrix build_frequency_matrix(const RunStore& store, const std::vector<CellKey>& cells) {
    if (cells.empty()) throw DataError("frequency matrix needs at least one cell");
    const auto& pool = store.pool();

    FrequencyMatrix m;
    m.ids = pool.ids();
    for (const auto& c : pool.constraints) m.elements.push_back(c.element);
    m.cells = cells;
    m.values = Matrix(pool.size(), cells.size());

    // Row index of each id in pool order.
    std::vector<std::size_t> row_of(pool.size() + 1);
    for (std::size_t r = 0; r < m.ids.size(); ++r) row_of[static_cast<std::size_t>(m.ids[r])] = r;

    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto runs = store.load_cell(cells[c]);
        if (runs.empty()) throw DataError("cell " + cells[c].str() + " has no valid runs");
        std::vector<double> counts(pool.size(), 0.0);
        double total = 0.0;
        for (const auto& run : runs) {
            for (int id : run.selected) {
                counts[row_of[static_cast<std::size_t>(id)]] += 1.0;
                total += 1.0;
            }
        }
        for (std::size_t r = 0; r < pool.size(); ++r) m.values(r, c) = counts[r] / total;
    }
    return m;
}

}  // namespace dispo
