#include <algorithm>
#include <cmath>

#include "dispo/landscape.hpp"

namespace dispo {

PcaModel fit_pca(const Matrix& data, std::size_t components) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    if (n < 2 || d < 1) throw NumericError("PCA needs at least 2 rows and 1 column");
    if (components < 1 || components > std::min(n, d)) {
        throw NumericError("PCA component count " + std::to_string(components) + " outside [1, " +
                           std::to_string(std::min(n, d)) + "]");
    }

    PcaModel model;
    model.column_means.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) model.column_means[c] += data(r, c);
    }
    for (auto& mean : model.column_means) mean /= static_cast<double>(n);

    Matrix centered(n, d);
    double total_ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            centered(r, c) = data(r, c) - model.column_means[c];
            total_ss += centered(r, c) * centered(r, c);
        }
    }
    if (total_ss == 0.0) throw NumericError("PCA input is degenerate: all rows identical (zero variance)");

    const auto svd = right_singular_system(centered);
    const std::size_t rank_bound = std::min(n, d);
    model.singular_values.assign(svd.singular_values.begin(), svd.singular_values.begin() + rank_bound);

    double sv_total = 0.0;
    for (double s : svd.singular_values) sv_total += s * s;

    model.components = Matrix(components, d);
    for (std::size_t k = 0; k < components; ++k) {
        std::size_t argmax = 0;
        for (std::size_t c = 1; c < d; ++c) {
            if (std::abs(svd.v(c, k)) > std::abs(svd.v(argmax, k))) argmax = c;
        }
        const double sign = svd.v(argmax, k) < 0.0 ? -1.0 : 1.0;
        for (std::size_t c = 0; c < d; ++c) model.components(k, c) = sign * svd.v(c, k);
        const double s2 = svd.singular_values[k] * svd.singular_values[k];
        model.explained_variance.push_back(s2 / static_cast<double>(n - 1));
        model.explained_variance_ratio.push_back(s2 / sv_total);
    }
    return model;
}

Matrix pca_scores(const PcaModel& model, const Matrix& data) {
    const std::size_t d = model.column_means.size();
    if (data.cols() != d) throw NumericError("pca_scores: column count mismatch");
    const std::size_t k = model.components.rows();
    Matrix scores(data.rows(), k);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t comp = 0; comp < k; ++comp) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += (data(r, c) - model.column_means[c]) * model.components(comp, c);
            scores(r, comp) = s;
        }
    }
    return scores;
}

std::size_t LandscapeProjection::cell_index(const CellKey& cell) const {
    const auto it = std::find(cells.begin(), cells.end(), cell);
    if (it == cells.end()) throw DataError("cell " + cell.str() + " is not part of the landscape");
    return static_cast<std::size_t>(it - cells.begin());
}

LandscapeProjection project_landscape(const FrequencyMatrix& matrix) {
    const std::size_t k = std::min<std::size_t>(2, std::min(matrix.values.rows(), matrix.values.cols()));
    LandscapeProjection p;
    p.ids = matrix.ids;
    p.elements = matrix.elements;
    p.cells = matrix.cells;
    p.pca = fit_pca(matrix.values, k);
    const Matrix scores = pca_scores(p.pca, matrix.values);
    p.scores.resize(matrix.values.rows());
    for (std::size_t r = 0; r < scores.rows(); ++r) {
        p.scores[r] = {scores(r, 0), k > 1 ? scores(r, 1) : 0.0};
    }
    for (std::size_t c = 0; c < matrix.cells.size(); ++c) p.weights.push_back(matrix.column(c));
    return p;
}

}  // namespace dispo
