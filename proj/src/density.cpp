#include <algorithm>
#include <cmath>
#include <numbers>

#include "dispo/landscape.hpp"
#include "dispo/simd/kernels.hpp"

namespace dispo {

namespace {

std::vector<double> kernel_profile(const GridSpec& grid, bool along_x, double center, double h) {
    const int n = along_x ? grid.nx : grid.ny;
    const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * h);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double u = ((along_x ? grid.x(i) : grid.y(i)) - center) / h;
        out[static_cast<std::size_t>(i)] = norm * std::exp(-0.5 * u * u);
    }
    return out;
}

}  // namespace

Bandwidth weighted_scott_bandwidth(const std::vector<Point2>& points, const std::vector<double>& weights) {
    if (points.size() != weights.size()) throw NumericError("bandwidth: points and weights differ in length");
    double total = 0.0;
    std::size_t support = 0;
    for (double w : weights) {
        if (w < 0.0) throw NumericError("bandwidth: negative weight");
        total += w;
        support += w > 0.0 ? 1 : 0;
    }
    if (total <= 0.0) throw NumericError("bandwidth: zero total weight");
    if (support < 2) throw DegenerateCellError("fewer than 2 distinct weighted points");

    double mx = 0.0;
    double my = 0.0;
    double sum_w2 = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        const double w = weights[k] / total;
        mx += w * points[k].x;
        my += w * points[k].y;
        sum_w2 += w * w;
    }
    double vx = 0.0;
    double vy = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        const double w = weights[k] / total;
        vx += w * (points[k].x - mx) * (points[k].x - mx);
        vy += w * (points[k].y - my) * (points[k].y - my);
    }
    const double factor = std::pow(1.0 / sum_w2, -1.0 / 6.0);
    Bandwidth h{std::sqrt(vx) * factor, std::sqrt(vy) * factor};
    if (h.hx <= 0.0 && h.hy <= 0.0) throw DegenerateCellError("weighted points coincide");
    if (h.hx <= 0.0) h.hx = h.hy;
    if (h.hy <= 0.0) h.hy = h.hx;
    return h;
}

GridSpec landscape_grid(const LandscapeProjection& projection, int resolution, const std::optional<Bandwidth>& bandwidth) {
    if (resolution < 2) throw NumericError("grid resolution must be at least 2");
    if (projection.scores.empty()) throw NumericError("landscape has no points");

    double min_x = projection.scores.front().x;
    double max_x = min_x;
    double min_y = projection.scores.front().y;
    double max_y = min_y;
    for (const auto& p : projection.scores) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }

    double h_max = 0.0;
    if (bandwidth) {
        h_max = std::max(bandwidth->hx, bandwidth->hy);
    } else {
        for (const auto& w : projection.weights) {
            try {
                const auto h = weighted_scott_bandwidth(projection.scores, w);
                h_max = std::max({h_max, h.hx, h.hy});
            } catch (const NumericError&) {
                // degenerate or empty cells do not widen the shared extent
            }
        }
        if (h_max <= 0.0) {
            const double span = std::max(max_x - min_x, max_y - min_y);
            h_max = span > 0.0 ? 0.05 * span : 1.0;
        }
    }
    if (!(h_max > 0.0)) throw NumericError("non-positive bandwidth");

    const double pad = kGridPaddingBandwidths * h_max;
    GridSpec g;
    g.nx = resolution;
    g.ny = resolution;
    g.x0 = min_x - pad;
    g.y0 = min_y - pad;
    g.dx = (max_x + pad - g.x0) / (resolution - 1);
    g.dy = (max_y + pad - g.y0) / (resolution - 1);
    return g;
}

DensityField estimate_density(const LandscapeProjection& projection, const CellKey& cell, int grid_resolution,
                              const std::optional<Bandwidth>& bandwidth) {
    const std::size_t c = projection.cell_index(cell);
    const auto& raw_weights = projection.weights[c];
    double total = 0.0;
    for (double w : raw_weights) total += w;
    if (!(total > 0.0)) throw NumericError("cell " + cell.str() + " has zero total weight");

    DensityField field;
    field.cell = cell;
    field.bandwidth = bandwidth ? *bandwidth : weighted_scott_bandwidth(projection.scores, raw_weights);
    if (!(field.bandwidth.hx > 0.0) || !(field.bandwidth.hy > 0.0)) {
        throw NumericError("non-positive bandwidth for cell " + cell.str());
    }
    field.grid = landscape_grid(projection, grid_resolution, bandwidth);

    const auto& g = field.grid;
    std::vector<std::vector<double>> gx;
    std::vector<std::vector<double>> gy;
    std::vector<double> weights;
    for (std::size_t k = 0; k < projection.scores.size(); ++k) {
        if (raw_weights[k] <= 0.0) continue;
        weights.push_back(raw_weights[k] / total);
        gx.push_back(kernel_profile(g, true, projection.scores[k].x, field.bandwidth.hx));
        gy.push_back(kernel_profile(g, false, projection.scores[k].y, field.bandwidth.hy));
    }

    field.values.assign(static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny), 0.0);
    for (int j = 0; j < g.ny; ++j) {
        std::span<double> row(field.values.data() + static_cast<std::size_t>(j) * g.nx, static_cast<std::size_t>(g.nx));
        for (std::size_t k = 0; k < weights.size(); ++k) {
            const double a = weights[k] * gy[k][static_cast<std::size_t>(j)];
            if (a == 0.0) continue;
            simd::axpy(a, gx[k], row);
        }
    }
    return field;
}

double grid_integral(const DensityField& field) {
    const auto& g = field.grid;
    std::vector<double> row_integrals(static_cast<std::size_t>(g.ny));
    for (int j = 0; j < g.ny; ++j) {
        std::span<const double> row(field.values.data() + static_cast<std::size_t>(j) * g.nx,
                                    static_cast<std::size_t>(g.nx));
        double s = simd::sum(row) - 0.5 * (row.front() + row.back());
        if (j == 0 || j == g.ny - 1) s *= 0.5;
        row_integrals[static_cast<std::size_t>(j)] = s;
    }
    return simd::sum(row_integrals) * g.dx * g.dy;
}

double hdr_level(const DensityField& field, double mass) {
    if (!(mass > 0.0 && mass <= 1.0)) throw NumericError("HDR mass must lie in (0, 1]");
    std::vector<double> sorted = field.values;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double target = mass * simd::sum(sorted);
    double acc = 0.0;
    for (double v : sorted) {
        acc += v;
        if (acc >= target) return v;
    }
    return sorted.back();
}

double superlevel_area(const DensityField& field, double level) {
    const auto n = std::count_if(field.values.begin(), field.values.end(), [&](double v) { return v >= level; });
    return static_cast<double>(n) * field.grid.dx * field.grid.dy;
}

Landscape build_landscape(const FrequencyMatrix& matrix, const LandscapeOptions& options) {
    Landscape out;
    out.projection = project_landscape(matrix);
    for (const auto& cell : out.projection.cells) {
        try {
            auto field = estimate_density(out.projection, cell, options.grid_resolution, options.bandwidth);
            add_mass_contours(field, options.level_masses);
            out.fields.push_back(std::move(field));
        } catch (const DegenerateCellError& e) {
            out.degenerate_cells.push_back(cell);
            out.warnings.push_back("cell " + cell.str() + ": " + e.what() + "; drawn as landmarks only");
        }
    }
    return out;
}

Landscape build_landscape(const RunStore& store, const std::vector<CellKey>& cells, const LandscapeOptions& options) {
    return build_landscape(build_frequency_matrix(store, cells), options);
}

}  // namespace dispo
