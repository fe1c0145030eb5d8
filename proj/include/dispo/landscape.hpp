#pragma once
// Shared-space landscape of constraint selection profiles.
//
// Each constraint is a point whose coordinates are its selection frequencies in
// the included cells. The frequency profiles are centered (no scaling) and
// projected on their top two principal axes; every cell is then drawn as a
// weighted Gaussian density over those points, its weights being the cell's
// own frequency column.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dispo/errors.hpp"
#include "dispo/linalg.hpp"
#include "dispo/pool.hpp"
#include "dispo/run_store.hpp"

namespace dispo {

struct FrequencyMatrix {
    std::vector<int> ids;            // one row per pool constraint, pool order
    std::vector<Element> elements;   // landmark labels
    std::vector<CellKey> cells;      // one column per cell
    Matrix values;                   // rows x cells, each column sums to 1

    [[nodiscard]] std::vector<double> column(std::size_t c) const;
};

/// DataError for unknown cells or cells without valid runs.
FrequencyMatrix build_frequency_matrix(const RunStore& store, const std::vector<CellKey>& cells);

struct PcaModel {
    std::vector<double> column_means;
    Matrix components;  // k x columns, orthonormal rows
    std::vector<double> explained_variance;        // per component, sample variance of the scores
    std::vector<double> explained_variance_ratio;  // share of total variance
    std::vector<double> singular_values;           // all min(rows, columns) values
};

/// Rows are samples. Each component's largest-magnitude loading is made positive.
/// NumericError if the rows carry no variance or `components` is out of range.
PcaModel fit_pca(const Matrix& data, std::size_t components = 2);
Matrix pca_scores(const PcaModel& model, const Matrix& data);

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

struct LandscapeProjection {
    std::vector<int> ids;
    std::vector<Element> elements;
    std::vector<Point2> scores;
    std::vector<CellKey> cells;
    std::vector<std::vector<double>> weights;  // per cell, over constraints, sums to 1
    PcaModel pca;

    [[nodiscard]] std::size_t cell_index(const CellKey& cell) const;
};

/// Fits the PCA on every column of the matrix jointly, so all cells share one space.
/// With a single column the second coordinate is identically zero.
LandscapeProjection project_landscape(const FrequencyMatrix& matrix);

struct Bandwidth {
    double hx = 0.0;
    double hy = 0.0;

    bool operator==(const Bandwidth&) const = default;
};

/// Fewer than two distinct weighted points: no bandwidth can be estimated.
class DegenerateCellError : public NumericError {
public:
    using NumericError::NumericError;
};

/// h = sigma_w * m_eff^(-1/6) per axis, m_eff = 1 / sum w^2. An axis with zero
/// spread borrows the other axis's bandwidth.
Bandwidth weighted_scott_bandwidth(const std::vector<Point2>& points, const std::vector<double>& weights);

struct GridSpec {
    double x0 = 0.0;
    double y0 = 0.0;
    double dx = 0.0;
    double dy = 0.0;
    int nx = 0;
    int ny = 0;

    [[nodiscard]] double x(int i) const noexcept { return x0 + dx * i; }
    [[nodiscard]] double y(int j) const noexcept { return y0 + dy * j; }
    bool operator==(const GridSpec&) const = default;
};

inline constexpr int kDefaultGridResolution = 256;
inline constexpr double kGridPaddingBandwidths = 3.0;

/// Bounding box of all scores padded by 3 x the largest bandwidth among the
/// cells (or the explicit bandwidth), sampled with `resolution` nodes per axis.
GridSpec landscape_grid(const LandscapeProjection& projection, int resolution,
                        const std::optional<Bandwidth>& bandwidth = std::nullopt);

struct Polyline {
    std::vector<Point2> points;
    bool closed = false;

    bool operator==(const Polyline&) const = default;
};

struct ContourSet {
    double level_mass = 0.0;  // highest-density-region mass this level encloses
    double level = 0.0;       // density value
    std::vector<Polyline> polylines;
};

struct DensityField {
    CellKey cell;
    GridSpec grid;
    Bandwidth bandwidth;
    std::vector<double> values;  // row-major, values[j * nx + i] at (x(i), y(j))
    std::vector<ContourSet> contours;

    [[nodiscard]] double at(int i, int j) const noexcept { return values[static_cast<std::size_t>(j) * grid.nx + i]; }
};

/// Weighted Gaussian product-kernel density of the cell on the shared grid.
/// Throws NumericError (zero weight, non-positive bandwidth) or
/// DegenerateCellError (bandwidth requested from < 2 distinct points).
DensityField estimate_density(const LandscapeProjection& projection, const CellKey& cell,
                              int grid_resolution = kDefaultGridResolution,
                              const std::optional<Bandwidth>& bandwidth = std::nullopt);

/// Trapezoid-rule integral of the field over its grid.
double grid_integral(const DensityField& field);

/// Density level whose superlevel set holds `mass` of the grid's mass.
double hdr_level(const DensityField& field, double mass);

/// Area of { density >= level } measured as node count x cell area.
double superlevel_area(const DensityField& field, double level);

/// Marching squares with linear edge interpolation and center-value saddle
/// resolution. Levels must be positive and strictly ascending; returns one
/// polyline set per level (empty where the level exceeds the maximum).
std::vector<std::vector<Polyline>> extract_contours(const DensityField& field, const std::vector<double>& levels);

inline const std::vector<double> kDefaultLevelMasses{0.5, 0.75, 0.9};

/// Fills field.contours for the given mass fractions.
void add_mass_contours(DensityField& field, const std::vector<double>& masses = kDefaultLevelMasses);

/// Absolute shoelace area of a closed polyline.
double polygon_area(const Polyline& polyline);

struct LandscapeOptions {
    int grid_resolution = kDefaultGridResolution;
    std::optional<Bandwidth> bandwidth;
    std::vector<double> level_masses = kDefaultLevelMasses;
};

struct Landscape {
    LandscapeProjection projection;
    std::vector<DensityField> fields;         // non-degenerate cells, projection order
    std::vector<CellKey> degenerate_cells;    // drawn as landmarks only
    std::vector<std::string> warnings;
};

Landscape build_landscape(const FrequencyMatrix& matrix, const LandscapeOptions& options = {});
Landscape build_landscape(const RunStore& store, const std::vector<CellKey>& cells,
                          const LandscapeOptions& options = {});

// ---- rendering ----

enum class RenderFormat { svg, plotdata };

struct RenderStyle {
    std::vector<std::string> colors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};
    std::string font_family = "Helvetica, Arial, sans-serif";
    double font_size = 8.0;
    int width = 900;
    int height = 760;
};

/// {"colors": [...], "font_family": "...", "font_size": n, "width": n, "height": n}
RenderStyle load_render_style(const std::filesystem::path& path);

/// Byte-deterministic for fixed inputs. RenderError on unwritable paths or
/// fields with differing grids.
void render_landscape(const Landscape& landscape, const std::filesystem::path& out, RenderFormat format,
                      const RenderStyle& style = {});

std::string render_svg(const Landscape& landscape, const RenderStyle& style = {});
nlohmann::json plotdata_document(const Landscape& landscape);
/// Rebuilds projection scores, PCA summary and fields from a plot-data document.
Landscape landscape_from_plotdata(const nlohmann::json& doc);

}  // namespace dispo
