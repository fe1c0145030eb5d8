#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dispo/landscape.hpp"

namespace dispo {

using nlohmann::json;

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

std::string_view landmark_label(Element e) {
    switch (e) {
        case Element::event: return "Ev";
        case Element::style: return "St";
        case Element::character: return "Ch";
        case Element::setting: return "Se";
    }
    return "?";
}

GridSpec shared_grid(const Landscape& landscape) {
    if (landscape.fields.empty()) return landscape_grid(landscape.projection, 2);
    const GridSpec& g = landscape.fields.front().grid;
    for (const auto& f : landscape.fields) {
        if (!(f.grid == g)) throw RenderError("fields of cell " + f.cell.str() + " use a different grid");
    }
    return g;
}

struct Frame {
    double left = 64.0;
    double top = 28.0;
    double right = 0.0;
    double bottom = 0.0;
    double x0 = 0.0;
    double x1 = 1.0;
    double y0 = 0.0;
    double y1 = 1.0;

    [[nodiscard]] double px(double x) const { return left + (x - x0) / (x1 - x0) * (right - left); }
    [[nodiscard]] double py(double y) const { return bottom - (y - y0) / (y1 - y0) * (bottom - top); }
};

double variance_percent(const PcaModel& pca, std::size_t k) {
    return k < pca.explained_variance_ratio.size() ? 100.0 * pca.explained_variance_ratio[k] : 0.0;
}

json grid_json(const GridSpec& g) {
    return {{"x0", g.x0}, {"y0", g.y0}, {"dx", g.dx}, {"dy", g.dy}, {"nx", g.nx}, {"ny", g.ny}};
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    }
    return rows;
}

Matrix matrix_from_json(const json& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.at(0).size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) throw ParseError("plot data: ragged matrix");
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c].get<double>();
    }
    return m;
}

}  // namespace

RenderStyle load_render_style(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open style file " + path.string());
    RenderStyle style;
    try {
        const json doc = json::parse(in);
        if (doc.contains("colors")) style.colors = doc.at("colors").get<std::vector<std::string>>();
        if (doc.contains("font_family")) style.font_family = doc.at("font_family").get<std::string>();
        if (doc.contains("font_size")) style.font_size = doc.at("font_size").get<double>();
        if (doc.contains("width")) style.width = doc.at("width").get<int>();
        if (doc.contains("height")) style.height = doc.at("height").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError("style file " + path.string() + ": " + e.what());
    }
    if (style.colors.empty()) throw ConfigError("style file " + path.string() + ": empty color list");
    if (style.width < 200 || style.height < 200) throw ConfigError("style file " + path.string() + ": canvas too small");
    return style;
}

std::string render_svg(const Landscape& landscape, const RenderStyle& style) {
    const GridSpec g = shared_grid(landscape);
    if (style.colors.empty()) throw RenderError("style has no colors");

    Frame fr;
    fr.right = style.width - 220.0;
    fr.bottom = style.height - 52.0;
    fr.x0 = g.x(0);
    fr.x1 = g.x(g.nx - 1);
    fr.y0 = g.y(0);
    fr.y1 = g.y(g.ny - 1);
    if (!(fr.x1 > fr.x0) || !(fr.y1 > fr.y0)) throw RenderError("landscape grid has zero extent");

    const auto& proj = landscape.projection;
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << style.height
       << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\" font-family=\""
       << xml_escape(style.font_family) << "\" font-size=\"" << fmt("%.2f", style.font_size) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    os << "<rect x=\"" << fmt("%.2f", fr.left) << "\" y=\"" << fmt("%.2f", fr.top) << "\" width=\""
       << fmt("%.2f", fr.right - fr.left) << "\" height=\"" << fmt("%.2f", fr.bottom - fr.top)
       << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"0.8\"/>\n";

    // Ticks.
    for (int t = 0; t <= 4; ++t) {
        const double x = fr.x0 + (fr.x1 - fr.x0) * t / 4.0;
        const double y = fr.y0 + (fr.y1 - fr.y0) * t / 4.0;
        os << "<text x=\"" << fmt("%.2f", fr.px(x)) << "\" y=\"" << fmt("%.2f", fr.bottom + 14.0)
           << "\" text-anchor=\"middle\">" << fmt("%.3f", x) << "</text>\n";
        os << "<text x=\"" << fmt("%.2f", fr.left - 6.0) << "\" y=\"" << fmt("%.2f", fr.py(y) + 3.0)
           << "\" text-anchor=\"end\">" << fmt("%.3f", y) << "</text>\n";
    }
    os << "<text x=\"" << fmt("%.2f", 0.5 * (fr.left + fr.right)) << "\" y=\"" << fmt("%.2f", fr.bottom + 36.0)
       << "\" text-anchor=\"middle\" font-size=\"" << fmt("%.2f", style.font_size + 3.0) << "\">PC1 ("
       << fmt("%.1f", variance_percent(proj.pca, 0)) << "%)</text>\n";
    const double ylab_x = 18.0;
    const double ylab_y = 0.5 * (fr.top + fr.bottom);
    os << "<text x=\"" << fmt("%.2f", ylab_x) << "\" y=\"" << fmt("%.2f", ylab_y) << "\" text-anchor=\"middle\" "
       << "font-size=\"" << fmt("%.2f", style.font_size + 3.0) << "\" transform=\"rotate(-90 "
       << fmt("%.2f", ylab_x) << ' ' << fmt("%.2f", ylab_y) << ")\">PC2 ("
       << fmt("%.1f", variance_percent(proj.pca, 1)) << "%)</text>\n";

    // Contours, innermost drawn last.
    os << "<g fill=\"none\" stroke-linejoin=\"round\">\n";
    for (std::size_t c = 0; c < landscape.fields.size(); ++c) {
        const auto& field = landscape.fields[c];
        const std::string& color = style.colors[c % style.colors.size()];
        std::vector<const ContourSet*> sets;
        for (const auto& s : field.contours) sets.push_back(&s);
        std::stable_sort(sets.begin(), sets.end(),
                         [](const ContourSet* a, const ContourSet* b) { return a->level_mass > b->level_mass; });
        for (const ContourSet* set : sets) {
            const double width = 0.6 + 1.4 * (1.0 - set->level_mass);
            os << "<g stroke=\"" << xml_escape(color) << "\" stroke-width=\"" << fmt("%.2f", width)
               << "\" data-cell=\"" << xml_escape(field.cell.str()) << "\" data-mass=\""
               << fmt("%.2f", set->level_mass) << "\">\n";
            for (const auto& line : set->polylines) {
                if (line.points.size() < 2) continue;
                os << "<path d=\"";
                for (std::size_t k = 0; k < line.points.size(); ++k) {
                    os << (k == 0 ? "M" : " L") << fmt("%.2f", fr.px(line.points[k].x)) << ','
                       << fmt("%.2f", fr.py(line.points[k].y));
                }
                if (line.closed) os << " Z";
                os << "\"/>\n";
            }
            os << "</g>\n";
        }
    }
    os << "</g>\n";

    // Landmarks.
    os << "<g fill=\"#555555\" fill-opacity=\"0.75\" text-anchor=\"middle\">\n";
    for (std::size_t k = 0; k < proj.scores.size(); ++k) {
        os << "<text x=\"" << fmt("%.2f", fr.px(proj.scores[k].x)) << "\" y=\""
           << fmt("%.2f", fr.py(proj.scores[k].y) + 0.35 * style.font_size) << "\">"
           << landmark_label(proj.elements[k]) << "</text>\n";
    }
    os << "</g>\n";

    // Legend.
    const double lx = fr.right + 16.0;
    double ly = fr.top + 10.0;
    for (std::size_t c = 0; c < landscape.fields.size(); ++c) {
        const std::string& color = style.colors[c % style.colors.size()];
        os << "<line x1=\"" << fmt("%.2f", lx) << "\" y1=\"" << fmt("%.2f", ly) << "\" x2=\"" << fmt("%.2f", lx + 18.0)
           << "\" y2=\"" << fmt("%.2f", ly) << "\" stroke=\"" << xml_escape(color) << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fmt("%.2f", lx + 24.0) << "\" y=\"" << fmt("%.2f", ly + 3.0) << "\">"
           << xml_escape(landscape.fields[c].cell.str()) << "</text>\n";
        ly += 16.0;
    }
    for (const auto& cell : landscape.degenerate_cells) {
        os << "<text x=\"" << fmt("%.2f", lx) << "\" y=\"" << fmt("%.2f", ly + 3.0) << "\" fill=\"#777777\">"
           << xml_escape(cell.str()) << " (landmarks only)</text>\n";
        ly += 16.0;
    }
    ly += 8.0;
    if (!landscape.fields.empty()) {
        os << "<text x=\"" << fmt("%.2f", lx) << "\" y=\"" << fmt("%.2f", ly) << "\">Contours: ";
        const auto& sets = landscape.fields.front().contours;
        for (std::size_t k = 0; k < sets.size(); ++k) {
            if (k) os << ", ";
            os << fmt("%g", 100.0 * sets[k].level_mass) << '%';
        }
        os << " HDR</text>\n";
        ly += 14.0;
    }
    os << "<text x=\"" << fmt("%.2f", lx) << "\" y=\"" << fmt("%.2f", ly)
       << "\">Ev Event, St Style, Ch Character, Se Setting</text>\n";
    os << "</svg>\n";
    return os.str();
}

json plotdata_document(const Landscape& landscape) {
    const auto& proj = landscape.projection;
    json doc;
    json cells = json::array();
    for (const auto& c : proj.cells) cells.push_back(c.str());
    doc["pca"] = {{"cells", cells},
                  {"column_means", proj.pca.column_means},
                  {"components", matrix_json(proj.pca.components)},
                  {"explained_variance", proj.pca.explained_variance},
                  {"explained_variance_ratio", proj.pca.explained_variance_ratio},
                  {"singular_values", proj.pca.singular_values}};
    json scores = json::array();
    for (std::size_t k = 0; k < proj.scores.size(); ++k) {
        scores.push_back({{"id", proj.ids[k]},
                          {"element", std::string(element_name(proj.elements[k]))},
                          {"x", proj.scores[k].x},
                          {"y", proj.scores[k].y}});
    }
    doc["scores"] = scores;
    json weights = json::object();
    for (std::size_t c = 0; c < proj.cells.size(); ++c) weights[proj.cells[c].str()] = proj.weights[c];
    doc["weights"] = weights;

    json fields = json::array();
    for (const auto& f : landscape.fields) {
        json contours = json::array();
        for (const auto& set : f.contours) {
            json lines = json::array();
            for (const auto& line : set.polylines) {
                json pts = json::array();
                for (const auto& p : line.points) pts.push_back({p.x, p.y});
                lines.push_back({{"closed", line.closed}, {"points", pts}});
            }
            contours.push_back({{"level_mass", set.level_mass}, {"level", set.level}, {"polylines", lines}});
        }
        fields.push_back({{"cell", f.cell.str()},
                          {"bandwidth", {{"hx", f.bandwidth.hx}, {"hy", f.bandwidth.hy}}},
                          {"grid", grid_json(f.grid)},
                          {"density", f.values},
                          {"contours", contours}});
    }
    doc["cells"] = fields;
    json degenerate = json::array();
    for (const auto& c : landscape.degenerate_cells) degenerate.push_back(c.str());
    doc["degenerate_cells"] = degenerate;
    doc["warnings"] = landscape.warnings;
    return doc;
}

Landscape landscape_from_plotdata(const json& doc) {
    Landscape out;
    try {
        auto& proj = out.projection;
        const auto& pca = doc.at("pca");
        for (const auto& c : pca.at("cells")) proj.cells.push_back(CellKey::parse(c.get<std::string>()));
        proj.pca.column_means = pca.at("column_means").get<std::vector<double>>();
        proj.pca.components = matrix_from_json(pca.at("components"));
        proj.pca.explained_variance = pca.at("explained_variance").get<std::vector<double>>();
        proj.pca.explained_variance_ratio = pca.at("explained_variance_ratio").get<std::vector<double>>();
        proj.pca.singular_values = pca.at("singular_values").get<std::vector<double>>();
        for (const auto& s : doc.at("scores")) {
            const auto element = parse_element(s.at("element").get<std::string>());
            if (!element) throw ParseError("plot data: unknown element " + s.at("element").dump());
            proj.ids.push_back(s.at("id").get<int>());
            proj.elements.push_back(*element);
            proj.scores.push_back({s.at("x").get<double>(), s.at("y").get<double>()});
        }
        if (doc.contains("weights")) {
            for (const auto& c : proj.cells) proj.weights.push_back(doc.at("weights").at(c.str()).get<std::vector<double>>());
        }
        for (const auto& f : doc.at("cells")) {
            DensityField field;
            field.cell = CellKey::parse(f.at("cell").get<std::string>());
            field.bandwidth = {f.at("bandwidth").at("hx").get<double>(), f.at("bandwidth").at("hy").get<double>()};
            const auto& g = f.at("grid");
            field.grid = {g.at("x0").get<double>(), g.at("y0").get<double>(), g.at("dx").get<double>(),
                          g.at("dy").get<double>(), g.at("nx").get<int>(),    g.at("ny").get<int>()};
            field.values = f.at("density").get<std::vector<double>>();
            if (field.values.size() != static_cast<std::size_t>(field.grid.nx) * static_cast<std::size_t>(field.grid.ny)) {
                throw ParseError("plot data: density size does not match grid for cell " + field.cell.str());
            }
            for (const auto& c : f.at("contours")) {
                ContourSet set;
                set.level_mass = c.at("level_mass").get<double>();
                set.level = c.at("level").get<double>();
                for (const auto& l : c.at("polylines")) {
                    Polyline line;
                    line.closed = l.at("closed").get<bool>();
                    for (const auto& p : l.at("points")) line.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                    set.polylines.push_back(std::move(line));
                }
                field.contours.push_back(std::move(set));
            }
            out.fields.push_back(std::move(field));
        }
        for (const auto& c : doc.at("degenerate_cells")) out.degenerate_cells.push_back(CellKey::parse(c.get<std::string>()));
        if (doc.contains("warnings")) out.warnings = doc.at("warnings").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("plot data: ") + e.what());
    }
    return out;
}

void render_landscape(const Landscape& landscape, const std::filesystem::path& out, RenderFormat format,
                      const RenderStyle& style) {
    std::string text;
    if (format == RenderFormat::svg) {
        text = render_svg(landscape, style);
    } else {
        shared_grid(landscape);
        text = plotdata_document(landscape).dump() + "\n";
    }
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw RenderError("cannot write " + out.string());
    f << text;
    f.flush();
    if (!f) throw RenderError("failed writing " + out.string());
}

}  // namespace dispo
