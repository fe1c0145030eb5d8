#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "dispo/landscape.hpp"

namespace dispo {

namespace {

// Edge ids: horizontal edge (i,j)-(i+1,j) is 2(j*nx+i), vertical edge (i,j)-(i,j+1) is 2(j*nx+i)+1.
struct EdgeGraph {
    std::vector<std::array<std::int64_t, 2>> adj;
    std::vector<std::int64_t> touched;

    explicit EdgeGraph(std::size_t edges) : adj(edges, {-1, -1}) {}

    void link(std::int64_t a, std::int64_t b) {
        attach(a, b);
        attach(b, a);
    }

    void attach(std::int64_t e, std::int64_t other) {
        auto& slots = adj[static_cast<std::size_t>(e)];
        if (slots[0] < 0) {
            slots[0] = other;
            touched.push_back(e);
        } else {
            slots[1] = other;
        }
    }

    [[nodiscard]] int degree(std::int64_t e) const {
        const auto& s = adj[static_cast<std::size_t>(e)];
        return (s[0] >= 0 ? 1 : 0) + (s[1] >= 0 ? 1 : 0);
    }
};

Point2 edge_point(const DensityField& f, std::int64_t edge, double level) {
    const int nx = f.grid.nx;
    const auto node = static_cast<int>(edge / 2);
    const int i = node % nx;
    const int j = node / nx;
    const bool vertical = (edge % 2) == 1;
    const int i2 = vertical ? i : i + 1;
    const int j2 = vertical ? j + 1 : j;
    const double va = f.at(i, j);
    const double vb = f.at(i2, j2);
    const double t = vb == va ? 0.5 : (level - va) / (vb - va);
    return {f.grid.x(i) + t * (f.grid.x(i2) - f.grid.x(i)), f.grid.y(j) + t * (f.grid.y(j2) - f.grid.y(j))};
}

std::vector<Polyline> trace(const DensityField& f, double level) {
    const int nx = f.grid.nx;
    const int ny = f.grid.ny;
    EdgeGraph graph(2 * static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    auto h = [nx](int i, int j) { return 2 * (static_cast<std::int64_t>(j) * nx + i); };
    auto v = [nx](int i, int j) { return 2 * (static_cast<std::int64_t>(j) * nx + i) + 1; };

    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const double c0 = f.at(i, j);
            const double c1 = f.at(i + 1, j);
            const double c2 = f.at(i + 1, j + 1);
            const double c3 = f.at(i, j + 1);
            const int index = (c0 >= level ? 1 : 0) | (c1 >= level ? 2 : 0) | (c2 >= level ? 4 : 0) |
                              (c3 >= level ? 8 : 0);
            if (index == 0 || index == 15) continue;
            const std::int64_t bottom = h(i, j);
            const std::int64_t right = v(i + 1, j);
            const std::int64_t top = h(i, j + 1);
            const std::int64_t left = v(i, j);
            const bool center_in = 0.25 * (c0 + c1 + c2 + c3) >= level;
            switch (index) {
                case 1: case 14: graph.link(left, bottom); break;
                case 2: case 13: graph.link(bottom, right); break;
                case 3: case 12: graph.link(left, right); break;
                case 4: case 11: graph.link(right, top); break;
                case 6: case 9: graph.link(bottom, top); break;
                case 7: case 8: graph.link(top, left); break;
                case 5:
                    if (center_in) {
                        graph.link(bottom, right);
                        graph.link(top, left);
                    } else {
                        graph.link(left, bottom);
                        graph.link(right, top);
                    }
                    break;
                case 10:
                    if (center_in) {
                        graph.link(left, bottom);
                        graph.link(right, top);
                    } else {
                        graph.link(bottom, right);
                        graph.link(top, left);
                    }
                    break;
                default: break;
            }
        }
    }

    std::vector<char> visited(graph.adj.size(), 0);
    std::vector<Polyline> out;
    auto walk = [&](std::int64_t start, bool closed) {
        Polyline line;
        line.closed = closed;
        std::int64_t prev = -1;
        std::int64_t cur = start;
        while (cur >= 0 && !visited[static_cast<std::size_t>(cur)]) {
            visited[static_cast<std::size_t>(cur)] = 1;
            line.points.push_back(edge_point(f, cur, level));
            const auto& s = graph.adj[static_cast<std::size_t>(cur)];
            const std::int64_t next = s[0] != prev ? s[0] : s[1];
            prev = cur;
            cur = next;
        }
        out.push_back(std::move(line));
    };

    std::sort(graph.touched.begin(), graph.touched.end());
    for (auto e : graph.touched) {
        if (!visited[static_cast<std::size_t>(e)] && graph.degree(e) == 1) walk(e, false);
    }
    for (auto e : graph.touched) {
        if (!visited[static_cast<std::size_t>(e)]) walk(e, true);
    }
    return out;
}

}  // namespace

std::vector<std::vector<Polyline>> extract_contours(const DensityField& field, const std::vector<double>& levels) {
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (!(levels[k] > 0.0)) throw NumericError("contour levels must be positive");
        if (k > 0 && !(levels[k] > levels[k - 1])) throw NumericError("contour levels must be strictly ascending");
    }
    if (field.grid.nx < 2 || field.grid.ny < 2) throw NumericError("contour grid must be at least 2 x 2");
    std::vector<std::vector<Polyline>> out;
    out.reserve(levels.size());
    for (double level : levels) out.push_back(trace(field, level));
    return out;
}

void add_mass_contours(DensityField& field, const std::vector<double>& masses) {
    field.contours.clear();
    for (double mass : masses) {
        ContourSet set;
        set.level_mass = mass;
        set.level = hdr_level(field, mass);
        if (set.level > 0.0) set.polylines = std::move(extract_contours(field, {set.level}).front());
        field.contours.push_back(std::move(set));
    }
}

double polygon_area(const Polyline& polyline) {
    const auto& p = polyline.points;
    if (p.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const auto& a = p[k];
        const auto& b = p[(k + 1) % p.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return std::abs(twice) * 0.5;
}

}  // namespace dispo
