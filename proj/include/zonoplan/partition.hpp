#ifndef ZONOPLAN_PARTITION_HPP_
#define ZONOPLAN_PARTITION_HPP_

#include "core.hpp"
#include "polygon.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace zonoplan
{

/// 2-D environment: outer boundary, keep-out obstacles, noise-restricted
/// regions and elevated-cost regions (with their per-region cost).
struct PolygonMap
{
    Polygon boundary;
    std::vector<Polygon> obstacles;
    std::vector<Polygon> noise_regions;
    std::vector<std::pair<Polygon, double>> cost_regions;
};

/// Convex decomposition of the map. Free cells include elevated-cost cells
/// (which carry a nonzero entry in cell_costs); noise cells are partitioned
/// separately. cell_costs runs over [free_cells..., noise_cells...].
struct ConvexPartition
{
    std::vector<Polygon> free_cells;
    std::vector<Polygon> noise_cells;
    Eigen::VectorXd cell_costs;

    int num_cells() const { return static_cast<int>(free_cells.size() + noise_cells.size()); }

    const Polygon& cell(int i) const
    {
        return i < static_cast<int>(free_cells.size())
                   ? free_cells[static_cast<size_t>(i)]
                   : noise_cells[static_cast<size_t>(i) - free_cells.size()];
    }

    bool is_noise_cell(int i) const { return i >= static_cast<int>(free_cells.size()); }
};

namespace geom
{

/// Ear-clipping triangulation of a weakly simple CCW polygon (bridge
/// duplicates allowed). Returns index triples into pts.
inline std::vector<std::array<int, 3>> ear_clip(const std::vector<Eigen::Vector2d>& pts)
{
    const int n = static_cast<int>(pts.size());
    detail::require(n >= 3, "ear_clip: need at least 3 vertices");
    std::vector<int> active(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        active[static_cast<size_t>(i)] = i;
    std::vector<std::array<int, 3>> tris;

    auto strictly_inside = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                               const Eigen::Vector2d& p) {
        const double eps = 1e-12;
        const double d1 = cross2(b - a, p - a);
        const double d2 = cross2(c - b, p - b);
        const double d3 = cross2(a - c, p - c);
        return d1 > eps && d2 > eps && d3 > eps;
    };

    while (active.size() > 3)
    {
        const int m = static_cast<int>(active.size());
        int clip = -1;
        bool degenerate = false;
        for (int i = 0; i < m && clip < 0; ++i)
        {
            const int ia = active[static_cast<size_t>((i + m - 1) % m)];
            const int ib = active[static_cast<size_t>(i)];
            const int ic = active[static_cast<size_t>((i + 1) % m)];
            const Eigen::Vector2d& a = pts[static_cast<size_t>(ia)];
            const Eigen::Vector2d& b = pts[static_cast<size_t>(ib)];
            const Eigen::Vector2d& c = pts[static_cast<size_t>(ic)];
            const double cr = cross2(b - a, c - b);
            const double scale = std::max(1.0, (b - a).norm() * (c - b).norm());
            if (cr < -1e-12 * scale)
                continue; // reflex
            if (cr <= 1e-12 * scale)
            {
                // zero-area ear: removable if b lies on segment a-c
                if (dist_point_segment(b, a, c) <= 1e-9)
                {
                    clip = i;
                    degenerate = true;
                }
                continue;
            }
            bool blocked = false;
            for (int j = 0; j < m && !blocked; ++j)
            {
                const int ij = active[static_cast<size_t>(j)];
                if (ij == ia || ij == ib || ij == ic)
                    continue;
                const Eigen::Vector2d& p = pts[static_cast<size_t>(ij)];
                if ((p - a).norm() < 1e-12 || (p - b).norm() < 1e-12 || (p - c).norm() < 1e-12)
                    continue; // coincident duplicate (bridge vertex)
                if (strictly_inside(a, b, c, p))
                    blocked = true;
                else if (dist_point_segment(p, a, b) <= 1e-9 || dist_point_segment(p, b, c) <= 1e-9 ||
                         dist_point_segment(p, c, a) <= 1e-9)
                    blocked = true; // vertex exactly on the ear boundary
            }
            if (!blocked)
                clip = i;
        }
        if (clip < 0)
            throw std::runtime_error("ear_clip: no ear found (degenerate polygon)");
        const int m2 = static_cast<int>(active.size());
        if (!degenerate)
            tris.push_back({active[static_cast<size_t>((clip + m2 - 1) % m2)], active[static_cast<size_t>(clip)],
                            active[static_cast<size_t>((clip + 1) % m2)]});
        active.erase(active.begin() + clip);
    }
    const double last_cr = cross2(pts[static_cast<size_t>(active[1])] - pts[static_cast<size_t>(active[0])],
                                  pts[static_cast<size_t>(active[2])] - pts[static_cast<size_t>(active[1])]);
    if (last_cr > 1e-12)
        tris.push_back({active[0], active[1], active[2]});
    return tris;
}

/// Unions holes that touch along shared boundary segments (e.g. cost regions
/// flanking an obstacle). Inputs are simple polygons with pairwise disjoint
/// interiors; edges are split at other polygons' vertices, coincident
/// opposite-direction edges cancel, and the remaining edges are traced into
/// merged loops. Regions touching at a single point are rejected.
inline std::vector<Polygon> union_touching_holes(const std::vector<Polygon>& holes)
{
    if (holes.size() <= 1)
        return holes;

    std::vector<Eigen::Vector2d> nodes;
    auto node_id = [&](const Eigen::Vector2d& p) {
        for (size_t i = 0; i < nodes.size(); ++i)
            if ((nodes[i] - p).cwiseAbs().maxCoeff() <= 1e-9)
                return static_cast<int>(i);
        nodes.push_back(p);
        return static_cast<int>(nodes.size() - 1);
    };

    std::vector<Eigen::Vector2d> all_verts;
    for (const auto& h : holes)
        all_verts.insert(all_verts.end(), h.begin(), h.end());

    std::vector<std::pair<int, int>> edges;
    for (const auto& h : holes)
    {
        const Polygon poly = make_ccw(simplify(h));
        const size_t n = poly.size();
        for (size_t i = 0; i < n; ++i)
        {
            const Eigen::Vector2d a = poly[i];
            const Eigen::Vector2d b = poly[(i + 1) % n];
            // split at other-polygon vertices lying on the open segment
            std::vector<std::pair<double, Eigen::Vector2d>> cuts;
            const Eigen::Vector2d d = b - a;
            const double len2 = d.squaredNorm();
            for (const auto& v : all_verts)
            {
                const double t = (v - a).dot(d) / len2;
                if (t <= 1e-12 || t >= 1.0 - 1e-12)
                    continue;
                if (dist_point_segment(v, a, b) <= 1e-9)
                    cuts.emplace_back(t, v);
            }
            std::sort(cuts.begin(), cuts.end(),
                      [](const auto& x, const auto& y) { return x.first < y.first; });
            Eigen::Vector2d prev = a;
            for (const auto& [t, v] : cuts)
            {
                if ((v - prev).cwiseAbs().maxCoeff() > 1e-9)
                    edges.emplace_back(node_id(prev), node_id(v));
                prev = v;
            }
            if ((b - prev).cwiseAbs().maxCoeff() > 1e-9)
                edges.emplace_back(node_id(prev), node_id(b));
        }
    }

    // cancel coincident opposite edges
    std::vector<char> dead(edges.size(), 0);
    for (size_t i = 0; i < edges.size(); ++i)
    {
        if (dead[i])
            continue;
        for (size_t j = i + 1; j < edges.size(); ++j)
        {
            if (dead[j])
                continue;
            if (edges[i].first == edges[j].second && edges[i].second == edges[j].first)
            {
                dead[i] = dead[j] = 1;
                break;
            }
        }
    }

    std::map<int, std::vector<size_t>> out_edges;
    size_t remaining = 0;
    for (size_t i = 0; i < edges.size(); ++i)
        if (!dead[i])
        {
            out_edges[edges[i].first].push_back(i);
            ++remaining;
        }
    for (const auto& [v, outs] : out_edges)
        detail::require(outs.size() == 1, "map regions touch at a single point; not supported");

    std::vector<Polygon> merged;
    std::vector<char> used(edges.size(), 0);
    for (size_t start = 0; start < edges.size(); ++start)
    {
        if (dead[start] || used[start])
            continue;
        Polygon loop;
        size_t e = start;
        while (!used[e])
        {
            used[e] = 1;
            loop.push_back(nodes[static_cast<size_t>(edges[e].first)]);
            const auto it = out_edges.find(edges[e].second);
            detail::require(it != out_edges.end(), "region union: open boundary");
            e = it->second.front();
        }
        loop = simplify(loop);
        detail::require(signed_area(loop) > 0.0,
                        "map regions enclose a free pocket; not supported");
        merged.push_back(std::move(loop));
    }
    return merged;
}

/// Splices CW holes into the CCW outer polygon via bridge edges from each
/// hole's maximal-x vertex to its nearest visible outer vertex.
inline std::vector<Eigen::Vector2d> merge_holes(const Polygon& outer_ccw, std::vector<Polygon> holes)
{
    std::vector<Eigen::Vector2d> merged(outer_ccw.begin(), outer_ccw.end());
    for (auto& h : holes)
        h = make_cw(h);

    auto max_x_vertex = [](const Polygon& p) {
        size_t best = 0;
        for (size_t i = 1; i < p.size(); ++i)
            if (p[i].x() > p[best].x() || (p[i].x() == p[best].x() && p[i].y() > p[best].y()))
                best = i;
        return best;
    };
    std::sort(holes.begin(), holes.end(), [&](const Polygon& a, const Polygon& b) {
        return a[max_x_vertex(a)].x() > b[max_x_vertex(b)].x();
    });

    for (size_t hi = 0; hi < holes.size(); ++hi)
    {
        const Polygon& hole = holes[hi];
        const size_t jm = max_x_vertex(hole);
        const Eigen::Vector2d M = hole[jm];

        auto segment_clear = [&](const Eigen::Vector2d& from, const Eigen::Vector2d& to) {
            const size_t n = merged.size();
            for (size_t i = 0; i < n; ++i)
                if (segments_cross(from, to, merged[i], merged[(i + 1) % n]))
                    return false;
            for (size_t k = hi; k < holes.size(); ++k)
            {
                const auto& hk = holes[k];
                for (size_t i = 0; i < hk.size(); ++i)
                    if (segments_cross(from, to, hk[i], hk[(i + 1) % hk.size()]))
                        return false;
            }
            const Eigen::Vector2d mid = 0.5 * (from + to);
            if (!point_in_polygon(merged, mid))
                return false;
            for (size_t k = hi; k < holes.size(); ++k)
                if (point_in_polygon(holes[k], mid) && k != hi)
                    return false;
            if (point_in_polygon(hole, mid))
                return false;
            return true;
        };

        int best_iv = -1;
        double best_d = kInf;
        for (size_t iv = 0; iv < merged.size(); ++iv)
        {
            const double d = (merged[iv] - M).norm();
            if (d >= best_d)
                continue;
            if (segment_clear(M, merged[iv]))
            {
                best_d = d;
                best_iv = static_cast<int>(iv);
            }
        }
        if (best_iv < 0)
            throw std::runtime_error("merge_holes: no visible bridge vertex for hole");

        // splice: ..., V, M, hole loop (CW), M, V, ...
        std::vector<Eigen::Vector2d> spliced;
        spliced.reserve(merged.size() + hole.size() + 2);
        for (int i = 0; i <= best_iv; ++i)
            spliced.push_back(merged[static_cast<size_t>(i)]);
        for (size_t t = 0; t <= hole.size(); ++t)
            spliced.push_back(hole[(jm + t) % hole.size()]);
        spliced.push_back(merged[static_cast<size_t>(best_iv)]);
        for (size_t i = static_cast<size_t>(best_iv) + 1; i < merged.size(); ++i)
            spliced.push_back(merged[i]);
        merged = std::move(spliced);
    }
    return merged;
}

/// Hertel-Mehlhorn convex decomposition: triangulate, then merge triangles
/// across inessential diagonals.
inline std::vector<Polygon> hertel_mehlhorn(const Polygon& outer_ccw, const std::vector<Polygon>& holes)
{
    const auto pts = merge_holes(make_ccw(simplify(outer_ccw)), union_touching_holes(holes));
    const auto tris = ear_clip(pts);
    const int n = static_cast<int>(pts.size());

    std::vector<std::optional<std::vector<int>>> faces;
    faces.reserve(tris.size());
    for (const auto& t : tris)
        faces.emplace_back(std::vector<int>{t[0], t[1], t[2]});

    std::vector<int> parent(faces.size());
    for (size_t i = 0; i < parent.size(); ++i)
        parent[i] = static_cast<int>(i);
    auto find = [&](int f) {
        while (parent[static_cast<size_t>(f)] != f)
            f = parent[static_cast<size_t>(f)] = parent[static_cast<size_t>(parent[static_cast<size_t>(f)])];
        return f;
    };

    // directed edge -> face
    std::map<std::pair<int, int>, int> edge_face;
    for (size_t f = 0; f < faces.size(); ++f)
    {
        const auto& loop = *faces[f];
        for (size_t i = 0; i < loop.size(); ++i)
            edge_face[{loop[i], loop[(i + 1) % loop.size()]}] = static_cast<int>(f);
    }

    std::vector<std::pair<int, int>> diagonals;
    for (const auto& [e, f] : edge_face)
    {
        if (e.first > e.second)
            continue;
        if ((e.first + 1) % n == e.second || (e.second + 1) % n == e.first)
            continue; // original boundary edge
        if (edge_face.count({e.second, e.first}))
            diagonals.push_back(e);
    }
    std::sort(diagonals.begin(), diagonals.end());

    auto position_of = [](const std::vector<int>& loop, int v) {
        for (size_t i = 0; i < loop.size(); ++i)
            if (loop[i] == v)
                return static_cast<int>(i);
        return -1;
    };

    for (const auto& [a, b] : diagonals)
    {
        const int f1 = find(edge_face[{a, b}]);
        const int f2 = find(edge_face[{b, a}]);
        if (f1 == f2 || !faces[static_cast<size_t>(f1)] || !faces[static_cast<size_t>(f2)])
            continue;
        const auto& L1 = *faces[static_cast<size_t>(f1)];
        const auto& L2 = *faces[static_cast<size_t>(f2)];
        const int p1a = position_of(L1, a);
        const int p2b = position_of(L2, b);
        if (p1a < 0 || p2b < 0 || L1[(static_cast<size_t>(p1a) + 1) % L1.size()] != b ||
            L2[(static_cast<size_t>(p2b) + 1) % L2.size()] != a)
            continue; // diagonal no longer on the current face boundaries

    // merged loop: walk f1 from b around to a, then f2 strictly between a and b
        std::vector<int> loop;
        loop.reserve(L1.size() + L2.size() - 2);
        for (size_t t = 0; t < L1.size(); ++t)
            loop.push_back(L1[(static_cast<size_t>(p1a) + 1 + t) % L1.size()]);
        for (size_t t = 1; t + 1 < L2.size(); ++t)
            loop.push_back(L2[(static_cast<size_t>(p2b) + 1 + t) % L2.size()]);

        Polygon poly;
        poly.reserve(loop.size());
        for (int idx : loop)
            poly.push_back(pts[static_cast<size_t>(idx)]);
        if (!is_convex(poly))
            continue;

        faces.emplace_back(std::move(loop));
        parent.push_back(static_cast<int>(faces.size() - 1));
        parent[static_cast<size_t>(f1)] = static_cast<int>(faces.size() - 1);
        parent[static_cast<size_t>(f2)] = static_cast<int>(faces.size() - 1);
        faces[static_cast<size_t>(f1)].reset();
        faces[static_cast<size_t>(f2)].reset();
        const auto& merged_loop = *faces.back();
        for (size_t i = 0; i < merged_loop.size(); ++i)
            edge_face[{merged_loop[i], merged_loop[(i + 1) % merged_loop.size()]}] =
                static_cast<int>(faces.size() - 1);
    }

    std::vector<Polygon> cells;
    for (const auto& f : faces)
    {
        if (!f)
            continue;
        Polygon poly;
        for (int idx : *f)
            poly.push_back(pts[static_cast<size_t>(idx)]);
        poly = simplify(poly);
        if (poly.size() >= 3 && area(poly) > 1e-12)
            cells.push_back(std::move(poly));
    }
    return cells;
}

} // namespace geom

namespace detail
{

inline void validate_region(const Polygon& region, const Polygon& boundary, const char* what)
{
    require(region.size() >= 3 && geom::is_simple(region), std::string("invalid polygon: ") + what);
    for (const auto& v : region)
        require(geom::point_in_polygon(boundary, v) || geom::dist_point_polygon_boundary(boundary, v) < 1e-9,
                std::string(what) + " not contained in boundary");
    for (size_t i = 0; i < region.size(); ++i)
        for (size_t j = 0; j < boundary.size(); ++j)
            require(!geom::segments_cross(region[i], region[(i + 1) % region.size()], boundary[j],
                                          boundary[(j + 1) % boundary.size()]),
                    std::string(what) + " crosses boundary");
}

inline bool regions_overlap(const Polygon& a, const Polygon& b)
{
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j)
            if (geom::segments_cross(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()]))
                return true;
    for (const auto& v : a)
        if (geom::point_in_polygon(b, v) && geom::dist_point_polygon_boundary(b, v) > 1e-9)
            return true;
    for (const auto& v : b)
        if (geom::point_in_polygon(a, v) && geom::dist_point_polygon_boundary(a, v) > 1e-9)
            return true;
    return false;
}

} // namespace detail

/// Partitions the free space (boundary minus obstacles, noise and cost
/// regions) into convex cells with the Hertel-Mehlhorn algorithm. Noise and
/// elevated-cost regions are partitioned separately; cost cells are appended
/// to free_cells with their region cost.
inline ConvexPartition convex_partition(const PolygonMap& map)
{
    detail::require(map.boundary.size() >= 3 && geom::is_simple(map.boundary), "invalid polygon: boundary");
    const Polygon boundary = geom::make_ccw(geom::simplify(map.boundary));

    std::vector<Polygon> holes;
    for (const auto& o : map.obstacles)
    {
        detail::validate_region(o, boundary, "obstacle");
        holes.push_back(geom::simplify(o));
    }
    std::vector<Polygon> interior_regions;
    for (const auto& r : map.noise_regions)
    {
        detail::validate_region(r, boundary, "noise region");
        for (const auto& o : map.obstacles)
            detail::require(!detail::regions_overlap(r, o), "noise region overlaps obstacle");
        holes.push_back(geom::simplify(r));
        interior_regions.push_back(r);
    }
    for (const auto& [r, q] : map.cost_regions)
    {
        detail::require(q >= 0.0, "cost region cost must be >= 0");
        detail::validate_region(r, boundary, "cost region");
        for (const auto& o : map.obstacles)
            detail::require(!detail::regions_overlap(r, o), "cost region overlaps obstacle");
        for (const auto& nr : map.noise_regions)
            detail::require(!detail::regions_overlap(r, nr), "cost region overlaps noise region");
        holes.push_back(geom::simplify(r));
        interior_regions.push_back(r);
    }
    for (size_t i = 0; i < interior_regions.size(); ++i)
        for (size_t j = i + 1; j < interior_regions.size(); ++j)
            detail::require(!detail::regions_overlap(interior_regions[i], interior_regions[j]),
                            "noise/cost regions overlap");

    ConvexPartition out;
    out.free_cells = geom::hertel_mehlhorn(boundary, holes);
    std::vector<double> costs(out.free_cells.size(), 0.0);

    for (const auto& [r, q] : map.cost_regions)
    {
        auto cells = geom::hertel_mehlhorn(geom::make_ccw(geom::simplify(r)), {});
        for (auto& c : cells)
        {
            out.free_cells.push_back(std::move(c));
            costs.push_back(q);
        }
    }
    for (const auto& r : map.noise_regions)
    {
        auto cells = geom::hertel_mehlhorn(geom::make_ccw(geom::simplify(r)), {});
        for (auto& c : cells)
        {
            out.noise_cells.push_back(std::move(c));
            costs.push_back(0.0);
        }
    }
    out.cell_costs = Eigen::Map<Eigen::VectorXd>(costs.data(), static_cast<long>(costs.size()));
    return out;
}

} // namespace zonoplan

#endif
