#include <catch2/catch_amalgamated.hpp>

#include <zonoplan/feasible_map.hpp>
#include <zonoplan/partition.hpp>
#include <zonoplan/polygon.hpp>

#include "oracles.hpp"

#include <random>

using namespace zonoplan;
using Eigen::Vector2d;

namespace
{

Polygon rect(double x0, double y0, double x1, double y1)
{
    return {Vector2d(x0, y0), Vector2d(x1, y0), Vector2d(x1, y1), Vector2d(x0, y1)};
}

double total_area(const std::vector<Polygon>& cells)
{
    double a = 0.0;
    for (const auto& c : cells)
        a += geom::area(c);
    return a;
}

void check_partition_valid(const ConvexPartition& part, const PolygonMap& map, std::mt19937_64& rng)
{
    for (const auto& c : part.free_cells)
        CHECK(geom::is_convex(c));
    for (const auto& c : part.noise_cells)
        CHECK(geom::is_convex(c));

    double hole_area = 0.0;
    for (const auto& o : map.obstacles)
        hole_area += geom::area(o);
    const double expected = geom::area(map.boundary) - hole_area;
    const double got = total_area(part.free_cells) + total_area(part.noise_cells);
    CHECK(got == Catch::Approx(expected).epsilon(1e-6));

    // coverage and exclusivity on sampled points
    const auto bbox = geom::polygon_bbox(map.boundary);
    std::uniform_real_distribution<double> ux(bbox.lo(0), bbox.hi(0));
    std::uniform_real_distribution<double> uy(bbox.lo(1), bbox.hi(1));
    int free_checked = 0, obstacle_checked = 0;
    for (int s = 0; s < 20000 && free_checked < 1000; ++s)
    {
        const Vector2d p(ux(rng), uy(rng));
        const bool in_boundary = geom::point_in_polygon(map.boundary, p);
        bool in_obstacle = false;
        double edge_dist = geom::dist_point_polygon_boundary(map.boundary, p);
        for (const auto& o : map.obstacles)
        {
            if (geom::point_in_polygon(o, p))
                in_obstacle = true;
            edge_dist = std::min(edge_dist, geom::dist_point_polygon_boundary(o, p));
        }
        for (const auto& r : map.noise_regions)
            edge_dist = std::min(edge_dist, geom::dist_point_polygon_boundary(r, p));
        for (const auto& [r, q] : map.cost_regions)
            edge_dist = std::min(edge_dist, geom::dist_point_polygon_boundary(r, p));
        if (edge_dist < 1e-6)
            continue; // boundary shell

        int hits = 0;
        for (int i = 0; i < part.num_cells(); ++i)
            if (geom::point_in_convex(part.cell(i), p, 1e-9))
                ++hits;
        if (in_boundary && !in_obstacle)
        {
            ++free_checked;
            CHECK(hits >= 1);
            bool near_cell_edge = false;
            for (int i = 0; i < part.num_cells(); ++i)
                if (geom::dist_point_polygon_boundary(part.cell(i), p) < 1e-9)
                    near_cell_edge = true;
            if (!near_cell_edge)
                CHECK(hits == 1);
        }
        else if (in_obstacle)
        {
            ++obstacle_checked;
            CHECK(hits == 0);
        }
    }
    CHECK(free_checked >= 1000);
}

} // namespace

TEST_CASE("convex boundary, no holes -> single cell")
{
    PolygonMap map;
    map.boundary = {Vector2d(0, 0), Vector2d(4, 0), Vector2d(5, 3), Vector2d(2, 5), Vector2d(-1, 2)};
    auto part = convex_partition(map);
    REQUIRE(part.free_cells.size() == 1);
    CHECK(geom::area(part.free_cells[0]) == Catch::Approx(geom::area(map.boundary)));
    CHECK(part.noise_cells.empty());
}

TEST_CASE("unit square with centered hole")
{
    PolygonMap map;
    map.boundary = rect(0, 0, 1, 1);
    map.obstacles.push_back(rect(0.4, 0.4, 0.6, 0.6));
    auto part = convex_partition(map);
    CHECK(part.free_cells.size() >= 4);
    CHECK(total_area(part.free_cells) == Catch::Approx(1.0 - 0.04).margin(1e-9));
    std::mt19937_64 rng(5);
    check_partition_valid(part, map, rng);
}

TEST_CASE("self-intersecting boundary rejected")
{
    PolygonMap map;
    map.boundary = {Vector2d(0, 0), Vector2d(1, 1), Vector2d(1, 0), Vector2d(0, 1)};
    CHECK_THROWS_WITH(convex_partition(map), Catch::Matchers::ContainsSubstring("invalid polygon"));
}

TEST_CASE("partition suite: polygons with holes")
{
    std::mt19937_64 rng(11);

    std::vector<PolygonMap> maps;
    {
        PolygonMap m; // L-shaped boundary
        m.boundary = {Vector2d(0, 0), Vector2d(4, 0), Vector2d(4, 2), Vector2d(2, 2),
                      Vector2d(2, 4), Vector2d(0, 4)};
        maps.push_back(m);
    }
    {
        PolygonMap m; // two holes
        m.boundary = rect(0, 0, 10, 6);
        m.obstacles.push_back(rect(2, 2, 3, 4));
        m.obstacles.push_back(rect(6, 1, 8, 3));
        maps.push_back(m);
    }
    {
        PolygonMap m; // triangular hole
        m.boundary = rect(0, 0, 8, 8);
        m.obstacles.push_back({Vector2d(3, 3), Vector2d(5, 3), Vector2d(4, 5)});
        maps.push_back(m);
    }
    {
        PolygonMap m; // non-convex boundary with hole
        m.boundary = {Vector2d(0, 0), Vector2d(6, -1), Vector2d(12, 0), Vector2d(10, 4),
                      Vector2d(12, 8), Vector2d(6, 9),  Vector2d(0, 8),  Vector2d(2, 4)};
        m.obstacles.push_back(rect(5, 3, 7, 5));
        maps.push_back(m);
    }
    {
        PolygonMap m; // noise region next to obstacle
        m.boundary = rect(0, 0, 20, 6);
        m.obstacles.push_back(rect(4, 1, 6, 4));
        m.noise_regions.push_back(rect(10, 0.5, 13, 5.5));
        maps.push_back(m);
    }
    {
        PolygonMap m; // cost regions flanking an obstacle
        m.boundary = rect(0, 0, 20, 20);
        m.obstacles.push_back(rect(8, 6, 11, 14));
        m.cost_regions.emplace_back(rect(8, 3, 11, 6), 10.0);
        m.cost_regions.emplace_back(rect(8, 14, 11, 17), 10.0);
        maps.push_back(m);
    }
    {
        PolygonMap m; // pentagon hole in hexagon
        Polygon hexagon, pentagon;
        for (int i = 0; i < 6; ++i)
            hexagon.push_back(Vector2d(5 + 5 * std::cos(i * M_PI / 3), 5 + 5 * std::sin(i * M_PI / 3)));
        for (int i = 0; i < 5; ++i)
            pentagon.push_back(
                Vector2d(5 + 1.5 * std::cos(i * 2 * M_PI / 5), 5 + 1.5 * std::sin(i * 2 * M_PI / 5)));
        m.boundary = hexagon;
        m.obstacles.push_back(pentagon);
        maps.push_back(m);
    }
    {
        PolygonMap m; // three holes in a corridor
        m.boundary = rect(0, 0, 30, 8);
        m.obstacles.push_back(rect(5, 2, 7, 6));
        m.obstacles.push_back(rect(13, 1, 15, 5));
        m.obstacles.push_back(rect(21, 3, 23, 7));
        maps.push_back(m);
    }
    {
        PolygonMap m; // concave hole
        m.boundary = rect(0, 0, 12, 12);
        m.obstacles.push_back(
            {Vector2d(4, 4), Vector2d(8, 4), Vector2d(8, 8), Vector2d(6, 6), Vector2d(4, 8)});
        maps.push_back(m);
    }
    {
        PolygonMap m; // hole plus noise plus cost
        m.boundary = rect(0, 0, 15, 10);
        m.obstacles.push_back(rect(3, 3, 5, 7));
        m.noise_regions.push_back(rect(7, 2, 9, 8));
        m.cost_regions.emplace_back(rect(11, 4, 13, 6), 5.0);
        maps.push_back(m);
    }

    REQUIRE(maps.size() == 10);
    for (size_t i = 0; i < maps.size(); ++i)
    {
        INFO("map " << i);
        auto part = convex_partition(maps[i]);
        check_partition_valid(part, maps[i], rng);
    }
}

TEST_CASE("feasible set 3d: prism membership")
{
    PolygonMap map;
    map.boundary = {Vector2d(0, 0), Vector2d(4, 0), Vector2d(2, 3)};
    auto part = convex_partition(map);
    REQUIRE(part.free_cells.size() == 1);
    auto fm = build_feasible_set_3d(part, 3000.0, 300.0);
    CHECK(fm.F.dim() == 3);
    CHECK(fm.F.num_binary() == 1);
    const Vector2d c = geom::centroid(part.free_cells[0]);
    CHECK(contains_hz(fm.F, Eigen::Vector3d(c.x(), c.y(), 3000.0), 1e-6));
    CHECK_FALSE(contains_hz(fm.F, Eigen::Vector3d(c.x(), c.y(), 3001.0), 1e-6));
    CHECK(contains_hz(fm.F, Eigen::Vector3d(c.x(), c.y(), 0.0), 1e-6));
}

TEST_CASE("feasible set 3d: noise cell capped at P_noise")
{
    PolygonMap map;
    map.boundary = rect(0, 0, 10, 4);
    map.noise_regions.push_back(rect(4, 0.5, 6, 3.5));
    auto part = convex_partition(map);
    REQUIRE(part.noise_cells.size() >= 1);
    auto fm = build_feasible_set_3d(part, 3000.0, 300.0);

    const Vector2d c = geom::centroid(part.noise_cells[0]);
    CHECK(contains_hz(fm.F, Eigen::Vector3d(c.x(), c.y(), 300.0), 1e-6));
    CHECK_FALSE(contains_hz(fm.F, Eigen::Vector3d(c.x(), c.y(), 301.0), 1e-6));
    CHECK_FALSE(contains_hz(fm.F, Eigen::Vector3d(c.x(), c.y(), 400.0), 1e-6));

    // feasible-set soundness: every cell vertex with admissible third coordinate
    for (int i = 0; i < part.num_cells(); ++i)
    {
        const double cap = part.is_noise_cell(i) ? 300.0 : 3000.0;
        for (const auto& v : part.cell(i))
        {
            CHECK(contains_hz(fm.F, Eigen::Vector3d(v.x(), v.y(), 0.0), 1e-6));
            CHECK(contains_hz(fm.F, Eigen::Vector3d(v.x(), v.y(), cap), 1e-6));
        }
    }

    // centroid of every cell is a member with P_e = 0
    for (int i = 0; i < fm.num_regions(); ++i)
    {
        const Vector2d cc = geom::centroid(part.cell(i));
        CHECK(contains_hz(fm.F, Eigen::Vector3d(cc.x(), cc.y(), 0.0), 1e-6));
    }
}

TEST_CASE("feasible set 2d: square map and cost lookup")
{
    PolygonMap map;
    map.boundary = rect(0, 0, 2, 2);
    auto part = convex_partition(map);
    auto fm = build_feasible_set_2d(part);
    CHECK(fm.F.dim() == 2);
    CHECK(contains_hz(fm.F, Vector2d(1.0, 1.0), 1e-6));
    CHECK(contains_hz(fm.F, Vector2d(0.0, 0.0), 1e-6));
    CHECK_FALSE(contains_hz(fm.F, Vector2d(2.1, 1.0), 1e-6));

    PolygonMap map2;
    map2.boundary = rect(0, 0, 10, 10);
    map2.obstacles.push_back(rect(4, 4, 6, 6));
    map2.cost_regions.emplace_back(rect(1, 1, 3, 3), 10.0);
    auto part2 = convex_partition(map2);
    auto fm2 = build_feasible_set_2d(part2);
    int cost_cells = 0;
    for (int i = 0; i < fm2.num_regions(); ++i)
        if (fm2.region_cost(i) == 10.0)
            ++cost_cells;
    CHECK(cost_cells >= 1);
    CHECK_FALSE(contains_hz(fm2.F, Vector2d(5.0, 5.0), 1e-6)); // obstacle interior
}
