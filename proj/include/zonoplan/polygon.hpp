#ifndef ZONOPLAN_POLYGON_HPP_
#define ZONOPLAN_POLYGON_HPP_

#include "core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace zonoplan
{

using Polygon = std::vector<Eigen::Vector2d>;

namespace geom
{

inline double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return a.x() * b.y() - a.y() * b.x();
}

inline double signed_area(const Polygon& poly)
{
    double a = 0.0;
    const int n = static_cast<int>(poly.size());
    for (int i = 0; i < n; ++i)
        a += cross2(poly[i], poly[(i + 1) % n]);
    return 0.5 * a;
}

inline double area(const Polygon& poly) { return std::abs(signed_area(poly)); }

inline Eigen::Vector2d centroid(const Polygon& poly)
{
    // area-weighted centroid; falls back to vertex mean for degenerate polygons
    const int n = static_cast<int>(poly.size());
    const double A = signed_area(poly);
    if (std::abs(A) < 1e-14)
    {
        Eigen::Vector2d m = Eigen::Vector2d::Zero();
        for (const auto& p : poly)
            m += p;
        return m / static_cast<double>(n);
    }
    Eigen::Vector2d cpt = Eigen::Vector2d::Zero();
    for (int i = 0; i < n; ++i)
    {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % n];
        cpt += (p + q) * cross2(p, q);
    }
    return cpt / (6.0 * A);
}

inline Polygon reversed(Polygon poly)
{
    std::reverse(poly.begin(), poly.end());
    return poly;
}

inline Polygon make_ccw(const Polygon& poly) { return signed_area(poly) >= 0.0 ? poly : reversed(poly); }
inline Polygon make_cw(const Polygon& poly) { return signed_area(poly) <= 0.0 ? poly : reversed(poly); }

/// Removes consecutive duplicates and collinear vertices. The polygon as a set
/// is unchanged for convex input.
inline Polygon simplify(const Polygon& poly, double tol = kVertexDedupTol)
{
    Polygon out;
    const int n = static_cast<int>(poly.size());
    for (int i = 0; i < n; ++i)
    {
        const auto& p = poly[i];
        if (!out.empty() && (out.back() - p).cwiseAbs().maxCoeff() <= tol)
            continue;
        out.push_back(p);
    }
    while (out.size() >= 2 && (out.front() - out.back()).cwiseAbs().maxCoeff() <= tol)
        out.pop_back();
    // drop collinear vertices
    bool changed = true;
    while (changed && out.size() > 3)
    {
        changed = false;
        for (size_t i = 0; i < out.size(); ++i)
        {
            const auto& a = out[(i + out.size() - 1) % out.size()];
            const auto& b = out[i];
            const auto& c = out[(i + 1) % out.size()];
            const double cr = cross2(b - a, c - b);
            if (std::abs(cr) <= tol * std::max(1.0, (c - a).norm()))
            {
                out.erase(out.begin() + static_cast<long>(i));
                changed = true;
                break;
            }
        }
    }
    return out;
}

/// True if every turn of the CCW polygon is left or straight.
inline bool is_convex(const Polygon& poly, double tol = 1e-9)
{
    const int n = static_cast<int>(poly.size());
    if (n < 3)
        return false;
    const double orient = signed_area(poly) >= 0.0 ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i)
    {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % n];
        const auto& c = poly[(i + 2) % n];
        if (orient * cross2(b - a, c - b) < -tol * std::max(1.0, (b - a).norm() * (c - b).norm()))
            return false;
    }
    return true;
}

/// Proper segment intersection test (shared endpoints do not count).
inline bool segments_cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                           const Eigen::Vector2d& d, double tol = 1e-12)
{
    const double d1 = cross2(b - a, c - a);
    const double d2 = cross2(b - a, d - a);
    const double d3 = cross2(d - c, a - c);
    const double d4 = cross2(d - c, b - c);
    if (((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) &&
        ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol)))
        return true;
    return false;
}

/// Simple-polygon check: no two non-adjacent edges cross.
inline bool is_simple(const Polygon& poly)
{
    const int n = static_cast<int>(poly.size());
    if (n < 3)
        return false;
    for (int i = 0; i < n; ++i)
    {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % n];
        if ((a - b).norm() < kVertexDedupTol)
            return false;
        for (int j = i + 1; j < n; ++j)
        {
            if (j == i || (j + 1) % n == i || (i + 1) % n == j)
                continue;
            if (segments_cross(a, b, poly[j], poly[(j + 1) % n]))
                return false;
        }
    }
    return true;
}

/// Ray-crossing point-in-polygon (points on the boundary are implementation defined).
inline bool point_in_polygon(const Polygon& poly, const Eigen::Vector2d& p)
{
    bool inside = false;
    const int n = static_cast<int>(poly.size());
    for (int i = 0, j = n - 1; i < n; j = i++)
    {
        const auto& a = poly[i];
        const auto& b = poly[j];
        if ((a.y() > p.y()) != (b.y() > p.y()))
        {
            const double xint = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
            if (p.x() < xint)
                inside = !inside;
        }
    }
    return inside;
}

inline double dist_point_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    const Eigen::Vector2d d = b - a;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * d)).norm();
}

inline double dist_point_polygon_boundary(const Polygon& poly, const Eigen::Vector2d& p)
{
    double best = kInf;
    const int n = static_cast<int>(poly.size());
    for (int i = 0; i < n; ++i)
        best = std::min(best, dist_point_segment(p, poly[i], poly[(i + 1) % n]));
    return best;
}

/// Point in convex CCW polygon, boundary inclusive within tol.
inline bool point_in_convex(const Polygon& poly, const Eigen::Vector2d& p, double tol = 1e-9)
{
    const int n = static_cast<int>(poly.size());
    for (int i = 0; i < n; ++i)
    {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % n];
        if (cross2(b - a, p - a) < -tol * std::max(1.0, (b - a).norm()))
            return false;
    }
    return true;
}

inline Interval polygon_bbox(const Polygon& poly)
{
    Interval box;
    box.lo = Eigen::Vector2d(kInf, kInf);
    box.hi = Eigen::Vector2d(-kInf, -kInf);
    for (const auto& p : poly)
    {
        box.lo = box.lo.cwiseMin(p);
        box.hi = box.hi.cwiseMax(p);
    }
    return box;
}

} // namespace geom

} // namespace zonoplan

#endif
