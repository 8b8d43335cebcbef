#ifndef ZONOPLAN_SET_OPS_HPP_
#define ZONOPLAN_SET_OPS_HPP_

#include "core.hpp"
#include "lp.hpp"
#include "sets.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace zonoplan
{

namespace detail
{

/// max d'x s.t. H x <= f. Throws on unbounded/infeasible.
inline double hrep_support(const Eigen::MatrixXd& H, const Eigen::VectorXd& f, const Eigen::VectorXd& d)
{
    const int n = static_cast<int>(H.cols());
    const int m = static_cast<int>(H.rows());
    // variables: x (free), slack s >= 0 with H x + s = f
    Eigen::MatrixXd A(m, n + m);
    A.leftCols(n) = H;
    A.rightCols(m) = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + m);
    c.head(n) = -d; // maximize
    Eigen::VectorXd lb = Eigen::VectorXd::Constant(n + m, -kInf);
    Eigen::VectorXd ub = Eigen::VectorXd::Constant(n + m, kInf);
    lb.tail(m).setZero();
    LpResult res = solve_lp(A, f, c, lb, ub);
    if (res.status == LpStatus::unbounded)
        throw std::runtime_error("conzono_from_hrep: unbounded");
    if (res.status == LpStatus::infeasible)
        throw std::runtime_error("conzono_from_hrep: empty");
    if (res.status != LpStatus::optimal)
        throw std::runtime_error("conzono_from_hrep: LP did not converge");
    return -res.objective;
}

} // namespace detail

/// Converts the H-rep polytope {x : H x <= f} to a constrained zonotope.
/// The polytope must be non-empty and bounded. A bounding box is found via 2n
/// support LPs, then one slack factor is introduced per inequality row.
inline ConstrainedZonotope conzono_from_hrep(const Eigen::MatrixXd& H, const Eigen::VectorXd& f)
{
    detail::require(H.rows() == f.size(), "conzono_from_hrep: H/f dimension mismatch");
    const int n = static_cast<int>(H.cols());
    const int m = static_cast<int>(H.rows());

    Eigen::VectorXd lo(n), hi(n);
    for (int i = 0; i < n; ++i)
    {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        d(i) = 1.0;
        hi(i) = detail::hrep_support(H, f, d);
        d(i) = -1.0;
        lo(i) = -detail::hrep_support(H, f, d);
    }
    const Eigen::VectorXd cB = (hi + lo) / 2.0;
    const Eigen::VectorXd gB = (hi - lo) / 2.0;
    const Eigen::MatrixXd GB = gB.asDiagonal();

    // H x <= f with x = GB xi + cB: introduce slack sigma in [0, sigma_max]
    const Eigen::MatrixXd HG = H * GB;
    Eigen::VectorXd sigma_max = f - H * cB + HG.cwiseAbs().rowwise().sum();

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n + m);
    G.leftCols(n) = GB;
    Eigen::MatrixXd A(m, n + m);
    A.leftCols(n) = HG;
    A.rightCols(m) = (sigma_max / 2.0).asDiagonal();
    Eigen::VectorXd b = f - H * cB - sigma_max / 2.0;
    return ConstrainedZonotope(std::move(G), cB, std::move(A), std::move(b));
}

/// Builds a hybrid zonotope representing the union of the convex hulls of the
/// given V-rep polytopes. One continuous factor is allocated per (polytope,
/// vertex) pair; a single one-hot binary group of size |polys| records the
/// region choice. By construction the convex relaxation of the result equals
/// the convex hull of the union.
inline HybridZonotope hybzono_from_vrep(const std::vector<VPolytope>& polys)
{
    detail::require(!polys.empty(), "hybzono_from_vrep: empty polytope list");
    const int n = polys.front().dim();
    std::vector<std::vector<Eigen::VectorXd>> verts;
    verts.reserve(polys.size());
    for (const auto& p : polys)
    {
        detail::require(p.dim() == n, "hybzono_from_vrep: dimension mismatch");
        std::vector<Eigen::VectorXd> vs;
        for (const auto& v : p.vertices)
        {
            bool dup = false;
            for (const auto& u : vs)
                if ((u - v).cwiseAbs().maxCoeff() <= kVertexDedupTol)
                {
                    dup = true;
                    break;
                }
            if (!dup)
                vs.push_back(v);
        }
        verts.push_back(std::move(vs));
    }

    const int N = static_cast<int>(verts.size());
    int M = 0;
    for (const auto& vs : verts)
        M += static_cast<int>(vs.size());

    // lambda_i = (xic_i + 1)/2 are convex-combination weights, delta_j = (xib_j + 1)/2
    // region indicators. Row j: sum_{i in poly j} lambda_i = delta_j; total: sum_j delta_j = 1.
    Eigen::MatrixXd V(n, M);
    Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(N + 1, M);
    Eigen::MatrixXd Ab = Eigen::MatrixXd::Zero(N + 1, N);
    Eigen::VectorXd b(N + 1);
    int col = 0;
    for (int j = 0; j < N; ++j)
    {
        const int nj = static_cast<int>(verts[j].size());
        for (const auto& v : verts[j])
        {
            V.col(col) = v;
            Ac(j, col) = 1.0;
            ++col;
        }
        Ab(j, j) = -1.0;
        b(j) = 1.0 - nj;
    }
    Ab.row(N).setOnes();
    b(N) = 2.0 - N;

    Eigen::MatrixXd Gc = 0.5 * V;
    Eigen::VectorXd c = 0.5 * V.rowwise().sum();
    Eigen::MatrixXd Gb = Eigen::MatrixXd::Zero(n, N);

    std::vector<int> group(N);
    for (int j = 0; j < N; ++j)
        group[j] = j;
    return HybridZonotope(std::move(Gc), std::move(Gb), std::move(c), std::move(Ac), std::move(Ab),
                          std::move(b), {group});
}

/// Intersection of a constrained zonotope with the halfspace {x : a'x <= beta}.
/// Adds exactly one factor and one equality constraint.
inline ConstrainedZonotope intersect_halfspace(const ConstrainedZonotope& Z, const Eigen::VectorXd& a,
                                               double beta)
{
    detail::require(a.size() == Z.dim(), "intersect_halfspace: dimension mismatch");
    detail::require(a.cwiseAbs().maxCoeff() > 0.0, "intersect_halfspace: zero normal");
    const int ng = Z.num_factors();
    const int nc = Z.num_constraints();
    const Eigen::RowVectorXd aG = a.transpose() * Z.G;
    const double sigma_max = beta - a.dot(Z.c) + aG.cwiseAbs().sum();

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(Z.dim(), ng + 1);
    G.leftCols(ng) = Z.G;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nc + 1, ng + 1);
    A.topLeftCorner(nc, ng) = Z.A;
    A.block(nc, 0, 1, ng) = aG;
    A(nc, ng) = sigma_max / 2.0;
    Eigen::VectorXd b(nc + 1);
    b.head(nc) = Z.b;
    b(nc) = beta - a.dot(Z.c) - sigma_max / 2.0;
    return ConstrainedZonotope(std::move(G), Z.c, std::move(A), std::move(b));
}

/// Convex relaxation of a hybrid zonotope: binaries become continuous factors in [-1,1].
inline ConstrainedZonotope convex_relaxation(const HybridZonotope& Z)
{
    Eigen::MatrixXd G(Z.dim(), Z.num_continuous() + Z.num_binary());
    G << Z.Gc, Z.Gb;
    Eigen::MatrixXd A(Z.num_constraints(), Z.num_continuous() + Z.num_binary());
    A << Z.Ac, Z.Ab;
    return ConstrainedZonotope(std::move(G), Z.c, std::move(A), Z.b);
}

/// True iff the factor set {A xi = b, xi in [-1,1]^ng} is infeasible.
inline bool is_empty(const ConstrainedZonotope& Z)
{
    const int ng = Z.num_factors();
    LpResult res = solve_lp(Z.A, Z.b, Eigen::VectorXd::Zero(ng), Eigen::VectorXd::Constant(ng, -1.0),
                            Eigen::VectorXd::Constant(ng, 1.0));
    return res.status == LpStatus::infeasible;
}

/// Support value max_{x in Z} d'x. Throws if Z is empty.
inline double support(const ConstrainedZonotope& Z, const Eigen::VectorXd& d)
{
    const int ng = Z.num_factors();
    const Eigen::VectorXd cost = -(d.transpose() * Z.G).transpose();
    LpResult res = solve_lp(Z.A, Z.b, cost, Eigen::VectorXd::Constant(ng, -1.0),
                            Eigen::VectorXd::Constant(ng, 1.0));
    if (res.status == LpStatus::infeasible)
        throw std::runtime_error("support: empty set");
    if (res.status != LpStatus::optimal)
        throw std::runtime_error("support: LP did not converge");
    return -res.objective + d.dot(Z.c);
}

/// Per-coordinate bounding box via 2n support LPs. Throws if Z is empty.
inline Interval bounding_box(const ConstrainedZonotope& Z)
{
    const int n = Z.dim();
    Interval box;
    box.lo.resize(n);
    box.hi.resize(n);
    for (int i = 0; i < n; ++i)
    {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        d(i) = 1.0;
        box.hi(i) = support(Z, d);
        d(i) = -1.0;
        box.lo(i) = -support(Z, d);
    }
    return box;
}

/// Membership oracle: true iff there is xi in [-1,1]^ng with A xi = b and
/// ||G xi + c - x||_inf <= tol. Decided by a feasibility LP minimizing the
/// infinity-norm deviation.
inline bool contains_cz(const ConstrainedZonotope& Z, const Eigen::VectorXd& x, double tol = kMembershipTol)
{
    detail::require(x.size() == Z.dim(), "contains_cz: dimension mismatch");
    const int n = Z.dim();
    const int ng = Z.num_factors();
    const int nc = Z.num_constraints();
    // variables: xi (ng), t (1), slacks s1, s2 (n each) >= 0
    // rows: A xi = b;  G xi - t + s1... encoded as equalities with slacks:
    //   G xi - t*1 + s1 = x - c   (s1 >= 0 <-> G xi - t <= x - c)
    //  -G xi - t*1 + s2 = c - x
    const int nv = ng + 1 + 2 * n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nc + 2 * n, nv);
    Eigen::VectorXd b(nc + 2 * n);
    A.topLeftCorner(nc, ng) = Z.A;
    b.head(nc) = Z.b;
    A.block(nc, 0, n, ng) = Z.G;
    A.block(nc + n, 0, n, ng) = -Z.G;
    A.block(nc, ng, 2 * n, 1).setConstant(-1.0);
    A.block(nc, ng + 1, 2 * n, 2 * n) = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    b.segment(nc, n) = x - Z.c;
    b.segment(nc + n, n) = Z.c - x;

    Eigen::VectorXd cost = Eigen::VectorXd::Zero(nv);
    cost(ng) = 1.0;
    Eigen::VectorXd lb = Eigen::VectorXd::Zero(nv);
    Eigen::VectorXd ub = Eigen::VectorXd::Constant(nv, kInf);
    lb.head(ng).setConstant(-1.0);
    ub.head(ng).setOnes();
    LpResult res = solve_lp(A, b, cost, lb, ub);
    if (res.status == LpStatus::infeasible)
        return false;
    if (res.status != LpStatus::optimal)
        throw std::runtime_error("contains_cz: LP did not converge");
    return res.objective <= tol;
}

/// Fixes the binary factors of Z to the given +/-1 assignment, yielding a
/// constrained zonotope over the continuous factors.
inline ConstrainedZonotope fix_binaries(const HybridZonotope& Z, const Eigen::VectorXd& xib)
{
    detail::require(xib.size() == Z.num_binary(), "fix_binaries: assignment size mismatch");
    return ConstrainedZonotope(Z.Gc, Z.c + Z.Gb * xib, Z.Ac, Z.b - Z.Ab * xib);
}

/// Membership oracle for hybrid zonotopes. Enumerates group-consistent binary
/// assignments (one-hot groups cut the count to the product of group sizes)
/// and solves a continuous feasibility LP for each. Throws if the assignment
/// count exceeds the desk-scale enumeration cap.
inline bool contains_hz(const HybridZonotope& Z, const Eigen::VectorXd& x, double tol = kMembershipTol)
{
    detail::require(x.size() == Z.dim(), "contains_hz: dimension mismatch");
    const int nb = Z.num_binary();
    std::vector<char> grouped(static_cast<size_t>(nb), 0);
    for (const auto& g : Z.binary_groups)
        for (int idx : g)
            grouped[static_cast<size_t>(idx)] = 1;
    std::vector<int> free_bins;
    for (int i = 0; i < nb; ++i)
        if (!grouped[static_cast<size_t>(i)])
            free_bins.push_back(i);

    double combos = 1.0;
    for (const auto& g : Z.binary_groups)
        combos *= static_cast<double>(g.size());
    combos *= std::pow(2.0, static_cast<double>(free_bins.size()));
    if (combos > 1e6)
        throw std::runtime_error("contains_hz: too many binary combinations to enumerate");

    const auto n_groups = Z.binary_groups.size();
    std::vector<size_t> choice(n_groups, 0);
    while (true)
    {
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << free_bins.size()); ++mask)
        {
            Eigen::VectorXd xib = Eigen::VectorXd::Constant(nb, -1.0);
            for (size_t gi = 0; gi < n_groups; ++gi)
                xib(Z.binary_groups[gi][choice[gi]]) = 1.0;
            for (size_t fi = 0; fi < free_bins.size(); ++fi)
                xib(free_bins[fi]) = (mask >> fi & 1u) ? 1.0 : -1.0;
            if (contains_cz(fix_binaries(Z, xib), x, tol))
                return true;
        }
        // advance group choices
        size_t gi = 0;
        for (; gi < n_groups; ++gi)
        {
            if (++choice[gi] < Z.binary_groups[gi].size())
                break;
            choice[gi] = 0;
        }
        if (gi == n_groups)
            break;
    }
    return false;
}

} // namespace zonoplan

#endif
