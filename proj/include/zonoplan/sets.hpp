#ifndef ZONOPLAN_SETS_HPP_
#define ZONOPLAN_SETS_HPP_

#include "core.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace zonoplan
{

/// Zonotope Z = {G xi + c | xi in [-1,1]^ng}.
struct Zonotope
{
    Eigen::MatrixXd G;
    Eigen::VectorXd c;

    Zonotope() = default;
    Zonotope(Eigen::MatrixXd G_, Eigen::VectorXd c_) : G(std::move(G_)), c(std::move(c_))
    {
        detail::require(G.rows() == c.size(), "Zonotope: G row dimension must match center");
    }

    int dim() const { return static_cast<int>(c.size()); }
    int num_factors() const { return static_cast<int>(G.cols()); }
};

/// Constrained zonotope Z = {G xi + c | A xi = b, xi in [-1,1]^ng}.
struct ConstrainedZonotope
{
    Eigen::MatrixXd G;
    Eigen::VectorXd c;
    Eigen::MatrixXd A; // nc x ng, may have zero rows
    Eigen::VectorXd b;

    ConstrainedZonotope() = default;
    ConstrainedZonotope(Eigen::MatrixXd G_, Eigen::VectorXd c_, Eigen::MatrixXd A_, Eigen::VectorXd b_)
        : G(std::move(G_)), c(std::move(c_)), A(std::move(A_)), b(std::move(b_))
    {
        detail::require(G.rows() == c.size(), "ConstrainedZonotope: G row dimension must match center");
        detail::require(A.rows() == b.size(), "ConstrainedZonotope: A rows must match b");
        detail::require(A.cols() == G.cols() || A.rows() == 0,
                        "ConstrainedZonotope: A columns must match factor count");
        if (A.rows() == 0 && A.cols() != G.cols())
            A.resize(0, G.cols());
    }

    static ConstrainedZonotope from_zonotope(const Zonotope& z)
    {
        return ConstrainedZonotope(z.G, z.c, Eigen::MatrixXd(0, z.G.cols()), Eigen::VectorXd(0));
    }

    /// Axis-aligned box [lo, hi] as an unconstrained zonotope.
    static ConstrainedZonotope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
    {
        detail::require(lo.size() == hi.size(), "ConstrainedZonotope::box: bound size mismatch");
        detail::require((hi.array() >= lo.array()).all(), "ConstrainedZonotope::box: empty interval");
        const int n = static_cast<int>(lo.size());
        Eigen::MatrixXd G = ((hi - lo) / 2.0).asDiagonal();
        return ConstrainedZonotope(G, (hi + lo) / 2.0, Eigen::MatrixXd(0, n), Eigen::VectorXd(0));
    }

    int dim() const { return static_cast<int>(c.size()); }
    int num_factors() const { return static_cast<int>(G.cols()); }
    int num_constraints() const { return static_cast<int>(A.rows()); }
};

/// Hybrid zonotope Z = {Gc xic + Gb xib + c | Ac xic + Ab xib = b,
/// xic in [-1,1]^ng, xib in {-1,1}^nb}. binary_groups lists one-hot groups of
/// binary column indices (exactly one +1 per group); may be empty.
struct HybridZonotope
{
    Eigen::MatrixXd Gc;
    Eigen::MatrixXd Gb;
    Eigen::VectorXd c;
    Eigen::MatrixXd Ac;
    Eigen::MatrixXd Ab;
    Eigen::VectorXd b;
    std::vector<std::vector<int>> binary_groups;

    HybridZonotope() = default;
    HybridZonotope(Eigen::MatrixXd Gc_, Eigen::MatrixXd Gb_, Eigen::VectorXd c_, Eigen::MatrixXd Ac_,
                   Eigen::MatrixXd Ab_, Eigen::VectorXd b_, std::vector<std::vector<int>> groups = {})
        : Gc(std::move(Gc_)), Gb(std::move(Gb_)), c(std::move(c_)), Ac(std::move(Ac_)), Ab(std::move(Ab_)),
          b(std::move(b_)), binary_groups(std::move(groups))
    {
        detail::require(Gc.rows() == c.size() && Gb.rows() == c.size(),
                        "HybridZonotope: generator row dimensions must match center");
        detail::require(Ac.rows() == b.size() && Ab.rows() == b.size(),
                        "HybridZonotope: constraint rows must match b");
        detail::require(Ac.cols() == Gc.cols(), "HybridZonotope: Ac columns must match Gc");
        detail::require(Ab.cols() == Gb.cols(), "HybridZonotope: Ab columns must match Gb");
        std::vector<char> seen(static_cast<size_t>(Gb.cols()), 0);
        for (const auto& g : binary_groups)
            for (int idx : g)
            {
                detail::require(idx >= 0 && idx < Gb.cols(), "HybridZonotope: group index out of range");
                detail::require(!seen[static_cast<size_t>(idx)],
                                "HybridZonotope: binary index in more than one group");
                seen[static_cast<size_t>(idx)] = 1;
            }
    }

    int dim() const { return static_cast<int>(c.size()); }
    int num_continuous() const { return static_cast<int>(Gc.cols()); }
    int num_binary() const { return static_cast<int>(Gb.cols()); }
    int num_constraints() const { return static_cast<int>(b.size()); }
};

/// Polytope given by its vertices (all of equal dimension).
struct VPolytope
{
    std::vector<Eigen::VectorXd> vertices;

    VPolytope() = default;
    explicit VPolytope(std::vector<Eigen::VectorXd> v) : vertices(std::move(v))
    {
        detail::require(!vertices.empty(), "VPolytope: at least one vertex required");
        for (const auto& vi : vertices)
        {
            detail::require(vi.size() == vertices.front().size(), "VPolytope: vertex dimension mismatch");
            detail::require(vi.allFinite(), "VPolytope: vertices must be finite");
        }
    }

    int dim() const { return static_cast<int>(vertices.front().size()); }
};

/// Cartesian product A x B of constrained zonotopes (block diagonal assembly).
inline ConstrainedZonotope cartesian_product(const ConstrainedZonotope& A, const ConstrainedZonotope& B)
{
    const int n = A.dim() + B.dim();
    const int ng = A.num_factors() + B.num_factors();
    const int nc = A.num_constraints() + B.num_constraints();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, ng);
    G.topLeftCorner(A.dim(), A.num_factors()) = A.G;
    G.bottomRightCorner(B.dim(), B.num_factors()) = B.G;
    Eigen::VectorXd c(n);
    c << A.c, B.c;
    Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(nc, ng);
    Ac.topLeftCorner(A.num_constraints(), A.num_factors()) = A.A;
    Ac.bottomRightCorner(B.num_constraints(), B.num_factors()) = B.A;
    Eigen::VectorXd b(nc);
    b << A.b, B.b;
    return ConstrainedZonotope(std::move(G), std::move(c), std::move(Ac), std::move(b));
}

} // namespace zonoplan

#endif
