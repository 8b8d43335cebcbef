#ifndef ZONOPLAN_VEHICLE_SETS_HPP_
#define ZONOPLAN_VEHICLE_SETS_HPP_

#include "core.hpp"
#include "set_ops.hpp"
#include "sets.hpp"
#include "vehicle.hpp"

#include <Eigen/Dense>

#include <utility>

namespace zonoplan
{

/// Input constraint set over (xiddot, etaddot[, Pbdot, Pedot]). The
/// acceleration pair is a rotated box (turn-rate limit at minimum speed);
/// power rates are plain box factors appended block-diagonally.
inline ConstrainedZonotope build_input_set(const VehicleParams& p)
{
    p.validate();
    const double s = 0.5 * p.v_min * p.omega_lim;
    Eigen::Matrix2d diamond;
    diamond << s, s, -s, s;

    const int m = p.num_inputs();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
    G.topLeftCorner(2, 2) = diamond;
    G(2, 2) = p.Pb_rate;
    if (p.is_hybrid())
        G(3, 3) = p.Pe_rate;
    return ConstrainedZonotope(G, Eigen::VectorXd::Zero(m), Eigen::MatrixXd(0, m), Eigen::VectorXd(0));
}

/// H-rep of the coupled state constraints: total-power floor, the power-coupled
/// velocity diamond, and the power box limits. Used as the baseline for the
/// constrained-zonotope construction and by the membership-equivalence tests.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> state_hrep(const VehicleParams& p)
{
    const double slope = (p.v_max - p.v_min) / (p.P_max - p.P_min);
    if (p.is_hybrid())
    {
        Eigen::MatrixXd H(9, 4);
        Eigen::VectorXd f(9);
        H.setZero();
        // total power floor
        H.row(0) << 0, 0, -1, -1;
        f(0) = -p.P_min;
        // velocity diamond coupled to total power
        int r = 1;
        for (double sx : {1.0, -1.0})
            for (double sy : {1.0, -1.0})
            {
                H.row(r) << sx, sy, -slope, -slope;
                f(r) = p.v_min - slope * p.P_min;
                ++r;
            }
        H.row(5) << 0, 0, 1, 0;
        f(5) = p.Pb_max;
        H.row(6) << 0, 0, -1, 0;
        f(6) = -p.Pb_min;
        H.row(7) << 0, 0, 0, 1;
        f(7) = p.Pe_max;
        H.row(8) << 0, 0, 0, -1;
        f(8) = -p.Pe_min;
        return {H, f};
    }
    Eigen::MatrixXd H(7, 3);
    Eigen::VectorXd f(7);
    H.setZero();
    H.row(0) << 0, 0, -1;
    f(0) = -p.P_min;
    int r = 1;
    for (double sx : {1.0, -1.0})
        for (double sy : {1.0, -1.0})
        {
            H.row(r) << sx, sy, -slope;
            f(r) = p.v_min - slope * p.P_min;
            ++r;
        }
    H.row(5) << 0, 0, 1;
    f(5) = p.Pb_max;
    H.row(6) << 0, 0, -1;
    f(6) = -p.Pb_min;
    return {H, f};
}

/// Coupled state constraint set over (xidot, etadot, P_b[, P_e]) in the
/// low-complexity generator form: two velocity diamonds tied to a shared
/// total-power factor, power boxes on dedicated factors. 7 factors and 4
/// equality constraints for the hybrid variant (8 and 5 with the forward
/// progress halfspace applied).
inline ConstrainedZonotope build_state_set(const VehicleParams& p)
{
    p.validate();
    const StateConstraintParams s = state_constraint_params(p);
    if (p.is_hybrid())
        detail::require(p.P_min <= p.Pb_max + p.Pe_max && p.P_max >= p.Pb_min + p.Pe_min,
                        "infeasible state set");
    else
        detail::require(p.P_min <= p.Pb_max && p.P_max >= p.Pb_min, "infeasible state set");

    ConstrainedZonotope Z;
    if (p.is_hybrid())
    {
        Eigen::MatrixXd G(4, 7);
        G << 0, 0, s.b_z / 2, -s.b_z / 2, s.b_z / 2, -s.b_z / 2, 0,
             0, 0, -s.b_z / 2, s.b_z / 2, s.b_z / 2, -s.b_z / 2, 0,
             s.g_b, 0, 0, 0, 0, 0, 0,
             0, s.g_e, 0, 0, 0, 0, 0;
        Eigen::VectorXd c(4);
        c << 0, 0, s.c_b, s.c_e;
        Eigen::MatrixXd A(4, 7);
        A << s.g_b, s.g_e, s.a_z, s.a_z, 0, 0, 0,
             0, 0, s.a_z, s.a_z, 0, 0, s.c_z,
             0, 0, 0, 0, s.a_z, s.a_z, s.c_z,
             s.g_b, s.g_e, 0, 0, s.a_z, s.a_z, 0;
        Eigen::VectorXd b(4);
        b << s.c_1 - s.c_b - s.c_e, s.a_z, s.a_z, s.c_1 - s.c_b - s.c_e;
        Z = ConstrainedZonotope(std::move(G), std::move(c), std::move(A), std::move(b));
    }
    else
    {
        Eigen::MatrixXd G(3, 6);
        G << 0, s.b_z / 2, -s.b_z / 2, s.b_z / 2, -s.b_z / 2, 0,
             0, -s.b_z / 2, s.b_z / 2, s.b_z / 2, -s.b_z / 2, 0,
             s.g_b, 0, 0, 0, 0, 0;
        Eigen::VectorXd c(3);
        c << 0, 0, s.c_b;
        Eigen::MatrixXd A(4, 6);
        A << s.g_b, s.a_z, s.a_z, 0, 0, 0,
             0, s.a_z, s.a_z, 0, 0, s.c_z,
             0, 0, 0, s.a_z, s.a_z, s.c_z,
             s.g_b, 0, 0, s.a_z, s.a_z, 0;
        Eigen::VectorXd b(4);
        b << s.c_1 - s.c_b, s.a_z, s.a_z, s.c_1 - s.c_b;
        Z = ConstrainedZonotope(std::move(G), std::move(c), std::move(A), std::move(b));
    }

    if (p.forward_progress)
    {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(Z.dim());
        a(0) = -1.0; // xidot >= v_min
        Z = intersect_halfspace(Z, a, -p.v_min);
    }
    return Z;
}

/// Wayset intervals for the terminal set: position and terminal state of
/// charge windows.
struct Wayset
{
    Interval xi;  // scalar interval
    Interval eta; // scalar interval
    Interval soc; // scalar interval
};

inline Interval scalar_interval(double lo, double hi)
{
    detail::require(hi >= lo, "wayset: empty interval");
    Interval iv;
    iv.lo = Eigen::VectorXd::Constant(1, lo);
    iv.hi = Eigen::VectorXd::Constant(1, hi);
    return iv;
}

/// Terminal constraint set over (X coordinates..., xi, eta, SOC): the state
/// set extended block-diagonally with interval generators from the wayset.
inline ConstrainedZonotope build_terminal_set(const ConstrainedZonotope& X, const Wayset& wayset)
{
    for (const Interval* iv : {&wayset.xi, &wayset.eta, &wayset.soc})
    {
        detail::require(iv->lo.size() == 1 && iv->hi.size() == 1, "build_terminal_set: scalar intervals");
        detail::require(iv->hi(0) >= iv->lo(0), "build_terminal_set: empty wayset interval");
    }
    Eigen::Vector3d lo(wayset.xi.lo(0), wayset.eta.lo(0), wayset.soc.lo(0));
    Eigen::Vector3d hi(wayset.xi.hi(0), wayset.eta.hi(0), wayset.soc.hi(0));
    return cartesian_product(X, ConstrainedZonotope::box(lo, hi));
}

} // namespace zonoplan

#endif
