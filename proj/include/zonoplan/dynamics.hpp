#ifndef ZONOPLAN_DYNAMICS_HPP_
#define ZONOPLAN_DYNAMICS_HPP_

#include "core.hpp"
#include "sets.hpp"
#include "vehicle.hpp"
#include "vehicle_sets.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace zonoplan
{

/// Continuous-time LTI model xdot = A x + B u. Hybrid variant:
/// x = [xi, xidot, eta, etadot, SOC, P_b, m_f, P_e], u = [xiddot, etaddot,
/// Pbdot, Pedot]. Electric variant drops the engine states and input.
struct ContinuousModel
{
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    std::vector<std::string> state_labels;
    std::vector<std::string> input_labels;
};

inline ContinuousModel continuous_dynamics(const VehicleParams& p)
{
    p.validate();
    ContinuousModel m;
    const int n = p.num_states();
    const int nu = p.num_inputs();
    m.A = Eigen::MatrixXd::Zero(n, n);
    m.B = Eigen::MatrixXd::Zero(n, nu);
    m.A(0, 1) = 1.0; // xi
    m.A(2, 3) = 1.0; // eta
    m.B(1, 0) = 1.0;
    m.B(3, 1) = 1.0;
    m.A(4, 5) = -1.0 / p.C_b; // SOC driven by battery power
    m.B(5, 2) = 1.0;
    m.state_labels = {"xi", "xidot", "eta", "etadot", "soc", "pb"};
    m.input_labels = {"xiddot", "etaddot", "pbdot"};
    if (p.is_hybrid())
    {
        m.A(6, 7) = -p.SFC; // fuel mass decreases with engine power
        m.B(7, 3) = 1.0;
        m.state_labels.push_back("mf");
        m.state_labels.push_back("pe");
        m.input_labels.push_back("pedot");
    }
    return m;
}

/// Exact zero-order-hold discretization. A is nilpotent here so the matrix
/// exponential series terminates.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretize(const ContinuousModel& m, double dt)
{
    detail::require(dt > 0.0, "discretize: dt must be positive");
    const int n = static_cast<int>(m.A.rows());
    Eigen::MatrixXd Ad = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(n, n) * dt; // integral of exp(A t)
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    double fact = 1.0;
    for (int k = 1; k <= n + 1; ++k)
    {
        term = term * m.A;
        if (term.cwiseAbs().maxCoeff() == 0.0)
            break;
        fact *= static_cast<double>(k);
        Ad += term * (std::pow(dt, k) / fact);
        S += term * (std::pow(dt, k + 1) / (fact * static_cast<double>(k + 1)));
    }
    return {Ad, S * m.B};
}

/// Discrete model plus its constraint sets. X covers (xidot, etadot, P_b[,
/// P_e]); XN extends it with (xi, eta, SOC) wayset intervals; box holds
/// global per-state bounds for the states not governed by X.
struct DiscreteModel
{
    Eigen::MatrixXd Ad;
    Eigen::MatrixXd Bd;
    double dt = 0.0;
    ConstrainedZonotope X;
    ConstrainedZonotope U;
    ConstrainedZonotope XN;
    Eigen::MatrixXd H; // output map to (xi, eta[, P_e])
    Interval box;      // global state box (infinite where X governs)
    std::vector<int> x_set_indices;  // states covered by X
    std::vector<int> xn_indices;     // states covered by XN
    VehicleParams params;
    std::vector<std::string> state_labels;
    std::vector<std::string> input_labels;

    int num_states() const { return static_cast<int>(Ad.rows()); }
    int num_inputs() const { return static_cast<int>(Bd.cols()); }
};

/// Assembles the discrete model: exact ZOH dynamics, the constrained-zonotope
/// state/input sets, the terminal set (wayset or full box), the output map
/// into the feasible-map space, and the global state box.
inline DiscreteModel build_discrete_model(const VehicleParams& p, double dt, const Interval& position_box,
                                          const Wayset* wayset = nullptr)
{
    p.validate();
    detail::require(position_box.dim() == 2, "build_discrete_model: position box must be 2-D");
    DiscreteModel m;
    m.params = p;
    m.dt = dt;
    const ContinuousModel cm = continuous_dynamics(p);
    std::tie(m.Ad, m.Bd) = discretize(cm, dt);
    m.state_labels = cm.state_labels;
    m.input_labels = cm.input_labels;
    m.X = build_state_set(p);
    m.U = build_input_set(p);

    Wayset ws;
    if (wayset)
        ws = *wayset;
    else
    {
        ws.xi = scalar_interval(position_box.lo(0), position_box.hi(0));
        ws.eta = scalar_interval(position_box.lo(1), position_box.hi(1));
        ws.soc = scalar_interval(p.SOC_min, p.SOC_max);
    }
    m.XN = build_terminal_set(m.X, ws);

    const int n = p.num_states();
    if (p.is_hybrid())
    {
        m.x_set_indices = {1, 3, 5, 7};
        m.H = Eigen::MatrixXd::Zero(3, n);
        m.H(0, 0) = 1.0;
        m.H(1, 2) = 1.0;
        m.H(2, 7) = 1.0;
    }
    else
    {
        m.x_set_indices = {1, 3, 5};
        m.H = Eigen::MatrixXd::Zero(2, n);
        m.H(0, 0) = 1.0;
        m.H(1, 2) = 1.0;
    }
    m.xn_indices = m.x_set_indices;
    m.xn_indices.push_back(0);
    m.xn_indices.push_back(2);
    m.xn_indices.push_back(4);

    m.box.lo = Eigen::VectorXd::Constant(n, -kInf);
    m.box.hi = Eigen::VectorXd::Constant(n, kInf);
    m.box.lo(0) = position_box.lo(0);
    m.box.hi(0) = position_box.hi(0);
    m.box.lo(2) = position_box.lo(1);
    m.box.hi(2) = position_box.hi(1);
    m.box.lo(4) = p.SOC_min;
    m.box.hi(4) = p.SOC_max;
    if (p.is_hybrid())
    {
        m.box.lo(6) = 0.0;
        m.box.hi(6) = p.mf_max;
    }
    return m;
}

/// Flat-output reconstruction of speed, heading and turn rate. The turn-rate
/// denominator is clamped at (0.1 v_min)^2; clamped samples are flagged.
struct FlatOutputs
{
    double v = 0.0;
    double theta = 0.0;
    double omega = 0.0;
    bool omega_clamped = false;
};

inline FlatOutputs reconstruct_flat_outputs(const VehicleParams& p, double xidot, double etadot,
                                            double xiddot, double etaddot)
{
    FlatOutputs out;
    out.v = std::hypot(xidot, etadot);
    out.theta = std::atan2(etadot, xidot);
    const double denom = xidot * xidot + etadot * etadot;
    const double floor = (0.1 * p.v_min) * (0.1 * p.v_min);
    out.omega_clamped = denom < floor;
    out.omega = (xidot * etaddot - etadot * xiddot) / std::max(denom, floor);
    return out;
}

} // namespace zonoplan

#endif
