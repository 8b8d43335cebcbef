#ifndef ZONOPLAN_VEHICLE_HPP_
#define ZONOPLAN_VEHICLE_HPP_

#include "core.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace zonoplan
{

enum class Variant
{
    hybrid_electric,
    electric
};

/// Vehicle limits and energy-system parameters, SI base units throughout
/// (W, J, s, m, kg, rad).
struct VehicleParams
{
    double v_min = 0.0;    // m/s
    double v_max = 0.0;    // m/s
    double omega_lim = 0.0; // rad/s
    double P_min = 0.0;    // W, total output power floor
    double P_max = 0.0;    // W
    double Pb_min = 0.0;   // W (negative allows charging)
    double Pb_max = 0.0;   // W
    double Pe_min = 0.0;   // W
    double Pe_max = 0.0;   // W
    double Pb_rate = 0.0;  // W/s
    double Pe_rate = 0.0;  // W/s
    double C_b = 0.0;      // J
    double SFC = 0.0;      // kg/J
    double SOC_min = 0.0;
    double SOC_max = 1.0;
    double mf_max = 0.0;   // kg
    Variant variant = Variant::hybrid_electric;
    bool forward_progress = false;

    bool is_hybrid() const { return variant == Variant::hybrid_electric; }
    int num_states() const { return is_hybrid() ? 8 : 6; }
    int num_inputs() const { return is_hybrid() ? 4 : 3; }

    void validate() const
    {
        detail::require(v_max > v_min && v_min > 0.0, "VehicleParams: need v_max > v_min > 0");
        detail::require(P_max > P_min && P_min > 0.0, "VehicleParams: need P_max > P_min > 0");
        detail::require(omega_lim > 0.0, "VehicleParams: need omega_lim > 0");
        detail::require(Pb_max >= Pb_min, "VehicleParams: need Pb_max >= Pb_min");
        detail::require(C_b > 0.0, "VehicleParams: need C_b > 0");
        detail::require(SOC_max > SOC_min, "VehicleParams: need SOC_max > SOC_min");
        detail::require(Pb_rate > 0.0, "VehicleParams: need Pb_rate > 0");
        if (is_hybrid())
        {
            detail::require(Pe_max >= Pe_min, "VehicleParams: need Pe_max >= Pe_min");
            detail::require(Pe_rate > 0.0, "VehicleParams: need Pe_rate > 0");
            detail::require(SFC >= 0.0 && mf_max > 0.0, "VehicleParams: need SFC >= 0, mf_max > 0");
        }
    }
};

/// Quasi-steady linear power-velocity map: P(v) on [v_min, v_max].
inline double power_velocity(const VehicleParams& p, double v)
{
    detail::require(v >= p.v_min - 1e-12 && v <= p.v_max + 1e-12, "power_velocity: v out of range");
    return (p.P_max - p.P_min) / (p.v_max - p.v_min) * (v - p.v_min) + p.P_min;
}

/// Inverse of the power-velocity map: admissible speed limit at total power P.
inline double velocity_limit(const VehicleParams& p, double P)
{
    return p.v_min + (p.v_max - p.v_min) / (p.P_max - p.P_min) * (P - p.P_min);
}

/// Parameters of the coupled state constraint set construction.
struct StateConstraintParams
{
    double c_z = 0.0;
    double a_z = 0.0;
    double b_z = 0.0;
    double g_b = 0.0;
    double c_b = 0.0;
    double g_e = 0.0;
    double c_e = 0.0;
    double c_1 = 0.0;
};

inline StateConstraintParams state_constraint_params(const VehicleParams& p)
{
    StateConstraintParams s;
    s.c_z = (p.P_max - p.P_min) / 2.0;
    s.a_z = ((p.v_max + p.v_min) / (p.v_max - p.v_min)) * s.c_z;
    s.b_z = (s.a_z / (s.a_z + s.c_z)) * p.v_max;
    s.g_b = (p.Pb_max - p.Pb_min) / 2.0;
    s.c_b = (p.Pb_max + p.Pb_min) / 2.0;
    if (p.is_hybrid())
    {
        s.g_e = (p.Pe_max - p.Pe_min) / 2.0;
        s.c_e = (p.Pe_max + p.Pe_min) / 2.0;
    }
    s.c_1 = 2.0 * s.a_z - (s.a_z - s.c_z) + p.P_min;
    return s;
}

/// Table-style parameter sets used by the two shipped case studies.
inline VehicleParams hybrid_case_study_params()
{
    VehicleParams p;
    p.variant = Variant::hybrid_electric;
    p.v_min = 10.0;
    p.v_max = 20.0;
    p.omega_lim = 2.0 * M_PI / 180.0;
    p.P_min = 1000.0;
    p.P_max = 6000.0;
    p.Pb_min = -3000.0;
    p.Pb_max = 3000.0;
    p.Pe_min = 0.0;
    p.Pe_max = 3000.0;
    p.Pb_rate = 1400.0;
    p.Pe_rate = 175.0;
    p.C_b = 0.5 * 3.6e6; // 0.5 kWh
    p.SFC = 10.0 / 3.6e6; // 10 kg/kWh
    p.SOC_min = 0.25;
    p.SOC_max = 1.0;
    p.mf_max = 50.0;
    p.forward_progress = true;
    return p;
}

inline VehicleParams electric_case_study_params()
{
    VehicleParams p;
    p.variant = Variant::electric;
    p.v_min = 0.5;
    p.v_max = 1.5;
    p.omega_lim = 45.0 * M_PI / 180.0;
    p.Pb_min = 1.25;
    p.Pb_max = 33.75;
    p.P_min = p.Pb_min;
    p.P_max = p.Pb_max;
    p.Pb_rate = 20.0;
    p.C_b = 5000.0;
    p.SOC_min = 0.25;
    p.SOC_max = 1.0;
    p.forward_progress = false;
    return p;
}

} // namespace zonoplan

#endif
