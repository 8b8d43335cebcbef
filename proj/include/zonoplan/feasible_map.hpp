#ifndef ZONOPLAN_FEASIBLE_MAP_HPP_
#define ZONOPLAN_FEASIBLE_MAP_HPP_

#include "core.hpp"
#include "partition.hpp"
#include "set_ops.hpp"
#include "sets.hpp"

#include <Eigen/Dense>

#include <vector>

namespace zonoplan
{

/// Hybrid-zonotope encoding of the feasible output set. The binary group of F
/// is one-hot over all cells; region_of_binary maps binary column -> cell
/// index in the partition ordering [free..., noise...].
struct FeasibleMap
{
    ConvexPartition partition;
    HybridZonotope F;
    std::vector<int> region_of_binary;

    int dim() const { return F.dim(); }
    int num_regions() const { return partition.num_cells(); }

    double region_cost(int cell) const { return partition.cell_costs(cell); }
};

namespace detail
{

inline VPolytope extrude_cell(const Polygon& cell, double p_lo, double p_hi)
{
    std::vector<Eigen::VectorXd> verts;
    verts.reserve(2 * cell.size());
    for (const auto& v : cell)
        verts.push_back(Eigen::Vector3d(v.x(), v.y(), p_lo));
    for (const auto& v : cell)
        verts.push_back(Eigen::Vector3d(v.x(), v.y(), p_hi));
    return VPolytope(verts);
}

inline VPolytope flat_cell(const Polygon& cell)
{
    std::vector<Eigen::VectorXd> verts;
    verts.reserve(cell.size());
    for (const auto& v : cell)
        verts.push_back(Eigen::Vector2d(v));
    return VPolytope(verts);
}

} // namespace detail

/// Feasible set over (xi, eta, P_e) for the hybrid-electric variant: free
/// cells extruded to P_e in [0, Pe_max], noise cells to [0, P_noise].
inline FeasibleMap build_feasible_set_3d(const ConvexPartition& partition, double Pe_max, double P_noise)
{
    detail::require(Pe_max >= P_noise && P_noise >= 0.0, "build_feasible_set_3d: need Pe_max >= P_noise >= 0");
    detail::require(partition.num_cells() > 0, "build_feasible_set_3d: empty partition");
    std::vector<VPolytope> polys;
    polys.reserve(static_cast<size_t>(partition.num_cells()));
    for (const auto& cell : partition.free_cells)
        polys.push_back(detail::extrude_cell(cell, 0.0, Pe_max));
    for (const auto& cell : partition.noise_cells)
        polys.push_back(detail::extrude_cell(cell, 0.0, P_noise));

    FeasibleMap map;
    map.partition = partition;
    map.F = hybzono_from_vrep(polys);
    map.region_of_binary.resize(static_cast<size_t>(partition.num_cells()));
    for (int i = 0; i < partition.num_cells(); ++i)
        map.region_of_binary[static_cast<size_t>(i)] = i;
    return map;
}

/// Feasible set over (xi, eta) for the electric variant.
inline FeasibleMap build_feasible_set_2d(const ConvexPartition& partition)
{
    detail::require(partition.num_cells() > 0, "build_feasible_set_2d: empty partition");
    std::vector<VPolytope> polys;
    polys.reserve(static_cast<size_t>(partition.num_cells()));
    for (const auto& cell : partition.free_cells)
        polys.push_back(detail::flat_cell(cell));
    for (const auto& cell : partition.noise_cells)
        polys.push_back(detail::flat_cell(cell));

    FeasibleMap map;
    map.partition = partition;
    map.F = hybzono_from_vrep(polys);
    map.region_of_binary.resize(static_cast<size_t>(partition.num_cells()));
    for (int i = 0; i < partition.num_cells(); ++i)
        map.region_of_binary[static_cast<size_t>(i)] = i;
    return map;
}

} // namespace zonoplan

#endif
