#ifndef ZONOPLAN_CORE_HPP_
#define ZONOPLAN_CORE_HPP_

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace zonoplan
{

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Default tolerance of the LP backend used by the membership and support oracles.
constexpr double kLpTol = 1e-7;

/// Default tolerance for point-membership queries against zonotopic sets.
constexpr double kMembershipTol = 1e-6;

/// Vertices closer than this (infinity norm) are treated as identical.
constexpr double kVertexDedupTol = 1e-9;

/// Per-coordinate interval bounds, e.g. a bounding box.
struct Interval
{
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const
    {
        if (x.size() != lo.size())
            return false;
        return (x.array() >= lo.array() - tol).all() && (x.array() <= hi.array() + tol).all();
    }
};

namespace detail
{

inline void require(bool cond, const std::string& msg)
{
    if (!cond)
        throw std::invalid_argument(msg);
}

} // namespace detail

} // namespace zonoplan

#endif
