#ifndef ZONOPLAN_MULTISTAGE_QP_HPP_
#define ZONOPLAN_MULTISTAGE_QP_HPP_

#include "core.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace zonoplan
{

/// One stage of the multistage QP: cost 0.5 z'P z + q'z, stage-local
/// equalities E z + e = 0 and inequalities G z <= w.
struct StageQP
{
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd E;
    Eigen::VectorXd e;
    Eigen::MatrixXd G;
    Eigen::VectorXd w;

    int nz() const { return static_cast<int>(q.size()); }
    int num_eq() const { return static_cast<int>(e.size()); }
    int num_ineq() const { return static_cast<int>(w.size()); }

    static StageQP zero(int nz)
    {
        StageQP s;
        s.P = Eigen::MatrixXd::Zero(nz, nz);
        s.q = Eigen::VectorXd::Zero(nz);
        s.E = Eigen::MatrixXd(0, nz);
        s.e = Eigen::VectorXd(0);
        s.G = Eigen::MatrixXd(0, nz);
        s.w = Eigen::VectorXd(0);
        return s;
    }
};

/// Stage-coupling equalities 0 = C z_k + D z_{k+1} + c.
struct CouplingBlock
{
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;
    Eigen::VectorXd c;

    int rows() const { return static_cast<int>(c.size()); }
};

/// Variable layout of a stage vector z = [x; u; factors...]. Binary factor
/// indices (relaxed to [-1,1] boxes in node relaxations) are listed per
/// stage; each one-hot group encodes a region choice.
struct StageLayout
{
    int nx = 0;
    int nu = 0;
    std::vector<std::vector<int>> binary_groups; // indices into the stage z vector
    std::vector<int> free_binaries;              // binaries outside any group
    /// Continuous factor indices controlled by each group member: when member
    /// j of group g is not chosen, the factors in group_factors[g][j] are
    /// forced to -1 by the one-hot equality rows and can be eliminated with
    /// the binaries (keeps node QPs strictly interior and small).
    std::vector<std::vector<std::vector<int>>> group_factors;

    std::vector<int> all_binaries() const
    {
        std::vector<int> out = free_binaries;
        for (const auto& g : binary_groups)
            out.insert(out.end(), g.begin(), g.end());
        return out;
    }
};

/// Multistage QP over stages 0..N with banded coupling structure.
struct MultistageQP
{
    std::vector<StageQP> stages;
    std::vector<CouplingBlock> couplings; // size = stages.size() - 1
    std::vector<StageLayout> layouts;     // optional, same size as stages when present
    double obj_offset = 0.0;

    int horizon() const { return static_cast<int>(stages.size()) - 1; }

    int total_vars() const
    {
        int n = 0;
        for (const auto& s : stages)
            n += s.nz();
        return n;
    }

    void validate() const
    {
        detail::require(!stages.empty(), "MultistageQP: no stages");
        detail::require(couplings.size() + 1 == stages.size(), "MultistageQP: coupling count mismatch");
        for (size_t k = 0; k < stages.size(); ++k)
        {
            const auto& s = stages[k];
            const int nz = s.nz();
            detail::require(s.P.rows() == nz && s.P.cols() == nz, "MultistageQP: P dimension mismatch");
            detail::require((s.P - s.P.transpose()).cwiseAbs().maxCoeff() <=
                                1e-9 * (1.0 + s.P.cwiseAbs().maxCoeff()),
                            "MultistageQP: P not symmetric");
            detail::require(s.E.rows() == s.e.size() && (s.E.cols() == nz || s.E.rows() == 0),
                            "MultistageQP: E dimension mismatch");
            detail::require(s.G.rows() == s.w.size() && (s.G.cols() == nz || s.G.rows() == 0),
                            "MultistageQP: G dimension mismatch");
        }
        for (size_t k = 0; k < couplings.size(); ++k)
        {
            const auto& cb = couplings[k];
            detail::require(cb.C.rows() == cb.c.size() && cb.D.rows() == cb.c.size(),
                            "MultistageQP: coupling row mismatch");
            detail::require(cb.C.cols() == stages[k].nz(), "MultistageQP: C column mismatch");
            detail::require(cb.D.cols() == stages[k + 1].nz(), "MultistageQP: D column mismatch");
        }
        if (!layouts.empty())
            detail::require(layouts.size() == stages.size(), "MultistageQP: layout count mismatch");
    }

    double objective_of(const std::vector<Eigen::VectorXd>& z) const
    {
        double obj = obj_offset;
        for (size_t k = 0; k < stages.size(); ++k)
            obj += 0.5 * z[k].dot(stages[k].P * z[k]) + stages[k].q.dot(z[k]);
        return obj;
    }
};

} // namespace zonoplan

#endif
