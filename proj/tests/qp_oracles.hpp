// Test-only dense reference solvers for multistage QPs, independent of the
// structured solver they check.
#ifndef ZONOPLAN_TESTS_QP_ORACLES_HPP_
#define ZONOPLAN_TESTS_QP_ORACLES_HPP_

#include <zonoplan/multistage_qp.hpp>

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <vector>

namespace oracles
{

struct DenseQP
{
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd A; // A z + a = 0
    Eigen::VectorXd a;
    Eigen::MatrixXd G; // G z <= w
    Eigen::VectorXd w;
    double offset = 0.0;
};

inline DenseQP flatten(const zonoplan::MultistageQP& qp)
{
    int n = 0, me = 0, mi = 0;
    std::vector<int> z_off(qp.stages.size());
    for (size_t k = 0; k < qp.stages.size(); ++k)
    {
        z_off[k] = n;
        n += qp.stages[k].nz();
        me += qp.stages[k].num_eq();
        mi += qp.stages[k].num_ineq();
    }
    for (const auto& cb : qp.couplings)
        me += cb.rows();

    DenseQP d;
    d.P = Eigen::MatrixXd::Zero(n, n);
    d.q = Eigen::VectorXd::Zero(n);
    d.A = Eigen::MatrixXd::Zero(me, n);
    d.a = Eigen::VectorXd::Zero(me);
    d.G = Eigen::MatrixXd::Zero(mi, n);
    d.w = Eigen::VectorXd::Zero(mi);
    d.offset = qp.obj_offset;
    int re = 0, ri = 0;
    for (size_t k = 0; k < qp.stages.size(); ++k)
    {
        const auto& s = qp.stages[k];
        d.P.block(z_off[k], z_off[k], s.nz(), s.nz()) = s.P;
        d.q.segment(z_off[k], s.nz()) = s.q;
        if (s.num_eq() > 0)
        {
            d.A.block(re, z_off[k], s.num_eq(), s.nz()) = s.E;
            d.a.segment(re, s.num_eq()) = s.e;
            re += s.num_eq();
        }
        if (s.num_ineq() > 0)
        {
            d.G.block(ri, z_off[k], s.num_ineq(), s.nz()) = s.G;
            d.w.segment(ri, s.num_ineq()) = s.w;
            ri += s.num_ineq();
        }
    }
    for (size_t k = 0; k < qp.couplings.size(); ++k)
    {
        const auto& cb = qp.couplings[k];
        if (cb.rows() == 0)
            continue;
        d.A.block(re, z_off[k], cb.rows(), cb.C.cols()) = cb.C;
        d.A.block(re, z_off[k + 1], cb.rows(), cb.D.cols()) = cb.D;
        d.a.segment(re, cb.rows()) = cb.c;
        re += cb.rows();
    }
    return d;
}

/// Equality-constrained QP via one dense KKT solve (least-squares for
/// redundant rows). Returns objective.
inline double dense_kkt_objective(const DenseQP& d)
{
    const int n = static_cast<int>(d.P.rows());
    const int m = static_cast<int>(d.A.rows());
    Eigen::MatrixXd K(n + m, n + m);
    K.setZero();
    K.topLeftCorner(n, n) = d.P;
    K.topRightCorner(n, m) = d.A.transpose();
    K.bottomLeftCorner(m, n) = d.A;
    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = -d.q;
    rhs.tail(m) = -d.a;
    const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
    const Eigen::VectorXd z = sol.head(n);
    return 0.5 * z.dot(d.P * z) + d.q.dot(z) + d.offset;
}

/// Inequality-constrained QP by brute-force active-set enumeration (small
/// problems only). Returns nullopt when infeasible.
inline std::optional<double> active_set_objective(const DenseQP& d)
{
    const int n = static_cast<int>(d.P.rows());
    const int mi = static_cast<int>(d.G.rows());
    double best = zonoplan::kInf;
    bool found = false;
    for (long mask = 0; mask < (1L << mi); ++mask)
    {
        std::vector<int> act;
        for (int i = 0; i < mi; ++i)
            if ((mask >> i) & 1)
                act.push_back(i);
        const int me = static_cast<int>(d.A.rows());
        const int m = me + static_cast<int>(act.size());
        Eigen::MatrixXd K(n + m, n + m);
        K.setZero();
        K.topLeftCorner(n, n) = d.P;
        Eigen::MatrixXd A(m, n);
        Eigen::VectorXd a(m);
        A.topRows(me) = d.A;
        a.head(me) = -d.a;
        for (size_t i = 0; i < act.size(); ++i)
        {
            A.row(me + static_cast<int>(i)) = d.G.row(act[i]);
            a(me + static_cast<int>(i)) = d.w(act[i]);
        }
        K.topRightCorner(n, m) = A.transpose();
        K.bottomLeftCorner(m, n) = A;
        Eigen::VectorXd rhs(n + m);
        rhs.head(n) = -d.q;
        rhs.tail(m) = a;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        if (!lu.isInvertible())
            continue;
        const Eigen::VectorXd sol = lu.solve(rhs);
        const Eigen::VectorXd z = sol.head(n);
        // primal feasibility
        if (((d.G * z - d.w).array() > 1e-8).any())
            continue;
        if (me > 0 && (d.A * z + d.a).cwiseAbs().maxCoeff() > 1e-8)
            continue;
        // dual feasibility on active inequality multipliers
        bool dual_ok = true;
        for (size_t i = 0; i < act.size(); ++i)
            if (sol(n + me + static_cast<int>(i)) < -1e-8)
                dual_ok = false;
        if (!dual_ok)
            continue;
        found = true;
        best = std::min(best, 0.5 * z.dot(d.P * z) + d.q.dot(z) + d.offset);
    }
    if (!found)
        return std::nullopt;
    return best;
}

/// Random well-conditioned equality-coupled multistage QP (LQR-like chain
/// with stage equalities).
inline zonoplan::MultistageQP random_chain_qp(std::mt19937_64& rng, int N, int nx, int nu,
                                              bool with_boxes)
{
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto rmat = [&](int r, int c) {
        Eigen::MatrixXd M(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                M(i, j) = unif(rng);
        return M;
    };
    const int nz = nx + nu;
    zonoplan::MultistageQP qp;
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(nx, nx) + 0.1 * rmat(nx, nx);
    const Eigen::MatrixXd B = rmat(nx, nu);
    for (int k = 0; k <= N; ++k)
    {
        zonoplan::StageQP s = zonoplan::StageQP::zero(nz);
        Eigen::MatrixXd M = rmat(nz, nz);
        s.P = M * M.transpose() + Eigen::MatrixXd::Identity(nz, nz); // well conditioned PD
        s.q = rmat(nz, 1);
        if (k == 0)
        {
            // pin x0
            s.E = Eigen::MatrixXd::Zero(nx, nz);
            s.E.leftCols(nx) = Eigen::MatrixXd::Identity(nx, nx);
            s.e = rmat(nx, 1);
        }
        if (with_boxes)
        {
            s.G = Eigen::MatrixXd::Zero(2 * nu, nz);
            s.G.block(0, nx, nu, nu) = Eigen::MatrixXd::Identity(nu, nu);
            s.G.block(nu, nx, nu, nu) = -Eigen::MatrixXd::Identity(nu, nu);
            s.w = Eigen::VectorXd::Constant(2 * nu, 0.5);
        }
        qp.stages.push_back(std::move(s));
    }
    for (int k = 0; k < N; ++k)
    {
        zonoplan::CouplingBlock cb;
        cb.C = Eigen::MatrixXd::Zero(nx, nz);
        cb.C.leftCols(nx) = A;
        cb.C.rightCols(nu) = B;
        cb.D = Eigen::MatrixXd::Zero(nx, nz);
        cb.D.leftCols(nx) = -Eigen::MatrixXd::Identity(nx, nx);
        cb.c = 0.1 * rmat(nx, 1);
        qp.couplings.push_back(std::move(cb));
    }
    return qp;
}

} // namespace oracles

#endif
