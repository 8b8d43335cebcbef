#ifndef ZONOPLAN_QP_SOLVER_HPP_
#define ZONOPLAN_QP_SOLVER_HPP_

#include "core.hpp"
#include "multistage_qp.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace zonoplan
{

enum class QPStatus
{
    optimal,
    infeasible,
    max_iter
};

struct QPSettings
{
    double tol = 1e-8;
    double infeas_tol = 1e-6;
    int max_iter = 100;
    double reg = 1e-7; // primal-dual static regularization
    bool polish = true;
    bool allow_elastic_fallback = true;
    int ruiz_iters = 10;
    bool verbose = false;
};

struct QPSolution
{
    QPStatus status = QPStatus::max_iter;
    std::vector<Eigen::VectorXd> z;   // primal, per stage
    std::vector<Eigen::VectorXd> nu;  // stage-equality duals
    std::vector<Eigen::VectorXd> y;   // coupling duals (size = horizon)
    std::vector<Eigen::VectorXd> lam; // inequality duals
    std::vector<Eigen::VectorXd> s;   // inequality slacks
    double objective = 0.0;
    double kkt_residual = kInf;
    int iters = 0;
    double linalg_seconds = 0.0;
    bool polished = false;
    /// Per-stage max constraint violation from the elastic fallback solve
    /// (populated only when status == infeasible via the elastic phase).
    std::vector<double> stage_violation;
};

namespace detail
{

/// Block-tridiagonal symmetric indefinite factorization of the regularized
/// reduced KKT system in the stage-interleaved ordering (z_0, d_0, z_1, d_1,
/// ...), where d_k stacks the stage-equality and coupling duals of stage k.
/// Primal blocks stay positive definite and dual blocks negative definite
/// under primal-dual regularization, so plain Cholesky applies per block.
class BlockTridiagKKT
{
  public:
    struct StageBlocks
    {
        Eigen::MatrixXd H;  // primal block (with regularization)
        Eigen::MatrixXd F;  // [E; C] rows vs z_k
        Eigen::MatrixXd J;  // [0; D] rows vs z_{k+1} (empty at the last stage)
    };

    void factor(const std::vector<StageBlocks>& blocks, double reg)
    {
        const size_t N1 = blocks.size();
        S_.resize(N1);
        Om_.resize(N1);
        lltS_.resize(N1);
        lltOm_.resize(N1);
        for (size_t k = 0; k < N1; ++k)
        {
            S_[k] = blocks[k].H;
            if (k > 0 && blocks[k - 1].J.rows() > 0)
            {
                // S_k = H_k - J' Om^{-1} J ; Om is negative definite
                const Eigen::MatrixXd T = lltOm_[k - 1].solve(blocks[k - 1].J);
                S_[k] += blocks[k - 1].J.transpose() * T;
            }
            lltS_[k].compute(S_[k]);
            if (lltS_[k].info() != Eigen::Success)
                throw std::invalid_argument("solve_qp: invalid cost (stage Hessian not positive definite)");
            const int md = static_cast<int>(blocks[k].F.rows());
            if (md > 0)
            {
                const Eigen::MatrixXd T = lltS_[k].solve(blocks[k].F.transpose());
                Om_[k] = blocks[k].F * T;
                Om_[k].diagonal().array() += reg;
                lltOm_[k].compute(Om_[k]); // factors -Omega, which is PD
                if (lltOm_[k].info() != Eigen::Success)
                    throw std::runtime_error("solve_qp: dual block factorization failed");
            }
            else
            {
                Om_[k].resize(0, 0);
            }
        }
        blocks_ = &blocks;
    }

    /// Solves the regularized KKT with rhs (rz_k, rd_k) in place.
    void solve(std::vector<Eigen::VectorXd>& rz, std::vector<Eigen::VectorXd>& rd) const
    {
        const auto& blocks = *blocks_;
        const size_t N1 = blocks.size();
        // forward sweep
        for (size_t k = 0; k < N1; ++k)
        {
            if (k > 0 && blocks[k - 1].J.rows() > 0)
                rz[k] -= blocks[k - 1].J.transpose() * (-lltOm_[k - 1].solve(rd[k - 1]));
            if (blocks[k].F.rows() > 0)
                rd[k] -= blocks[k].F * lltS_[k].solve(rz[k]);
        }
        // backward sweep
        for (size_t ki = N1; ki-- > 0;)
        {
            if (blocks[ki].F.rows() > 0)
            {
                Eigen::VectorXd t = rd[ki];
                if (ki + 1 < N1 && blocks[ki].J.rows() > 0)
                    t -= blocks[ki].J * rz[ki + 1];
                rd[ki] = -lltOm_[ki].solve(t); // S(dual) = -Omega
            }
            Eigen::VectorXd t = rz[ki];
            if (blocks[ki].F.rows() > 0)
                t -= blocks[ki].F.transpose() * rd[ki];
            rz[ki] = lltS_[ki].solve(t);
        }
    }

  private:
    const std::vector<StageBlocks>* blocks_ = nullptr;
    std::vector<Eigen::MatrixXd> S_, Om_;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> lltS_, lltOm_;
};

} // namespace detail

class MultistageQpSolver
{
  public:
    MultistageQpSolver(const MultistageQP& qp, const QPSettings& settings)
        : qp_(qp), set_(settings), N_(qp.horizon())
    {
        qp.validate();
        scale();
    }

    QPSolution solve(const QPSolution* warm = nullptr)
    {
        init_iterates(warm);
        QPSolution sol;
        sol.status = QPStatus::max_iter;

        const int m_ineq = total_ineq();
        for (int iter = 0; iter < set_.max_iter; ++iter)
        {
            compute_residuals();
            sol.iters = iter + 1;
            sol.kkt_residual = kkt_residual_;
            if (converged())
            {
                sol.status = QPStatus::optimal;
                break;
            }
            if (dual_certificate())
            {
                sol.status = QPStatus::infeasible;
                break;
            }

            const auto t0 = std::chrono::steady_clock::now();
            build_kkt();
            kkt_.factor(blocks_, set_.reg);

            // affine (predictor) direction
            std::vector<Eigen::VectorXd> rc(static_cast<size_t>(N_) + 1);
            for (int k = 0; k <= N_; ++k)
                rc[static_cast<size_t>(k)] = -(lam_[static_cast<size_t>(k)].array() * s_[static_cast<size_t>(k)].array()).matrix();
            auto [dz_a, dd_a] = solve_newton(rc);
            auto [ds_a, dl_a] = recover_ineq(dz_a, rc);
            sol.linalg_seconds += seconds_since(t0);

            double sigma = 0.0;
            if (m_ineq > 0)
            {
                const double ap = max_step(s_, ds_a);
                const double ad = max_step(lam_, dl_a);
                double mu_aff = 0.0;
                for (int k = 0; k <= N_; ++k)
                    mu_aff += ((lam_[static_cast<size_t>(k)] + ad * dl_a[static_cast<size_t>(k)]).array() *
                               (s_[static_cast<size_t>(k)] + ap * ds_a[static_cast<size_t>(k)]).array())
                                  .sum();
                mu_aff /= m_ineq;
                sigma = std::pow(std::clamp(mu_aff / mu_, 0.0, 1.0), 3.0);
            }

            // corrector
            const auto t1 = std::chrono::steady_clock::now();
            for (int k = 0; k <= N_; ++k)
            {
                auto& r = rc[static_cast<size_t>(k)];
                r = -(lam_[static_cast<size_t>(k)].array() * s_[static_cast<size_t>(k)].array()).matrix();
                if (m_ineq > 0)
                    r.array() += sigma * mu_ -
                                 (dl_a[static_cast<size_t>(k)].array() * ds_a[static_cast<size_t>(k)].array());
            }
            auto [dz, dd] = solve_newton(rc);
            auto [ds, dl] = recover_ineq(dz, rc);
            sol.linalg_seconds += seconds_since(t1);

            double ap = 1.0, ad = 1.0;
            if (m_ineq > 0)
            {
                ap = std::min(1.0, 0.995 * max_step(s_, ds));
                ad = std::min(1.0, 0.995 * max_step(lam_, dl));
            }
            for (int k = 0; k <= N_; ++k)
            {
                const auto ku = static_cast<size_t>(k);
                z_[ku] += ap * dz[ku];
                s_[ku] += ap * ds[ku];
                lam_[ku] += ad * dl[ku];
                nu_[ku] += ad * dd[ku].head(qs_[ku].num_eq());
                if (k < N_)
                    y_[ku] += ad * dd[ku].tail(qc_[ku].rows());
            }
            if (m_ineq > 0)
            {
                // keep iterates strictly interior
                for (int k = 0; k <= N_; ++k)
                {
                    s_[static_cast<size_t>(k)] = s_[static_cast<size_t>(k)].cwiseMax(1e-14);
                    lam_[static_cast<size_t>(k)] = lam_[static_cast<size_t>(k)].cwiseMax(1e-14);
                }
            }
        }

        fill_solution(sol);
        if (sol.status == QPStatus::max_iter && set_.allow_elastic_fallback)
            elastic_decide(sol);
        if (sol.status == QPStatus::optimal && set_.polish)
            polish(sol);
        return sol;
    }

  private:
    using Clock = std::chrono::steady_clock;

    static double seconds_since(const Clock::time_point& t0)
    {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }

    int total_ineq() const
    {
        int m = 0;
        for (const auto& s : qs_)
            m += s.num_ineq();
        return m;
    }

    // --- scaling ---------------------------------------------------------

    void scale()
    {
        qs_ = qp_.stages;
        qc_ = qp_.couplings;
        const size_t n1 = qs_.size();
        dz_.resize(n1);
        dE_.resize(n1);
        dG_.resize(n1);
        dC_.resize(qc_.size());
        for (size_t k = 0; k < n1; ++k)
        {
            dz_[k] = Eigen::VectorXd::Ones(qs_[k].nz());
            dE_[k] = Eigen::VectorXd::Ones(qs_[k].num_eq());
            dG_[k] = Eigen::VectorXd::Ones(qs_[k].num_ineq());
        }
        for (size_t k = 0; k < qc_.size(); ++k)
            dC_[k] = Eigen::VectorXd::Ones(qc_[k].rows());

        for (int it = 0; it < set_.ruiz_iters; ++it)
        {
            // column norms per variable
            for (size_t k = 0; k < n1; ++k)
            {
                Eigen::VectorXd m = Eigen::VectorXd::Zero(qs_[k].nz());
                auto upd = [&](const Eigen::MatrixXd& M) {
                    if (M.rows() > 0)
                        m = m.cwiseMax(M.cwiseAbs().colwise().maxCoeff().transpose());
                };
                upd(qs_[k].P);
                upd(qs_[k].E);
                upd(qs_[k].G);
                if (k < qc_.size())
                    upd(qc_[k].C);
                if (k > 0)
                    upd(qc_[k - 1].D);
                Eigen::VectorXd d = m.unaryExpr([](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; });
                apply_var_scaling(static_cast<int>(k), d);
            }
            // row norms
            for (size_t k = 0; k < n1; ++k)
            {
                auto row_scale = [](const Eigen::MatrixXd& M) {
                    Eigen::VectorXd m = M.cwiseAbs().rowwise().maxCoeff();
                    return m.unaryExpr([](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; });
                };
                if (qs_[k].num_eq() > 0)
                {
                    const Eigen::VectorXd d = row_scale(qs_[k].E);
                    qs_[k].E = d.asDiagonal() * qs_[k].E;
                    qs_[k].e = d.asDiagonal() * qs_[k].e;
                    dE_[k] = dE_[k].cwiseProduct(d);
                }
                if (qs_[k].num_ineq() > 0)
                {
                    const Eigen::VectorXd d = row_scale(qs_[k].G);
                    qs_[k].G = d.asDiagonal() * qs_[k].G;
                    qs_[k].w = d.asDiagonal() * qs_[k].w;
                    dG_[k] = dG_[k].cwiseProduct(d);
                }
                if (k < qc_.size() && qc_[k].rows() > 0)
                {
                    Eigen::MatrixXd CD(qc_[k].rows(), qc_[k].C.cols() + qc_[k].D.cols());
                    CD << qc_[k].C, qc_[k].D;
                    const Eigen::VectorXd d = row_scale(CD);
                    qc_[k].C = d.asDiagonal() * qc_[k].C;
                    qc_[k].D = d.asDiagonal() * qc_[k].D;
                    qc_[k].c = d.asDiagonal() * qc_[k].c;
                    dC_[k] = dC_[k].cwiseProduct(d);
                }
            }
        }
        // cost scaling
        double cost_norm = 0.0;
        for (const auto& s : qs_)
        {
            if (s.P.size() > 0)
                cost_norm = std::max(cost_norm, s.P.cwiseAbs().maxCoeff());
            if (s.q.size() > 0)
                cost_norm = std::max(cost_norm, s.q.cwiseAbs().maxCoeff());
        }
        sigma_c_ = cost_norm > 1.0 ? 1.0 / cost_norm : 1.0;
        for (auto& s : qs_)
        {
            s.P *= sigma_c_;
            s.q *= sigma_c_;
        }
    }

    void apply_var_scaling(int k, const Eigen::VectorXd& d)
    {
        const auto ku = static_cast<size_t>(k);
        qs_[ku].P = d.asDiagonal() * qs_[ku].P * d.asDiagonal();
        qs_[ku].q = d.asDiagonal() * qs_[ku].q;
        if (qs_[ku].num_eq() > 0)
            qs_[ku].E = qs_[ku].E * d.asDiagonal();
        if (qs_[ku].num_ineq() > 0)
            qs_[ku].G = qs_[ku].G * d.asDiagonal();
        if (ku < qc_.size())
            qc_[ku].C = qc_[ku].C * d.asDiagonal();
        if (k > 0)
            qc_[ku - 1].D = qc_[ku - 1].D * d.asDiagonal();
        dz_[ku] = dz_[ku].cwiseProduct(d);
    }

    // --- iterates ---------------------------------------------------------

    void init_iterates(const QPSolution* warm)
    {
        const size_t n1 = qs_.size();
        z_.assign(n1, {});
        nu_.assign(n1, {});
        lam_.assign(n1, {});
        s_.assign(n1, {});
        y_.assign(qc_.size(), {});
        const bool have_warm = warm && warm->z.size() == n1;
        for (size_t k = 0; k < n1; ++k)
        {
            z_[k] = Eigen::VectorXd::Zero(qs_[k].nz());
            nu_[k] = Eigen::VectorXd::Zero(qs_[k].num_eq());
            lam_[k] = Eigen::VectorXd::Ones(qs_[k].num_ineq());
            if (have_warm && warm->z[k].size() == qs_[k].nz())
                z_[k] = warm->z[k].cwiseQuotient(dz_[k]);
            if (have_warm && k < warm->nu.size() && warm->nu[k].size() == qs_[k].num_eq())
                nu_[k] = sigma_c_ * warm->nu[k].cwiseQuotient(dE_[k]);
            if (have_warm && k < warm->lam.size() && warm->lam[k].size() == qs_[k].num_ineq())
                lam_[k] = (sigma_c_ * warm->lam[k].cwiseQuotient(dG_[k])).cwiseMax(1e-3);
            s_[k] = (qs_[k].w - qs_[k].G * z_[k]).cwiseMax(have_warm ? 1e-3 : 1.0);
        }
        for (size_t k = 0; k < qc_.size(); ++k)
        {
            y_[k] = Eigen::VectorXd::Zero(qc_[k].rows());
            if (have_warm && k < warm->y.size() && warm->y[k].size() == qc_[k].rows())
                y_[k] = sigma_c_ * warm->y[k].cwiseQuotient(dC_[k]);
        }
    }

    // --- residuals and convergence ----------------------------------------

    void compute_residuals()
    {
        const size_t n1 = qs_.size();
        rd_.assign(n1, {});
        re_.assign(n1, {});
        ri_.assign(n1, {});
        rc_res_.assign(qc_.size(), {});
        mu_ = 0.0;
        int m_ineq = 0;
        for (size_t k = 0; k < n1; ++k)
        {
            rd_[k] = qs_[k].P * z_[k] + qs_[k].q;
            if (qs_[k].num_eq() > 0)
                rd_[k] += qs_[k].E.transpose() * nu_[k];
            if (qs_[k].num_ineq() > 0)
                rd_[k] += qs_[k].G.transpose() * lam_[k];
            if (k < qc_.size())
                rd_[k] += qc_[k].C.transpose() * y_[k];
            if (k > 0)
                rd_[k] += qc_[k - 1].D.transpose() * y_[k - 1];
            re_[k] = qs_[k].E * z_[k] + qs_[k].e;
            ri_[k] = qs_[k].G * z_[k] + s_[k] - qs_[k].w;
            mu_ += lam_[k].dot(s_[k]);
            m_ineq += qs_[k].num_ineq();
        }
        for (size_t k = 0; k < qc_.size(); ++k)
            rc_res_[k] = qc_[k].C * z_[k] + qc_[k].D * z_[k + 1] + qc_[k].c;
        mu_ = m_ineq > 0 ? mu_ / m_ineq : 0.0;

        // unscaled residual norms
        double rp = 0.0, rdn = 0.0, scale_p = 1.0, scale_d = 1.0;
        double obj = 0.0;
        for (size_t k = 0; k < n1; ++k)
        {
            const Eigen::VectorXd zt = dz_[k].cwiseProduct(z_[k]);
            obj += 0.5 * zt.dot(qp_.stages[k].P * zt) + qp_.stages[k].q.dot(zt);
            if (qs_[k].num_eq() > 0)
            {
                rp = std::max(rp, re_[k].cwiseQuotient(dE_[k]).cwiseAbs().maxCoeff());
                scale_p = std::max(scale_p, qp_.stages[k].e.cwiseAbs().maxCoeff());
            }
            if (qs_[k].num_ineq() > 0)
            {
                rp = std::max(rp, ri_[k].cwiseQuotient(dG_[k]).cwiseAbs().maxCoeff());
                scale_p = std::max(scale_p, qp_.stages[k].w.cwiseAbs().maxCoeff());
            }
            rdn = std::max(rdn, (rd_[k].cwiseQuotient(dz_[k])).cwiseAbs().maxCoeff() / sigma_c_);
            scale_d = std::max(scale_d, qp_.stages[k].q.cwiseAbs().maxCoeff());
            scale_d = std::max(scale_d, (qp_.stages[k].P * dz_[k].cwiseProduct(z_[k])).cwiseAbs().maxCoeff());
        }
        for (size_t k = 0; k < qc_.size(); ++k)
        {
            if (qc_[k].rows() > 0)
            {
                rp = std::max(rp, rc_res_[k].cwiseQuotient(dC_[k]).cwiseAbs().maxCoeff());
                scale_p = std::max(scale_p, qp_.couplings[k].c.cwiseAbs().maxCoeff());
            }
        }
        const double mu_true = mu_ / sigma_c_;
        objective_ = obj + qp_.obj_offset;
        res_primal_ = rp / (1.0 + scale_p);
        res_dual_ = rdn / (1.0 + scale_d);
        res_comp_ = mu_true / (1.0 + std::abs(objective_));
        kkt_residual_ = std::max({res_primal_, res_dual_, res_comp_});
    }

    bool converged() const
    {
        return res_primal_ <= set_.tol && res_dual_ <= set_.tol && res_comp_ <= set_.tol;
    }

    /// Farkas-style primal infeasibility certificate from the dual iterates.
    bool dual_certificate() const
    {
        double theta = 0.0;
        for (const auto& v : nu_)
            if (v.size() > 0)
                theta = std::max(theta, v.cwiseAbs().maxCoeff());
        for (const auto& v : y_)
            if (v.size() > 0)
                theta = std::max(theta, v.cwiseAbs().maxCoeff());
        for (const auto& v : lam_)
            if (v.size() > 0)
                theta = std::max(theta, v.cwiseAbs().maxCoeff());
        if (theta < 1e4)
            return false;

        double img = 0.0; // || E'nu + C'y + D'y + G'lam ||_inf
        double val = 0.0; // -e'nu - c'y + w'lam must be negative
        for (size_t k = 0; k < qs_.size(); ++k)
        {
            Eigen::VectorXd t = Eigen::VectorXd::Zero(qs_[k].nz());
            if (qs_[k].num_eq() > 0)
                t += qs_[k].E.transpose() * nu_[k];
            if (qs_[k].num_ineq() > 0)
                t += qs_[k].G.transpose() * lam_[k].cwiseMax(0.0);
            if (k < qc_.size())
                t += qc_[k].C.transpose() * y_[k];
            if (k > 0)
                t += qc_[k - 1].D.transpose() * y_[k - 1];
            img = std::max(img, t.cwiseAbs().maxCoeff());
            if (qs_[k].num_eq() > 0)
                val -= qs_[k].e.dot(nu_[k]);
            if (qs_[k].num_ineq() > 0)
                val += qs_[k].w.dot(lam_[k].cwiseMax(0.0));
        }
        for (size_t k = 0; k < qc_.size(); ++k)
            val -= qc_[k].c.dot(y_[k]);
        return img <= set_.infeas_tol * theta && val <= -set_.infeas_tol * theta;
    }

    // --- KKT assembly and Newton solves ------------------------------------

    void build_kkt()
    {
        blocks_.resize(qs_.size());
        for (size_t k = 0; k < qs_.size(); ++k)
        {
            auto& b = blocks_[k];
            b.H = qs_[k].P;
            b.H.diagonal().array() += set_.reg;
            if (qs_[k].num_ineq() > 0)
            {
                const Eigen::VectorXd w = lam_[k].cwiseQuotient(s_[k]);
                b.H += qs_[k].G.transpose() * w.asDiagonal() * qs_[k].G;
            }
            const int me = qs_[k].num_eq();
            const int mc = k < qc_.size() ? qc_[k].rows() : 0;
            b.F.resize(me + mc, qs_[k].nz());
            if (me > 0)
                b.F.topRows(me) = qs_[k].E;
            if (mc > 0)
                b.F.bottomRows(mc) = qc_[k].C;
            if (k + 1 < qs_.size())
            {
                b.J = Eigen::MatrixXd::Zero(me + mc, qs_[k + 1].nz());
                if (mc > 0)
                    b.J.bottomRows(mc) = qc_[k].D;
            }
            else
            {
                b.J.resize(0, 0);
            }
        }
    }

    /// Right-hand side from current residuals and a centrality vector rc;
    /// returns (dz, dd) where dd stacks [eq; coupling] dual steps per stage.
    std::pair<std::vector<Eigen::VectorXd>, std::vector<Eigen::VectorXd>> solve_newton(
        const std::vector<Eigen::VectorXd>& rc)
    {
        const size_t n1 = qs_.size();
        std::vector<Eigen::VectorXd> rz(n1), rd(n1);
        for (size_t k = 0; k < n1; ++k)
        {
            rz[k] = -rd_[k];
            if (qs_[k].num_ineq() > 0)
            {
                const Eigen::VectorXd winv_rc = rc[k].cwiseQuotient(s_[k]);
                const Eigen::VectorXd w = lam_[k].cwiseQuotient(s_[k]);
                rz[k] -= qs_[k].G.transpose() * (winv_rc + w.cwiseProduct(ri_[k]));
            }
            const int me = qs_[k].num_eq();
            const int mc = k < qc_.size() ? qc_[k].rows() : 0;
            rd[k].resize(me + mc);
            if (me > 0)
                rd[k].head(me) = -re_[k];
            if (mc > 0)
                rd[k].tail(mc) = -rc_res_[k];
        }
        // keep copies for iterative refinement
        const std::vector<Eigen::VectorXd> rz0 = rz, rd0 = rd;
        kkt_.solve(rz, rd);
        refine(rz0, rd0, rz, rd);
        return {rz, rd};
    }

    /// One round of iterative refinement against the unregularized KKT blocks.
    void refine(const std::vector<Eigen::VectorXd>& rz0, const std::vector<Eigen::VectorXd>& rd0,
                std::vector<Eigen::VectorXd>& dz, std::vector<Eigen::VectorXd>& dd)
    {
        for (int round = 0; round < 2; ++round)
        {
            const size_t n1 = qs_.size();
            std::vector<Eigen::VectorXd> rz(n1), rd(n1);
            for (size_t k = 0; k < n1; ++k)
            {
                rz[k] = rz0[k] - (blocks_[k].H * dz[k]);
                rz[k] += set_.reg * dz[k]; // remove primal regularization effect
                if (blocks_[k].F.rows() > 0)
                    rz[k] -= blocks_[k].F.transpose() * dd[k];
                if (k > 0 && blocks_[k - 1].J.rows() > 0)
                    rz[k] -= blocks_[k - 1].J.transpose() * dd[k - 1];
                rd[k] = rd0[k];
                if (blocks_[k].F.rows() > 0)
                    rd[k] -= blocks_[k].F * dz[k];
                if (k + 1 < n1 && blocks_[k].J.rows() > 0)
                    rd[k] -= blocks_[k].J * dz[k + 1];
            }
            double rn = 0.0;
            for (size_t k = 0; k < n1; ++k)
            {
                if (rz[k].size() > 0)
                    rn = std::max(rn, rz[k].cwiseAbs().maxCoeff());
                if (rd[k].size() > 0)
                    rn = std::max(rn, rd[k].cwiseAbs().maxCoeff());
            }
            if (rn < 1e-13)
                break;
            kkt_.solve(rz, rd);
            for (size_t k = 0; k < n1; ++k)
            {
                dz[k] += rz[k];
                dd[k] += rd[k];
            }
        }
    }

    std::pair<std::vector<Eigen::VectorXd>, std::vector<Eigen::VectorXd>> recover_ineq(
        const std::vector<Eigen::VectorXd>& dz, const std::vector<Eigen::VectorXd>& rc)
    {
        const size_t n1 = qs_.size();
        std::vector<Eigen::VectorXd> ds(n1), dl(n1);
        for (size_t k = 0; k < n1; ++k)
        {
            if (qs_[k].num_ineq() == 0)
            {
                ds[k].resize(0);
                dl[k].resize(0);
                continue;
            }
            ds[k] = -ri_[k] - qs_[k].G * dz[k];
            dl[k] = (rc[k] - lam_[k].cwiseProduct(ds[k])).cwiseQuotient(s_[k]);
        }
        return {ds, dl};
    }

    static double max_step(const std::vector<Eigen::VectorXd>& v, const std::vector<Eigen::VectorXd>& dv)
    {
        double t = kInf;
        for (size_t k = 0; k < v.size(); ++k)
            for (int i = 0; i < v[k].size(); ++i)
                if (dv[k](i) < 0.0)
                    t = std::min(t, -v[k](i) / dv[k](i));
        return t;
    }

    // --- output -------------------------------------------------------------

    void fill_solution(QPSolution& sol) const
    {
        const size_t n1 = qs_.size();
        sol.z.resize(n1);
        sol.nu.resize(n1);
        sol.lam.resize(n1);
        sol.s.resize(n1);
        sol.y.resize(qc_.size());
        for (size_t k = 0; k < n1; ++k)
        {
            sol.z[k] = dz_[k].cwiseProduct(z_[k]);
            sol.nu[k] = nu_[k].size() > 0 ? (dE_[k].cwiseProduct(nu_[k]) / sigma_c_).eval() : nu_[k];
            sol.lam[k] = lam_[k].size() > 0 ? (dG_[k].cwiseProduct(lam_[k]) / sigma_c_).eval() : lam_[k];
            sol.s[k] = s_[k].size() > 0 ? s_[k].cwiseQuotient(dG_[k]).eval() : s_[k];
        }
        for (size_t k = 0; k < qc_.size(); ++k)
            sol.y[k] = y_[k].size() > 0 ? (dC_[k].cwiseProduct(y_[k]) / sigma_c_).eval() : y_[k];
        sol.objective = qp_.objective_of(sol.z);
    }

    /// Elastic (slack-minimization) phase: decides feasibility when the main
    /// loop stalls. Builds the same QP with per-row violation variables and
    /// minimizes their sum.
    void elastic_decide(QPSolution& sol);

    /// Active-set cleanup: re-solves the equality-constrained KKT given the
    /// active inequalities, which drives residuals to machine precision.
    void polish(QPSolution& sol);

    const MultistageQP& qp_;
    QPSettings set_;
    int N_;

    std::vector<StageQP> qs_;        // scaled copies
    std::vector<CouplingBlock> qc_;
    std::vector<Eigen::VectorXd> dz_, dE_, dG_, dC_;
    double sigma_c_ = 1.0;

    std::vector<Eigen::VectorXd> z_, nu_, y_, lam_, s_;
    std::vector<Eigen::VectorXd> rd_, re_, ri_, rc_res_;
    double mu_ = 0.0;
    double res_primal_ = kInf, res_dual_ = kInf, res_comp_ = kInf;
    double kkt_residual_ = kInf;
    double objective_ = 0.0;

    std::vector<detail::BlockTridiagKKT::StageBlocks> blocks_;
    detail::BlockTridiagKKT kkt_;
};

inline QPSolution solve_qp(const MultistageQP& qp, const QPSettings& settings = QPSettings(),
                           const QPSolution* warm = nullptr)
{
    MultistageQpSolver solver(qp, settings);
    return solver.solve(warm);
}

/// Lower bound on the QP optimum from a dual point. Exact (up to solver
/// tolerance) at status optimal; a Lagrangian bound otherwise. Returns +inf
/// for infeasible problems and -inf when no valid bound is available.
inline double objective_bound(const MultistageQP& qp, const QPSolution& sol)
{
    if (sol.status == QPStatus::infeasible)
        return kInf;
    if (sol.z.empty())
        return -kInf;

    // dual value g(nu, y, lam) = -0.5 ztilde' P ztilde + e'nu + c'y - w'lam
    // with P ztilde = -(q + E'nu + C'y + D'y + G'lam); invalid if the
    // stationarity system is inconsistent (P singular in that direction).
    double g = qp.obj_offset;
    for (size_t k = 0; k < qp.stages.size(); ++k)
    {
        const auto& st = qp.stages[k];
        Eigen::VectorXd rhs = st.q;
        if (st.num_eq() > 0)
            rhs += st.E.transpose() * sol.nu[k];
        if (st.num_ineq() > 0)
            rhs += st.G.transpose() * sol.lam[k].cwiseMax(0.0);
        if (k < qp.couplings.size())
            rhs += qp.couplings[k].C.transpose() * sol.y[k];
        if (k > 0)
            rhs += qp.couplings[k - 1].D.transpose() * sol.y[k - 1];

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(st.P);
        if (eig.info() != Eigen::Success)
            return -kInf;
        const Eigen::VectorXd evals = eig.eigenvalues();
        const double emax = std::max(1.0, evals.cwiseAbs().maxCoeff());
        Eigen::VectorXd zt = Eigen::VectorXd::Zero(st.nz());
        const Eigen::VectorXd r = eig.eigenvectors().transpose() * (-rhs);
        for (int i = 0; i < evals.size(); ++i)
        {
            if (evals(i) > 1e-10 * emax)
                zt += (r(i) / evals(i)) * eig.eigenvectors().col(i);
            else if (std::abs(r(i)) > 1e-7 * (1.0 + rhs.cwiseAbs().maxCoeff()))
                return -kInf; // unbounded below in a flat direction
        }
        g += -0.5 * zt.dot(st.P * zt);
        if (st.num_eq() > 0)
            g += st.e.dot(sol.nu[k]);
        if (st.num_ineq() > 0)
            g -= st.w.dot(sol.lam[k].cwiseMax(0.0));
        if (k < qp.couplings.size())
            g += qp.couplings[k].c.dot(sol.y[k]);
    }
    return g;
}

// ---------------------------------------------------------------------------

inline void MultistageQpSolver::elastic_decide(QPSolution& sol)
{
    MultistageQP elastic;
    elastic.stages.resize(qp_.stages.size());
    elastic.couplings.resize(qp_.couplings.size());
    const double rho = 1e-3;
    for (size_t k = 0; k < qp_.stages.size(); ++k)
    {
        const auto& st = qp_.stages[k];
        const int me = st.num_eq();
        const int mc = k < qp_.couplings.size() ? qp_.couplings[k].rows() : 0;
        const int mi = st.num_ineq();
        const int nt = 2 * me + 2 * mc + mi; // t vars: eq+/-, coupling+/-, ineq
        const int nz = st.nz() + nt;
        auto& es = elastic.stages[k];
        es = StageQP::zero(nz);
        es.P.topLeftCorner(st.nz(), st.nz()).diagonal().array() = 1e-8;
        es.P.bottomRightCorner(nt, nt).diagonal().array() = rho;
        es.q.tail(nt).setOnes();

        // stage equalities with +/- slack
        es.E.resize(me, nz);
        es.E.setZero();
        if (me > 0)
        {
            es.E.leftCols(st.nz()) = st.E;
            es.E.block(0, st.nz(), me, me) = -Eigen::MatrixXd::Identity(me, me);
            es.E.block(0, st.nz() + me, me, me) = Eigen::MatrixXd::Identity(me, me);
        }
        es.e = st.e;

        // inequalities with slack, plus t >= 0
        es.G.resize(mi + nt, nz);
        es.G.setZero();
        es.w.resize(mi + nt);
        if (mi > 0)
        {
            es.G.topLeftCorner(mi, st.nz()) = st.G;
            es.G.block(0, st.nz() + 2 * me + 2 * mc, mi, mi) = -Eigen::MatrixXd::Identity(mi, mi);
            es.w.head(mi) = st.w;
        }
        es.G.bottomRightCorner(nt, nt) = -Eigen::MatrixXd::Identity(nt, nt);
        es.w.tail(nt).setZero();
    }
    for (size_t k = 0; k < qp_.couplings.size(); ++k)
    {
        const auto& cb = qp_.couplings[k];
        const int mc = cb.rows();
        const int me = qp_.stages[k].num_eq();
        auto& ec = elastic.couplings[k];
        ec.C = Eigen::MatrixXd::Zero(mc, elastic.stages[k].nz());
        ec.C.leftCols(cb.C.cols()) = cb.C;
        ec.C.block(0, cb.C.cols() + 2 * me, mc, mc) = -Eigen::MatrixXd::Identity(mc, mc);
        ec.C.block(0, cb.C.cols() + 2 * me + mc, mc, mc) = Eigen::MatrixXd::Identity(mc, mc);
        ec.D = Eigen::MatrixXd::Zero(mc, elastic.stages[k + 1].nz());
        ec.D.leftCols(cb.D.cols()) = cb.D;
        ec.c = cb.c;
    }

    QPSettings es_set = set_;
    es_set.allow_elastic_fallback = false;
    es_set.polish = false;
    es_set.tol = std::max(set_.tol, 1e-9);
    MultistageQpSolver esolver(elastic, es_set);
    QPSolution esol = esolver.solve();
    if (esol.status != QPStatus::optimal)
        return; // keep max_iter

    double total_violation = 0.0;
    double scale = 1.0;
    sol.stage_violation.assign(qp_.stages.size(), 0.0);
    for (size_t k = 0; k < qp_.stages.size(); ++k)
    {
        const int nt = elastic.stages[k].nz() - qp_.stages[k].nz();
        const Eigen::VectorXd t = esol.z[k].tail(nt).cwiseMax(0.0);
        if (nt > 0 && t.size() > 0)
        {
            sol.stage_violation[k] = t.maxCoeff();
            total_violation += t.sum();
        }
        scale = std::max(scale, qp_.stages[k].w.size() > 0 ? qp_.stages[k].w.cwiseAbs().maxCoeff() : 0.0);
        scale = std::max(scale, qp_.stages[k].e.size() > 0 ? qp_.stages[k].e.cwiseAbs().maxCoeff() : 0.0);
    }
    if (total_violation > set_.infeas_tol * scale)
        sol.status = QPStatus::infeasible;
}

inline void MultistageQpSolver::polish(QPSolution& sol)
{
    // active set from scaled slack/dual comparison
    std::vector<std::vector<int>> active(qs_.size());
    for (size_t k = 0; k < qs_.size(); ++k)
        for (int i = 0; i < qs_[k].num_ineq(); ++i)
            if (lam_[k](i) > s_[k](i))
                active[k].push_back(i);

    // equality KKT: stage equalities plus active inequalities as equalities
    std::vector<detail::BlockTridiagKKT::StageBlocks> blocks(qs_.size());
    std::vector<Eigen::VectorXd> rz(qs_.size()), rd(qs_.size());
    for (size_t k = 0; k < qs_.size(); ++k)
    {
        const auto& st = qs_[k];
        const int me = st.num_eq();
        const int ma = static_cast<int>(active[k].size());
        const int mc = k < qc_.size() ? qc_[k].rows() : 0;
        auto& b = blocks[k];
        b.H = st.P;
        b.H.diagonal().array() += 1e-11;
        b.F.resize(me + ma + mc, st.nz());
        rd[k].resize(me + ma + mc);
        if (me > 0)
        {
            b.F.topRows(me) = st.E;
            rd[k].head(me) = -st.e;
        }
        for (int i = 0; i < ma; ++i)
        {
            b.F.row(me + i) = st.G.row(active[k][static_cast<size_t>(i)]);
            rd[k](me + i) = st.w(active[k][static_cast<size_t>(i)]);
        }
        if (mc > 0)
        {
            b.F.bottomRows(mc) = qc_[k].C;
            rd[k].tail(mc) = -qc_[k].c;
        }
        if (k + 1 < qs_.size())
        {
            b.J = Eigen::MatrixXd::Zero(me + ma + mc, qs_[k + 1].nz());
            if (mc > 0)
                b.J.bottomRows(mc) = qc_[k].D;
        }
        rz[k] = -st.q;
    }

    detail::BlockTridiagKKT kkt;
    try
    {
        kkt.factor(blocks, 1e-11);
    }
    catch (const std::exception&)
    {
        return; // keep the interior-point solution
    }
    // two refinement rounds against the same blocks
    std::vector<Eigen::VectorXd> zp = rz, dp = rd;
    kkt.solve(zp, dp);
    for (int round = 0; round < 2; ++round)
    {
        std::vector<Eigen::VectorXd> r1(qs_.size()), r2(qs_.size());
        for (size_t k = 0; k < qs_.size(); ++k)
        {
            r1[k] = rz[k] - blocks[k].H * zp[k] + 1e-11 * zp[k];
            if (blocks[k].F.rows() > 0)
                r1[k] -= blocks[k].F.transpose() * dp[k];
            if (k > 0 && blocks[k - 1].J.rows() > 0)
                r1[k] -= blocks[k - 1].J.transpose() * dp[k - 1];
            r2[k] = rd[k];
            if (blocks[k].F.rows() > 0)
                r2[k] -= blocks[k].F * zp[k];
            if (k + 1 < qs_.size() && blocks[k].J.rows() > 0)
                r2[k] -= blocks[k].J * zp[k + 1];
        }
        kkt.solve(r1, r2);
        for (size_t k = 0; k < qs_.size(); ++k)
        {
            zp[k] += r1[k];
            dp[k] += r2[k];
        }
    }

    // verify in true space before adopting
    std::vector<Eigen::VectorXd> z_true(qs_.size());
    for (size_t k = 0; k < qs_.size(); ++k)
        z_true[k] = dz_[k].cwiseProduct(zp[k]);
    double viol = 0.0;
    for (size_t k = 0; k < qs_.size(); ++k)
    {
        const auto& st = qp_.stages[k];
        if (st.num_eq() > 0)
            viol = std::max(viol, (st.E * z_true[k] + st.e).cwiseAbs().maxCoeff() /
                                      (1.0 + st.e.cwiseAbs().maxCoeff()));
        if (st.num_ineq() > 0)
            viol = std::max(viol, ((st.G * z_true[k] - st.w).maxCoeff()) /
                                      (1.0 + st.w.cwiseAbs().maxCoeff()));
        if (k < qp_.couplings.size())
        {
            const auto& cb = qp_.couplings[k];
            if (cb.rows() > 0)
                viol = std::max(viol, (cb.C * z_true[k] + cb.D * dz_[k + 1].cwiseProduct(zp[k + 1]) + cb.c)
                                          .cwiseAbs()
                                          .maxCoeff() /
                                          (1.0 + cb.c.cwiseAbs().maxCoeff()));
        }
    }
    const double new_obj = qp_.objective_of(z_true);
    if (viol > 10.0 * set_.tol || new_obj > sol.objective + std::sqrt(set_.tol) * (1.0 + std::abs(sol.objective)))
        return;

    for (size_t k = 0; k < qs_.size(); ++k)
    {
        sol.z[k] = z_true[k];
        const int me = qs_[k].num_eq();
        if (me > 0)
            sol.nu[k] = dE_[k].cwiseProduct(dp[k].head(me)) / sigma_c_;
        // refresh inequality duals/slacks from the polished point
        const auto& st = qp_.stages[k];
        if (st.num_ineq() > 0)
        {
            sol.s[k] = st.w - st.G * z_true[k];
            Eigen::VectorXd lam_true = Eigen::VectorXd::Zero(st.num_ineq());
            for (size_t i = 0; i < active[k].size(); ++i)
            {
                const int row = active[k][i];
                const double lhat = dp[k](me + static_cast<int>(i));
                lam_true(row) = dG_[k](row) * lhat / sigma_c_;
            }
            sol.lam[k] = lam_true;
        }
        const int mc = k < qc_.size() ? qc_[k].rows() : 0;
        if (mc > 0)
            sol.y[k] = dC_[k].cwiseProduct(dp[k].tail(mc)) / sigma_c_;
    }
    sol.objective = new_obj;
    sol.polished = true;
}

} // namespace zonoplan

#endif
