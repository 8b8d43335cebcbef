#ifndef ZONOPLAN_LP_HPP_
#define ZONOPLAN_LP_HPP_

#include "core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace zonoplan
{

enum class LpStatus
{
    optimal,
    infeasible,
    unbounded,
    iter_limit
};

struct LpResult
{
    LpStatus status = LpStatus::iter_limit;
    Eigen::VectorXd x;
    double objective = 0.0;
};

struct LpOptions
{
    double tol = kLpTol;
    int max_iter = 0; // 0 -> automatic limit based on problem size
};

namespace detail
{

/// Bounded-variable primal simplex with artificial-variable phase 1.
/// Solves min c'x s.t. A x = b, lb <= x <= ub. Bounds may be infinite.
class BoundedSimplex
{
  public:
    BoundedSimplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                   const Eigen::VectorXd& lb, const Eigen::VectorXd& ub, const LpOptions& opts)
        : m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())), opts_(opts), b_store_(b)
    {
        require(b.size() == m_, "solve_lp: b dimension mismatch");
        require(c.size() == n_, "solve_lp: c dimension mismatch");
        require(lb.size() == n_ && ub.size() == n_, "solve_lp: bound dimension mismatch");

        ncols_ = n_ + m_; // real variables + one artificial per row
        A_.resize(m_, ncols_);
        A_.leftCols(n_) = A;
        A_.rightCols(m_).setZero();
        lb_.resize(ncols_);
        ub_.resize(ncols_);
        lb_.head(n_) = lb;
        ub_.head(n_) = ub;
        cost_.setZero(ncols_);
        cost_.head(n_) = c;

        x_.setZero(ncols_);
        status_.assign(ncols_, VarStatus::nonbasic);
        for (int j = 0; j < n_; ++j)
            x_(j) = initial_value(lb(j), ub(j));

        // artificials absorb the initial equality residual
        Eigen::VectorXd r = b - A * x_.head(n_);
        basic_.resize(m_);
        for (int i = 0; i < m_; ++i)
        {
            const double s = (r(i) >= 0.0) ? 1.0 : -1.0;
            const int j = n_ + i;
            A_(i, j) = s;
            lb_(j) = 0.0;
            ub_(j) = kInf;
            x_(j) = std::abs(r(i));
            basic_[i] = j;
            status_[j] = VarStatus::basic;
        }
    }

    LpResult solve()
    {
        LpResult res;
        const int max_iter = (opts_.max_iter > 0) ? opts_.max_iter : 200 + 50 * (m_ + ncols_);

        // phase 1: minimize sum of artificials
        Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(ncols_);
        phase1_cost.tail(m_).setOnes();
        SolveOutcome out = run(phase1_cost, max_iter, /*phase1=*/true);
        if (out == SolveOutcome::iter_limit)
        {
            res.status = LpStatus::iter_limit;
            return res;
        }
        const double infeas = x_.tail(m_).sum();
        if (infeas > opts_.tol * (1.0 + x_.head(n_).cwiseAbs().maxCoeff()))
        {
            res.status = LpStatus::infeasible;
            return res;
        }
        lock_artificials();

        // phase 2: original cost
        out = run(cost_, max_iter, /*phase1=*/false);
        res.x = x_.head(n_);
        res.objective = cost_.head(n_).dot(res.x);
        switch (out)
        {
        case SolveOutcome::optimal: res.status = LpStatus::optimal; break;
        case SolveOutcome::unbounded: res.status = LpStatus::unbounded; break;
        default: res.status = LpStatus::iter_limit; break;
        }
        return res;
    }

  private:
    enum class VarStatus
    {
        basic,
        nonbasic
    };
    enum class SolveOutcome
    {
        optimal,
        unbounded,
        iter_limit
    };

    static double initial_value(double lo, double hi)
    {
        if (lo <= 0.0 && 0.0 <= hi)
            return 0.0;
        if (std::isfinite(lo) && lo > 0.0)
            return lo;
        if (std::isfinite(hi) && hi < 0.0)
            return hi;
        return 0.0;
    }

    // fix artificials still basic at zero where possible; redundant rows keep a
    // pinned artificial in the basis
    void lock_artificials()
    {
        for (int j = n_; j < ncols_; ++j)
        {
            lb_(j) = 0.0;
            ub_(j) = 0.0;
        }
    }

    void refactorize()
    {
        Eigen::MatrixXd B(m_, m_);
        for (int i = 0; i < m_; ++i)
            B.col(i) = A_.col(basic_[i]);
        lu_.compute(B);
    }

    void recompute_basics(const Eigen::VectorXd& b_eff)
    {
        if (m_ == 0)
            return;
        Eigen::VectorXd rhs = b_eff;
        for (int j = 0; j < ncols_; ++j)
            if (status_[j] == VarStatus::nonbasic && x_(j) != 0.0)
                rhs -= A_.col(j) * x_(j);
        Eigen::VectorXd xb = lu_.solve(rhs);
        for (int i = 0; i < m_; ++i)
            x_(basic_[i]) = xb(i);
    }

    SolveOutcome run(const Eigen::VectorXd& cost, int max_iter, bool phase1)
    {
        const double ctol = 1e-9 * (1.0 + cost.cwiseAbs().maxCoeff());
        Eigen::VectorXd b_eff = b_effective();
        double last_obj = kInf;
        int stall = 0;
        bool bland = false;

        for (int iter = 0; iter < max_iter; ++iter)
        {
            if (m_ > 0)
            {
                refactorize();
                recompute_basics(b_eff);
            }
            const double obj = cost.dot(x_);
            if (obj < last_obj - 1e-12 * (1.0 + std::abs(last_obj)))
            {
                last_obj = obj;
                stall = 0;
            }
            else if (++stall > 2 * (m_ + ncols_))
            {
                bland = true;
            }

            // pricing
            Eigen::VectorXd y;
            if (m_ > 0)
            {
                Eigen::VectorXd cb(m_);
                for (int i = 0; i < m_; ++i)
                    cb(i) = cost(basic_[i]);
                y = lu_.transpose().solve(cb);
            }
            int enter = -1;
            double best = ctol;
            double enter_dir = 0.0;
            for (int j = 0; j < ncols_; ++j)
            {
                if (status_[j] == VarStatus::basic)
                    continue;
                if (lb_(j) == ub_(j) && std::isfinite(lb_(j)))
                    continue; // pinned
                const double d = cost(j) - ((m_ > 0) ? A_.col(j).dot(y) : 0.0);
                double dir = 0.0;
                // movement must be feasible from the current resting value
                const bool can_up = x_(j) < ub_(j) - 1e-12;
                const bool can_down = x_(j) > lb_(j) + 1e-12;
                if (d < -ctol && can_up)
                    dir = 1.0;
                else if (d > ctol && can_down)
                    dir = -1.0;
                else
                    continue;
                const double viol = std::abs(d);
                if (bland)
                {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if (viol > best)
                {
                    best = viol;
                    enter = j;
                    enter_dir = dir;
                }
            }
            if (enter < 0)
                return SolveOutcome::optimal;

            // ratio test
            Eigen::VectorXd w;
            if (m_ > 0)
                w = lu_.solve(A_.col(enter));
            double t_max = kInf;
            int leave = -1; // -1 -> entering variable hits its own opposite bound
            double leave_to = 0.0;
            {
                const double own = (enter_dir > 0.0) ? (ub_(enter) - x_(enter)) : (x_(enter) - lb_(enter));
                if (own < t_max)
                    t_max = own;
            }
            for (int i = 0; i < m_; ++i)
            {
                const double rate = -w(i) * enter_dir; // d x_basic[i] / dt
                if (std::abs(rate) < 1e-11)
                    continue;
                const int jb = basic_[i];
                double lim;
                double to;
                if (rate > 0.0)
                {
                    if (!std::isfinite(ub_(jb)))
                        continue;
                    lim = (ub_(jb) - x_(jb)) / rate;
                    to = ub_(jb);
                }
                else
                {
                    if (!std::isfinite(lb_(jb)))
                        continue;
                    lim = (lb_(jb) - x_(jb)) / rate;
                    to = lb_(jb);
                }
                lim = std::max(lim, 0.0);
                if (lim < t_max - 1e-12 || (lim < t_max + 1e-12 && leave >= 0 && jb < basic_[leave]))
                {
                    t_max = lim;
                    leave = i;
                    leave_to = to;
                }
            }
            if (!std::isfinite(t_max))
                return phase1 ? SolveOutcome::iter_limit : SolveOutcome::unbounded;

            // apply step
            x_(enter) += enter_dir * t_max;
            if (m_ > 0)
                for (int i = 0; i < m_; ++i)
                    x_(basic_[i]) -= w(i) * enter_dir * t_max;
            if (leave >= 0)
            {
                const int jl = basic_[leave];
                x_(jl) = leave_to; // snap exactly to its bound
                status_[jl] = VarStatus::nonbasic;
                basic_[leave] = enter;
                status_[enter] = VarStatus::basic;
            }
            // else: bound flip, basis unchanged
        }
        return SolveOutcome::iter_limit;
    }

    Eigen::VectorXd b_effective() const { return b_store_; }

  private:
    int m_;
    int n_;
    int ncols_ = 0;
    LpOptions opts_;
    Eigen::MatrixXd A_;
    Eigen::VectorXd b_store_;
    Eigen::VectorXd cost_;
    Eigen::VectorXd lb_, ub_;
    Eigen::VectorXd x_;
    std::vector<int> basic_;
    std::vector<VarStatus> status_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

} // namespace detail

/// Solves min c'x subject to A x = b and lb <= x <= ub (bounds may be infinite).
inline LpResult solve_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                         const Eigen::VectorXd& lb, const Eigen::VectorXd& ub, const LpOptions& opts = LpOptions())
{
    detail::BoundedSimplex simplex(A, b, c, lb, ub, opts);
    return simplex.solve();
}

} // namespace zonoplan

#endif
