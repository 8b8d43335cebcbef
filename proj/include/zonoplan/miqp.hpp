#ifndef ZONOPLAN_MIQP_HPP_
#define ZONOPLAN_MIQP_HPP_

#include "core.hpp"
#include "multistage_qp.hpp"
#include "qp_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <thread>
#include <vector>

namespace zonoplan
{

/// Multistage QP whose stage layouts mark binary factors. Binaries take
/// values in {-1, +1}; each one-hot group selects exactly one +1 entry.
/// Relaxations treat binaries as box variables in [-1, 1] (the box rows are
/// part of the stage inequalities already).
struct MultistageMIQP
{
    MultistageQP qp; // layouts must be populated

    int num_binaries() const
    {
        int n = 0;
        for (const auto& l : qp.layouts)
            n += static_cast<int>(l.all_binaries().size());
        return n;
    }

    void validate() const
    {
        qp.validate();
        detail::require(qp.layouts.size() == qp.stages.size(), "MultistageMIQP: layouts required");
    }
};

enum class BranchRule
{
    region_group,
    most_fractional
};

struct MIQPConfig
{
    double eps_abs = 0.1;
    double eps_rel = 0.01;
    int max_nodes = 100000;
    int threads = 1;
    BranchRule branching = BranchRule::region_group;
    QPSettings qp;
    bool record_tree = false;
    int rounding_period = 3; // attempt a rounding incumbent every k-th node
};

enum class MIQPStatus
{
    optimal,
    infeasible,
    node_limit
};

struct MIQPNodeTrace
{
    int id = 0;
    int parent = -1;
    double parent_bound = -kInf;
    double bound = -kInf;
    bool pruned = false;
    bool integral = false;
};

struct MIQPIncumbentTrace
{
    double objective = 0.0;
    std::vector<Eigen::VectorXd> z;
};

struct MIQPResult
{
    MIQPStatus status = MIQPStatus::infeasible;
    std::vector<Eigen::VectorXd> z_star; // full variable space, binaries exactly +/-1
    double objective = kInf;
    double gap = kInf;
    int nodes_explored = 0;
    double wall_time = 0.0;
    double root_relaxation_objective = kInf;
    int qp_iterations = 0;
    std::vector<MIQPNodeTrace> tree;           // populated when record_tree
    std::vector<MIQPIncumbentTrace> incumbents; // populated when record_tree
};

namespace detail
{

/// Partial assignment of binary variables: per stage, per binary index, the
/// fixed value (+1/-1) or unset.
struct BinaryAssignment
{
    // one entry per stage: map stage-variable-index -> fixed value
    std::vector<std::map<int, double>> fixed;

    explicit BinaryAssignment(size_t n_stages) : fixed(n_stages) {}

    bool is_fixed(int k, int idx) const
    {
        const auto& m = fixed[static_cast<size_t>(k)];
        return m.count(idx) > 0;
    }
};

/// Fixes group `gi` at stage k to member `pick`: the chosen binary goes to +1,
/// the others to -1, and the non-chosen members' controlled factors (pinned to
/// -1 by the one-hot equality rows) are eliminated with them.
inline void fix_group_choice(BinaryAssignment& asg, const StageLayout& layout, int k, size_t gi, int pick)
{
    const auto& g = layout.binary_groups[gi];
    for (size_t i = 0; i < g.size(); ++i)
    {
        const bool chosen = g[i] == pick;
        asg.fixed[static_cast<size_t>(k)][g[i]] = chosen ? 1.0 : -1.0;
        if (!chosen && gi < layout.group_factors.size() && i < layout.group_factors[gi].size())
            for (int f : layout.group_factors[gi][i])
                asg.fixed[static_cast<size_t>(k)][f] = -1.0;
    }
}

/// Substitutes fixed binaries into the QP, eliminating their columns. Returns
/// the reduced QP plus, per stage, the map from reduced to original indices.
struct ReducedQP
{
    MultistageQP qp;
    std::vector<std::vector<int>> keep; // per stage: original index of each kept column
};

inline ReducedQP reduce(const MultistageMIQP& miqp, const BinaryAssignment& asg)
{
    const auto& base = miqp.qp;
    ReducedQP red;
    red.qp.obj_offset = base.obj_offset;
    red.qp.stages.resize(base.stages.size());
    red.qp.couplings.resize(base.couplings.size());
    red.keep.resize(base.stages.size());

    std::vector<Eigen::VectorXd> fix_vec(base.stages.size());
    for (size_t k = 0; k < base.stages.size(); ++k)
    {
        const int nz = base.stages[k].nz();
        fix_vec[k] = Eigen::VectorXd::Zero(nz);
        auto& keep = red.keep[k];
        keep.reserve(static_cast<size_t>(nz));
        for (int j = 0; j < nz; ++j)
        {
            const auto it = asg.fixed[k].find(j);
            if (it == asg.fixed[k].end())
                keep.push_back(j);
            else
                fix_vec[k](j) = it->second;
        }
    }

    for (size_t k = 0; k < base.stages.size(); ++k)
    {
        const auto& st = base.stages[k];
        const auto& keep = red.keep[k];
        const int nk = static_cast<int>(keep.size());
        auto& out = red.qp.stages[k];
        out = StageQP::zero(nk);
        for (int a = 0; a < nk; ++a)
            for (int b = 0; b < nk; ++b)
                out.P(a, b) = st.P(keep[static_cast<size_t>(a)], keep[static_cast<size_t>(b)]);
        const Eigen::VectorXd Pf = st.P * fix_vec[k];
        for (int a = 0; a < nk; ++a)
            out.q(a) = st.q(keep[static_cast<size_t>(a)]) + Pf(keep[static_cast<size_t>(a)]);
        red.qp.obj_offset += 0.5 * fix_vec[k].dot(st.P * fix_vec[k]) + st.q.dot(fix_vec[k]);

        // drop box rows that involve only fixed binaries; substitute elsewhere
        if (st.num_eq() > 0)
        {
            out.E.resize(st.num_eq(), nk);
            for (int a = 0; a < nk; ++a)
                out.E.col(a) = st.E.col(keep[static_cast<size_t>(a)]);
            out.e = st.e + st.E * fix_vec[k];
        }
        if (st.num_ineq() > 0)
        {
            std::vector<int> rows;
            for (int r = 0; r < st.num_ineq(); ++r)
            {
                bool involves_kept = false;
                for (int a = 0; a < nk && !involves_kept; ++a)
                    if (st.G(r, keep[static_cast<size_t>(a)]) != 0.0)
                        involves_kept = true;
                if (involves_kept)
                    rows.push_back(r);
            }
            out.G.resize(static_cast<int>(rows.size()), nk);
            out.w.resize(static_cast<int>(rows.size()));
            const Eigen::VectorXd Gf = st.G * fix_vec[k];
            for (size_t ri = 0; ri < rows.size(); ++ri)
            {
                for (int a = 0; a < nk; ++a)
                    out.G(static_cast<int>(ri), a) = st.G(rows[ri], keep[static_cast<size_t>(a)]);
                out.w(static_cast<int>(ri)) = st.w(rows[ri]) - Gf(rows[ri]);
            }
        }
    }
    for (size_t k = 0; k < base.couplings.size(); ++k)
    {
        const auto& cb = base.couplings[k];
        auto& out = red.qp.couplings[k];
        out.c = cb.c + cb.C * fix_vec[k] + cb.D * fix_vec[k + 1];
        out.C.resize(cb.rows(), static_cast<int>(red.keep[k].size()));
        for (size_t a = 0; a < red.keep[k].size(); ++a)
            out.C.col(static_cast<long>(a)) = cb.C.col(red.keep[k][a]);
        out.D.resize(cb.rows(), static_cast<int>(red.keep[k + 1].size()));
        for (size_t a = 0; a < red.keep[k + 1].size(); ++a)
            out.D.col(static_cast<long>(a)) = cb.D.col(red.keep[k + 1][a]);
    }
    return red;
}

/// Expands a reduced solution back to the full variable space.
inline std::vector<Eigen::VectorXd> expand(const MultistageMIQP& miqp, const BinaryAssignment& asg,
                                           const ReducedQP& red, const std::vector<Eigen::VectorXd>& z)
{
    std::vector<Eigen::VectorXd> full(z.size());
    for (size_t k = 0; k < z.size(); ++k)
    {
        full[k] = Eigen::VectorXd::Zero(miqp.qp.stages[k].nz());
        for (const auto& [idx, val] : asg.fixed[k])
            full[k](idx) = val;
        for (size_t a = 0; a < red.keep[k].size(); ++a)
            full[k](red.keep[k][a]) = z[k](static_cast<long>(a));
    }
    return full;
}

/// Translates a full-space warm start to a reduced QP's variable space.
inline QPSolution restrict_warm(const ReducedQP& red, const std::vector<Eigen::VectorXd>& z_full)
{
    QPSolution w;
    w.z.resize(z_full.size());
    for (size_t k = 0; k < z_full.size(); ++k)
    {
        w.z[k].resize(static_cast<long>(red.keep[k].size()));
        for (size_t a = 0; a < red.keep[k].size(); ++a)
            w.z[k](static_cast<long>(a)) = z_full[k](red.keep[k][a]);
    }
    return w;
}

} // namespace detail

/// Enumerates all group-consistent binary assignments, solving the fixed QP
/// for each; the verification oracle for solve_miqp. A sound reachability
/// prune may be installed via `admissible` (return false to skip an
/// assignment that provably cannot be feasible).
struct BruteForceOptions
{
    QPSettings qp;
    int threads = 1;
    double combo_limit = 1e6;
    /// assignment -> admissible? (per stage, chosen group member indices)
    std::function<bool(const std::vector<std::vector<int>>&)> admissible;
};

inline MIQPResult brute_force(const MultistageMIQP& miqp, const BruteForceOptions& opts = BruteForceOptions())
{
    miqp.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto& layouts = miqp.qp.layouts;
    const size_t n_stages = miqp.qp.stages.size();

    // enumeration space: per stage, per group, the choice; free binaries
    // enumerated as single-member pseudo-groups with 2 choices
    struct Slot
    {
        int stage;
        size_t group; // index into the stage's binary_groups (one-hot only)
        std::vector<int> members; // variable indices
        bool one_hot;             // one-hot group vs single free binary
    };
    std::vector<Slot> slots;
    for (size_t k = 0; k < n_stages; ++k)
    {
        for (size_t gi = 0; gi < layouts[k].binary_groups.size(); ++gi)
            slots.push_back({static_cast<int>(k), gi, layouts[k].binary_groups[gi], true});
        for (int idx : layouts[k].free_binaries)
            slots.push_back({static_cast<int>(k), 0, {idx}, false});
    }
    double combos = 1.0;
    for (const auto& s : slots)
        combos *= s.one_hot ? static_cast<double>(s.members.size()) : 2.0;
    detail::require(combos <= opts.combo_limit, "brute_force: combinatorial limit exceeded");

    const long total = static_cast<long>(combos);
    std::mutex mtx;
    MIQPResult best;
    best.status = MIQPStatus::infeasible;
    std::atomic<long> counter{0};
    long best_index = -1;

    auto worker = [&]() {
        for (;;)
        {
            const long combo = counter.fetch_add(1);
            if (combo >= total)
                return;
            // decode combo -> assignment
            detail::BinaryAssignment asg(n_stages);
            std::vector<std::vector<int>> choice(n_stages);
            long rem = combo;
            bool ok = true;
            for (const auto& s : slots)
            {
                const long card = s.one_hot ? static_cast<long>(s.members.size()) : 2;
                const long pick = rem % card;
                rem /= card;
                if (s.one_hot)
                {
                    detail::fix_group_choice(asg, layouts[static_cast<size_t>(s.stage)], s.stage, s.group,
                                             s.members[static_cast<size_t>(pick)]);
                    choice[static_cast<size_t>(s.stage)].push_back(s.members[static_cast<size_t>(pick)]);
                }
                else
                {
                    asg.fixed[static_cast<size_t>(s.stage)][s.members[0]] = pick == 0 ? -1.0 : 1.0;
                }
            }
            if (opts.admissible && !opts.admissible(choice))
                ok = false;
            if (!ok)
                continue;
            const auto red = detail::reduce(miqp, asg);
            QPSettings qs = opts.qp;
            qs.polish = true;
            const QPSolution sol = solve_qp(red.qp, qs);
            std::lock_guard<std::mutex> lock(mtx);
            best.nodes_explored += 1;
            best.qp_iterations += sol.iters;
            if (sol.status == QPStatus::optimal)
            {
                // deterministic tie-break on enumeration index
                if (sol.objective < best.objective - 1e-12 ||
                    (std::abs(sol.objective - best.objective) <= 1e-12 && combo < best_index))
                {
                    best.objective = sol.objective;
                    best.z_star = detail::expand(miqp, asg, red, sol.z);
                    best.status = MIQPStatus::optimal;
                    best_index = combo;
                }
            }
        }
    };

    const int nthreads = std::max(1, opts.threads);
    if (nthreads == 1)
        worker();
    else
    {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    best.gap = best.status == MIQPStatus::optimal ? 0.0 : kInf;
    best.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return best;
}

namespace detail
{

struct BnbNode
{
    int id = 0;
    int parent = -1;
    double bound = -kInf;
    BinaryAssignment asg;
    std::vector<Eigen::VectorXd> warm_z; // full space
    int depth = 0;
};

struct NodeOrder
{
    bool operator()(const std::shared_ptr<BnbNode>& a, const std::shared_ptr<BnbNode>& b) const
    {
        if (a->bound != b->bound)
            return a->bound > b->bound; // min-heap on bound
        return a->id > b->id;
    }
};

} // namespace detail

/// Best-first branch-and-bound over the hybrid-zonotope binary factors.
/// The root relaxes all binaries to [-1,1]; branching fixes a one-hot region
/// group's choice (or a single binary as fallback); incumbents come from
/// integral relaxations and group-consistent roundings re-solved as QPs.
inline MIQPResult solve_miqp(const MultistageMIQP& miqp, const MIQPConfig& cfg = MIQPConfig())
{
    miqp.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto& layouts = miqp.qp.layouts;
    const size_t n_stages = miqp.qp.stages.size();

    MIQPResult res;
    std::mutex mtx;
    std::condition_variable cv;
    std::priority_queue<std::shared_ptr<detail::BnbNode>, std::vector<std::shared_ptr<detail::BnbNode>>,
                        detail::NodeOrder>
        open;
    std::multiset<double> inflight_bounds;
    double incumbent_obj = kInf;
    std::vector<Eigen::VectorXd> incumbent_z;
    int next_id = 1;
    int processed = 0;
    bool node_limit_hit = false;
    int active_workers = 0;
    int undecided = 0;

    auto gap_tol = [&](double inc) { return std::max(cfg.eps_abs, cfg.eps_rel * std::abs(inc)); };

    // root node: fix size-1 groups up front (their choice is forced)
    auto root = std::make_shared<detail::BnbNode>(detail::BnbNode{0, -1, -kInf,
                                                                  detail::BinaryAssignment(n_stages),
                                                                  {},
                                                                  0});
    for (size_t k = 0; k < n_stages; ++k)
        for (size_t gi = 0; gi < layouts[k].binary_groups.size(); ++gi)
            if (layouts[k].binary_groups[gi].size() == 1)
                detail::fix_group_choice(root->asg, layouts[k], static_cast<int>(k), gi,
                                         layouts[k].binary_groups[gi][0]);
    open.push(root);

    auto integrality = [&](const std::vector<Eigen::VectorXd>& z_full, const detail::BinaryAssignment& asg,
                           double tol) {
        // returns (is_integral, branch stage, branch group index or -1, branch binary)
        struct Out
        {
            bool integral = true;
            int stage = -1;
            int group = -1; // -1 -> single binary
            int binary = -1;
            double score = -1.0;
        } out;
        for (size_t k = 0; k < n_stages; ++k)
        {
            for (size_t gi = 0; gi < layouts[k].binary_groups.size(); ++gi)
            {
                const auto& g = layouts[k].binary_groups[gi];
                bool all_fixed = true;
                for (int idx : g)
                    if (!asg.is_fixed(static_cast<int>(k), idx))
                        all_fixed = false;
                if (all_fixed)
                    continue;
                double max_lam = -kInf;
                for (int idx : g)
                    max_lam = std::max(max_lam, (z_full[k](idx) + 1.0) / 2.0);
                const double dist = 1.0 - max_lam; // 0 when the choice is resolved
                if (dist > tol)
                {
                    out.integral = false;
                    if (dist > out.score)
                    {
                        out.score = dist;
                        out.stage = static_cast<int>(k);
                        out.group = static_cast<int>(gi);
                    }
                }
            }
            for (int idx : layouts[k].free_binaries)
            {
                if (asg.is_fixed(static_cast<int>(k), idx))
                    continue;
                const double lam = (z_full[k](idx) + 1.0) / 2.0;
                const double dist = std::min(lam, 1.0 - lam) * 2.0;
                if (dist > tol)
                {
                    out.integral = false;
                    if (dist > out.score)
                    {
                        out.score = dist;
                        out.stage = static_cast<int>(k);
                        out.group = -1;
                        out.binary = idx;
                    }
                }
            }
        }
        return out;
    };

    auto round_assignment = [&](const std::vector<Eigen::VectorXd>& z_full,
                                const detail::BinaryAssignment& base) {
        detail::BinaryAssignment asg = base;
        for (size_t k = 0; k < n_stages; ++k)
        {
            for (size_t gi = 0; gi < layouts[k].binary_groups.size(); ++gi)
            {
                const auto& g = layouts[k].binary_groups[gi];
                int best = -1;
                bool decided = false;
                for (int idx : g)
                {
                    if (asg.is_fixed(static_cast<int>(k), idx))
                    {
                        if (asg.fixed[k].at(idx) > 0.0)
                            decided = true;
                        continue; // excluded member
                    }
                    if (best < 0 || z_full[k](idx) > z_full[k](best))
                        best = idx;
                }
                if (decided || best < 0)
                    continue;
                detail::fix_group_choice(asg, layouts[k], static_cast<int>(k), gi, best);
            }
            for (int idx : layouts[k].free_binaries)
                if (!asg.is_fixed(static_cast<int>(k), idx))
                    asg.fixed[k][idx] = z_full[k](idx) >= 0.0 ? 1.0 : -1.0;
        }
        return asg;
    };

    auto feasible_point = [&](const std::vector<Eigen::VectorXd>& z, double tol) {
        for (size_t k = 0; k < n_stages; ++k)
        {
            const auto& s = miqp.qp.stages[k];
            if (s.num_eq() > 0 && (s.E * z[k] + s.e).cwiseAbs().maxCoeff() > tol * (1.0 + s.e.cwiseAbs().maxCoeff()))
                return false;
            if (s.num_ineq() > 0 && (s.G * z[k] - s.w).maxCoeff() > tol * (1.0 + s.w.cwiseAbs().maxCoeff()))
                return false;
        }
        for (size_t k = 0; k < miqp.qp.couplings.size(); ++k)
        {
            const auto& cb = miqp.qp.couplings[k];
            if (cb.rows() > 0 &&
                (cb.C * z[k] + cb.D * z[k + 1] + cb.c).cwiseAbs().maxCoeff() > tol * (1.0 + cb.c.cwiseAbs().maxCoeff()))
                return false;
        }
        return true;
    };

    // returns: 1 incumbent accepted/attempted fine, 0 worse than incumbent,
    // -1 undecided (relaxation could not be certified either way)
    auto try_incumbent = [&](const detail::BinaryAssignment& asg, const std::vector<Eigen::VectorXd>* warm) {
        const auto red = detail::reduce(miqp, asg);
        QPSettings qs = cfg.qp;
        qs.polish = true;
        QPSolution warm_sol;
        const QPSolution* wptr = nullptr;
        if (warm)
        {
            warm_sol = detail::restrict_warm(red, *warm);
            wptr = &warm_sol;
        }
        QPSolution sol = solve_qp(red.qp, qs, wptr);
        if (sol.status == QPStatus::max_iter && wptr)
            sol = solve_qp(red.qp, qs); // retry cold
        std::lock_guard<std::mutex> lock(mtx);
        res.qp_iterations += sol.iters;
        if (sol.status == QPStatus::max_iter)
        {
            // accept as incumbent only if verifiably feasible
            const auto z_full = detail::expand(miqp, asg, red, sol.z);
            if (feasible_point(z_full, 1e-7) && sol.objective < incumbent_obj - 1e-12)
            {
                incumbent_obj = sol.objective;
                incumbent_z = z_full;
                if (cfg.record_tree)
                    res.incumbents.push_back({incumbent_obj, incumbent_z});
                return 1;
            }
            return -1;
        }
        if (sol.status == QPStatus::optimal && sol.objective < incumbent_obj - 1e-12)
        {
            incumbent_obj = sol.objective;
            incumbent_z = detail::expand(miqp, asg, red, sol.z);
            if (cfg.record_tree)
                res.incumbents.push_back({incumbent_obj, incumbent_z});
            return 1;
        }
        return 0;
    };

    auto worker = [&]() {
        for (;;)
        {
            std::shared_ptr<detail::BnbNode> node;
            {
                std::unique_lock<std::mutex> lock(mtx);
                cv.wait(lock, [&] { return !open.empty() || active_workers == 0 || node_limit_hit; });
                // global bound: min over open and in-flight nodes
                auto current_gap_ok = [&]() {
                    if (incumbent_obj == kInf)
                        return false;
                    double lb = incumbent_obj;
                    if (!open.empty())
                        lb = std::min(lb, open.top()->bound);
                    if (!inflight_bounds.empty())
                        lb = std::min(lb, *inflight_bounds.begin());
                    return incumbent_obj - lb <= gap_tol(incumbent_obj);
                };
                if (node_limit_hit || (open.empty() && active_workers == 0) || current_gap_ok())
                {
                    cv.notify_all();
                    return;
                }
                if (open.empty())
                    continue;
                node = open.top();
                open.pop();
                if (incumbent_obj < kInf && node->bound >= incumbent_obj - gap_tol(incumbent_obj))
                {
                    // prune by bound; queue is bound-ordered so everything
                    // behind it is prunable too, but workers may still add
                    if (cfg.record_tree)
                        res.tree.push_back({node->id, node->parent, node->bound, node->bound, true, false});
                    cv.notify_all();
                    continue;
                }
                if (processed >= cfg.max_nodes)
                {
                    node_limit_hit = true;
                    cv.notify_all();
                    return;
                }
                ++processed;
                ++active_workers;
                inflight_bounds.insert(node->bound);
            }

            // solve the node relaxation
            const auto red = detail::reduce(miqp, node->asg);
            QPSettings qs = cfg.qp;
            qs.polish = false;
            QPSolution warm_sol;
            const QPSolution* wptr = nullptr;
            if (!node->warm_z.empty())
            {
                warm_sol = detail::restrict_warm(red, node->warm_z);
                wptr = &warm_sol;
            }
            const QPSolution sol = solve_qp(red.qp, qs, wptr);

            double node_bound = node->bound;
            bool prune = false;
            std::vector<Eigen::VectorXd> z_full;
            if (sol.status == QPStatus::infeasible)
                prune = true;
            else
            {
                const double b = objective_bound(red.qp, sol);
                node_bound = std::max(node_bound, b);
                z_full = detail::expand(miqp, node->asg, red, sol.z);
            }

            {
                std::lock_guard<std::mutex> lock(mtx);
                res.qp_iterations += sol.iters;
                if (node->id == 0 && sol.status == QPStatus::optimal)
                    res.root_relaxation_objective = sol.objective;
                if (cfg.record_tree)
                    res.tree.push_back(
                        {node->id, node->parent, node->bound, node_bound, prune, false});
                if (!prune && incumbent_obj < kInf && node_bound >= incumbent_obj - gap_tol(incumbent_obj))
                    prune = true;
            }

            if (!prune)
            {
                const auto info = integrality(z_full, node->asg, 1e-6);
                if (info.integral)
                {
                    // fix to the (already integral) assignment and re-solve for exact binaries
                    if (try_incumbent(round_assignment(z_full, node->asg), &z_full) < 0)
                    {
                        std::lock_guard<std::mutex> lock(mtx);
                        ++undecided;
                    }
                }
                else
                {
                    if (node->depth % std::max(1, cfg.rounding_period) == 0)
                        try_incumbent(round_assignment(z_full, node->asg), &z_full);

                    // branch
                    std::vector<detail::BinaryAssignment> children;
                    if (info.group >= 0 && cfg.branching == BranchRule::region_group)
                    {
                        const auto& layout = layouts[static_cast<size_t>(info.stage)];
                        const auto& g = layout.binary_groups[static_cast<size_t>(info.group)];
                        for (int pick : g)
                        {
                            detail::BinaryAssignment child = node->asg;
                            detail::fix_group_choice(child, layout, info.stage,
                                                     static_cast<size_t>(info.group), pick);
                            children.push_back(std::move(child));
                        }
                    }
                    else if (info.group >= 0)
                    {
                        // most-fractional member of the group: up-branch decides
                        // the whole one-hot choice, down-branch excludes the member
                        const auto& layout = layouts[static_cast<size_t>(info.stage)];
                        const auto& g = layout.binary_groups[static_cast<size_t>(info.group)];
                        int idx = g[0];
                        size_t member = 0;
                        for (size_t i = 0; i < g.size(); ++i)
                            if (std::abs(z_full[static_cast<size_t>(info.stage)](g[i])) <
                                std::abs(z_full[static_cast<size_t>(info.stage)](idx)))
                            {
                                idx = g[i];
                                member = i;
                            }
                        detail::BinaryAssignment up = node->asg;
                        detail::fix_group_choice(up, layout, info.stage, static_cast<size_t>(info.group),
                                                 idx);
                        children.push_back(std::move(up));
                        detail::BinaryAssignment down = node->asg;
                        down.fixed[static_cast<size_t>(info.stage)][idx] = -1.0;
                        if (static_cast<size_t>(info.group) < layout.group_factors.size() &&
                            member < layout.group_factors[static_cast<size_t>(info.group)].size())
                            for (int f : layout.group_factors[static_cast<size_t>(info.group)][member])
                                down.fixed[static_cast<size_t>(info.stage)][f] = -1.0;
                        children.push_back(std::move(down));
                    }
                    else
                    {
                        for (double v : {1.0, -1.0})
                        {
                            detail::BinaryAssignment child = node->asg;
                            child.fixed[static_cast<size_t>(info.stage)][info.binary] = v;
                            children.push_back(std::move(child));
                        }
                    }
                    std::lock_guard<std::mutex> lock(mtx);
                    for (auto& casg : children)
                    {
                        auto child = std::make_shared<detail::BnbNode>(detail::BnbNode{
                            next_id++, node->id, node_bound, std::move(casg), z_full, node->depth + 1});
                        open.push(std::move(child));
                    }
                }
            }

            {
                std::lock_guard<std::mutex> lock(mtx);
                inflight_bounds.erase(inflight_bounds.find(node->bound));
                --active_workers;
            }
            cv.notify_all();
        }
    };

    const int nthreads = std::max(1, cfg.threads);
    if (nthreads == 1)
        worker();
    else
    {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    res.nodes_explored = processed;
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (incumbent_obj < kInf)
    {
        res.objective = incumbent_obj;
        res.z_star = incumbent_z;
        double lb = incumbent_obj;
        if (!open.empty())
            lb = std::min(lb, open.top()->bound);
        res.gap = std::max(0.0, incumbent_obj - lb);
        res.status = node_limit_hit && res.gap > gap_tol(incumbent_obj) ? MIQPStatus::node_limit
                                                                        : MIQPStatus::optimal;
    }
    else
    {
        // an abandoned undecided node means infeasibility was not proven
        res.status = (node_limit_hit || undecided > 0) ? MIQPStatus::node_limit : MIQPStatus::infeasible;
    }
    return res;
}

} // namespace zonoplan

#endif
