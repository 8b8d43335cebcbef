#include <catch2/catch_amalgamated.hpp>

#include <zonoplan/miqp.hpp>
#include <zonoplan/set_ops.hpp>
#include <zonoplan/sets.hpp>

#include "qp_oracles.hpp"

#include <random>

using namespace zonoplan;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace
{

// miniature planning instance on a line: x_{k+1} = x_k + u_k, x_k constrained
// to a union of intervals encoded exactly like the planner encodes the
// feasible map (membership factors + one-hot binary group per stage)
struct LineWorld
{
    std::vector<std::pair<double, double>> regions;
    double x0 = 0.0;
    double goal = 0.0;
    double u_max = 1.0;
    int N = 3;
    double qN = 10.0;
    double r = 1.0;
    VectorXd region_costs; // optional, per region
};

MultistageMIQP build_line_miqp(const LineWorld& w)
{
    std::vector<VPolytope> polys;
    for (auto [a, b] : w.regions)
    {
        std::vector<VectorXd> verts;
        verts.push_back(VectorXd::Constant(1, a));
        verts.push_back(VectorXd::Constant(1, b));
        polys.emplace_back(verts);
    }
    const HybridZonotope F = hybzono_from_vrep(polys);
    const int M = F.num_continuous();
    const int Nb = F.num_binary();
    const int nz = 2 + M + Nb; // x, u, factors

    MultistageMIQP miqp;
    auto& qp = miqp.qp;
    for (int k = 0; k <= w.N; ++k)
    {
        StageQP s = StageQP::zero(nz);
        s.P(1, 1) = 2.0 * w.r; // input cost (unused at stage N but harmless: u pinned there)
        if (k == w.N)
        {
            s.P(0, 0) = 2.0 * w.qN;
            s.q(0) = -2.0 * w.qN * w.goal;
            qp.obj_offset += w.qN * w.goal * w.goal;
        }
        if (w.region_costs.size() == Nb)
            for (int j = 0; j < Nb; ++j)
            {
                s.q(2 + M + j) = w.region_costs(j) / 2.0;
                qp.obj_offset += w.region_costs(j) / 2.0;
            }

        // membership rows: x = Gc xic + Gb xib + c ; Ac xic + Ab xib = b
        const int me = 1 + F.num_constraints() + (k == 0 ? 1 : 0) + (k == w.N ? 1 : 0);
        s.E = MatrixXd::Zero(me, nz);
        s.e = VectorXd::Zero(me);
        s.E(0, 0) = 1.0;
        s.E.block(0, 2, 1, M) = -F.Gc;
        s.E.block(0, 2 + M, 1, Nb) = -F.Gb;
        s.e(0) = -F.c(0);
        s.E.block(1, 2, F.num_constraints(), M) = F.Ac;
        s.E.block(1, 2 + M, F.num_constraints(), Nb) = F.Ab;
        s.e.segment(1, F.num_constraints()) = -F.b;
        int row = 1 + F.num_constraints();
        if (k == 0)
        {
            s.E(row, 0) = 1.0;
            s.e(row) = -w.x0;
            ++row;
        }
        if (k == w.N)
        {
            s.E(row, 1) = 1.0; // pin unused terminal input
            s.e(row) = 0.0;
        }

        // boxes on factors and input
        const int mi = 2 * (M + Nb) + 2;
        s.G = MatrixXd::Zero(mi, nz);
        s.w = VectorXd::Ones(mi);
        for (int j = 0; j < M + Nb; ++j)
        {
            s.G(2 * j, 2 + j) = 1.0;
            s.G(2 * j + 1, 2 + j) = -1.0;
        }
        s.G(2 * (M + Nb), 1) = 1.0;
        s.w(2 * (M + Nb)) = w.u_max;
        s.G(2 * (M + Nb) + 1, 1) = -1.0;
        s.w(2 * (M + Nb) + 1) = w.u_max;

        qp.stages.push_back(std::move(s));

        StageLayout layout;
        layout.nx = 1;
        layout.nu = 1;
        std::vector<int> group;
        std::vector<std::vector<int>> member_factors;
        for (int j = 0; j < Nb; ++j)
        {
            group.push_back(2 + M + j);
            std::vector<int> factors; // incidence row j of the one-hot encoding
            for (int i = 0; i < M; ++i)
                if (F.Ac(j, i) != 0.0)
                    factors.push_back(2 + i);
            member_factors.push_back(factors);
        }
        layout.binary_groups.push_back(group);
        layout.group_factors.push_back(member_factors);
        qp.layouts.push_back(layout);
    }
    for (int k = 0; k < w.N; ++k)
    {
        CouplingBlock cb;
        cb.C = MatrixXd::Zero(1, nz);
        cb.C(0, 0) = 1.0;
        cb.C(0, 1) = 1.0;
        cb.D = MatrixXd::Zero(1, nz);
        cb.D(0, 0) = -1.0;
        cb.c = VectorXd::Zero(1);
        qp.couplings.push_back(std::move(cb));
    }
    return miqp;
}

bool check_feasible(const MultistageMIQP& miqp, const std::vector<VectorXd>& z, double tol)
{
    const auto& qp = miqp.qp;
    for (size_t k = 0; k < qp.stages.size(); ++k)
    {
        const auto& s = qp.stages[k];
        if (s.num_eq() > 0 && (s.E * z[k] + s.e).cwiseAbs().maxCoeff() > tol)
            return false;
        if (s.num_ineq() > 0 && (s.G * z[k] - s.w).maxCoeff() > tol)
            return false;
        for (int idx : qp.layouts[k].all_binaries())
            if (std::abs(std::abs(z[k](idx)) - 1.0) > 1e-9)
                return false;
    }
    for (size_t k = 0; k < qp.couplings.size(); ++k)
    {
        const auto& cb = qp.couplings[k];
        if ((cb.C * z[k] + cb.D * z[k + 1] + cb.c).cwiseAbs().maxCoeff() > tol)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("no binaries: miqp equals qp")
{
    std::mt19937_64 rng(8);
    auto qp = oracles::random_chain_qp(rng, 3, 3, 2, true);
    MultistageMIQP miqp;
    miqp.qp = qp;
    miqp.qp.layouts.assign(qp.stages.size(), StageLayout{});
    auto direct = solve_qp(qp);
    auto res = solve_miqp(miqp);
    REQUIRE(res.status == MIQPStatus::optimal);
    CHECK(res.objective == Catch::Approx(direct.objective).epsilon(1e-6).margin(1e-8));
    CHECK(res.nodes_explored == 1);
}

TEST_CASE("single stage two regions: selects the region containing the target")
{
    LineWorld w;
    w.regions = {{0.0, 1.0}, {2.0, 3.0}};
    w.x0 = 2.4;
    w.goal = 2.6;
    w.N = 1;
    w.u_max = 3.0;
    auto miqp = build_line_miqp(w);
    auto res = solve_miqp(miqp);
    REQUIRE(res.status == MIQPStatus::optimal);
    // optimum trades input cost against terminal cost: u* = qN*0.2/(r+qN)
    CHECK(res.z_star.back()(0) == Catch::Approx(2.4 + 10.0 * 0.2 / 11.0).margin(1e-5));
    // binary of region 2 (+1), region 1 (-1) at terminal stage
    const auto& layout = miqp.qp.layouts.back();
    const auto& g = layout.binary_groups[0];
    CHECK(res.z_star.back()(g[1]) == Catch::Approx(1.0));
    CHECK(res.z_star.back()(g[0]) == Catch::Approx(-1.0));

    auto brute = brute_force(miqp);
    REQUIRE(brute.status == MIQPStatus::optimal);
    CHECK(std::abs(res.objective - brute.objective) <= std::max(0.1, 0.01 * std::abs(brute.objective)));
}

TEST_CASE("gap crossing forced by dynamics")
{
    // start in region 1, goal in region 2; step limit forces multiple steps
    LineWorld w;
    w.regions = {{0.0, 1.0}, {2.0, 3.0}};
    w.x0 = 0.5;
    w.goal = 2.8;
    w.N = 4;
    w.u_max = 1.2;
    auto miqp = build_line_miqp(w);
    auto res = solve_miqp(miqp);
    REQUIRE(res.status == MIQPStatus::optimal);
    CHECK(res.z_star.back()(0) > 2.0);
    auto brute = brute_force(miqp);
    CHECK(std::abs(res.objective - brute.objective) <= std::max(0.1, 0.01 * std::abs(brute.objective)));
    CHECK(check_feasible(miqp, res.z_star, 1e-6));
}

TEST_CASE("infeasible when regions are unreachable")
{
    LineWorld w;
    w.regions = {{0.0, 1.0}};
    w.x0 = 5.0; // outside every region; stage-0 membership cannot hold
    w.goal = 0.5;
    w.N = 2;
    auto miqp = build_line_miqp(w);
    auto res = solve_miqp(miqp);
    CHECK(res.status == MIQPStatus::infeasible);
    auto brute = brute_force(miqp);
    CHECK(brute.status == MIQPStatus::infeasible);
}

TEST_CASE("oracle equivalence on randomized instances")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    int done = 0;
    for (int trial = 0; trial < 60 && done < 50; ++trial)
    {
        LineWorld w;
        const int nregions = 2 + static_cast<int>(rng() % 3); // 2..4
        double cursor = 0.0;
        for (int i = 0; i < nregions; ++i)
        {
            const double len = 0.5 + unif(rng);
            const double gap = 0.2 + 0.5 * unif(rng);
            w.regions.emplace_back(cursor, cursor + len);
            cursor += len + gap;
        }
        w.N = 2 + static_cast<int>(rng() % 3); // 2..4
        w.x0 = 0.1 + 0.5 * unif(rng);
        w.goal = cursor - 0.2 - unif(rng);
        w.u_max = 0.8 + unif(rng);
        if (rng() % 2)
        {
            w.region_costs = VectorXd::Zero(nregions);
            w.region_costs(static_cast<long>(rng() % nregions)) = 5.0 * unif(rng);
        }
        auto miqp = build_line_miqp(w);
        MIQPConfig cfg;
        cfg.eps_abs = 0.1;
        cfg.eps_rel = 0.01;
        auto res = solve_miqp(miqp, cfg);
        auto brute = brute_force(miqp);
        REQUIRE(res.status == brute.status);
        if (res.status != MIQPStatus::optimal)
            continue;
        ++done;
        INFO("trial " << trial << " J_bnb " << res.objective << " J_brute " << brute.objective);
        CHECK(res.objective - brute.objective <= std::max(0.1, 0.01 * std::abs(brute.objective)) + 1e-9);
        CHECK(brute.objective - res.objective <= 1e-6 * (1.0 + std::abs(brute.objective)));
        CHECK(check_feasible(miqp, res.z_star, 1e-6));
    }
    REQUIRE(done >= 50);
}

TEST_CASE("bound monotonicity and anytime incumbent validity")
{
    LineWorld w;
    w.regions = {{0.0, 1.0}, {1.5, 2.2}, {2.8, 4.0}};
    w.x0 = 0.4;
    w.goal = 3.6;
    w.N = 4;
    w.u_max = 1.0;
    auto miqp = build_line_miqp(w);
    MIQPConfig cfg;
    cfg.record_tree = true;
    cfg.eps_abs = 1e-6; // force deep exploration
    cfg.eps_rel = 1e-9;
    auto res = solve_miqp(miqp, cfg);
    REQUIRE(res.status == MIQPStatus::optimal);
    REQUIRE(!res.tree.empty());
    for (const auto& n : res.tree)
        if (!n.pruned)
            CHECK(n.bound >= n.parent_bound - 1e-8);
    REQUIRE(!res.incumbents.empty());
    for (const auto& inc : res.incumbents)
        CHECK(check_feasible(miqp, inc.z, 1e-6));
}

TEST_CASE("node limit returns best incumbent")
{
    LineWorld w;
    w.regions = {{0.0, 1.0}, {1.5, 2.2}, {2.8, 4.0}};
    w.x0 = 0.4;
    w.goal = 3.6;
    w.N = 4;
    w.u_max = 1.0;
    auto miqp = build_line_miqp(w);
    MIQPConfig cfg;
    cfg.max_nodes = 2;
    cfg.eps_abs = 1e-9;
    cfg.eps_rel = 1e-12;
    auto res = solve_miqp(miqp, cfg);
    CHECK((res.status == MIQPStatus::node_limit || res.status == MIQPStatus::optimal));
}

TEST_CASE("value determinism across thread counts")
{
    LineWorld w;
    w.regions = {{0.0, 1.0}, {1.4, 2.4}, {3.0, 4.2}, {4.6, 5.4}};
    w.x0 = 0.5;
    w.goal = 5.0;
    w.N = 5;
    w.u_max = 1.3;
    w.region_costs = VectorXd::Zero(4);
    w.region_costs(2) = 2.0;
    auto miqp = build_line_miqp(w);
    std::vector<double> objectives;
    for (int threads : {1, 4, 16})
    {
        MIQPConfig cfg;
        cfg.threads = threads;
        auto res = solve_miqp(miqp, cfg);
        REQUIRE(res.status == MIQPStatus::optimal);
        objectives.push_back(res.objective);
    }
    const double tol = std::max(0.1, 0.01 * std::abs(objectives[0]));
    CHECK(std::abs(objectives[1] - objectives[0]) <= 2 * tol);
    CHECK(std::abs(objectives[2] - objectives[0]) <= 2 * tol);
}

TEST_CASE("brute force respects the combinatorial limit")
{
    LineWorld w;
    w.regions = {{0.0, 1.0}, {2.0, 3.0}};
    w.N = 2;
    w.x0 = 0.5;
    w.goal = 0.7;
    auto miqp = build_line_miqp(w);
    BruteForceOptions opts;
    opts.combo_limit = 4; // 2 regions over 3 stages = 8 combos > 4
    CHECK_THROWS_WITH(brute_force(miqp, opts), Catch::Matchers::ContainsSubstring("combinatorial limit"));
}

TEST_CASE("brute force reachability prune preserves the optimum")
{
    LineWorld w;
    w.regions = {{0.0, 1.0}, {1.5, 2.2}, {2.8, 4.0}};
    w.x0 = 0.4;
    w.goal = 3.2;
    w.N = 3;
    w.u_max = 1.0;
    auto miqp = build_line_miqp(w);
    auto plain = brute_force(miqp);

    BruteForceOptions opts;
    // sound prune: region must be reachable from x0 at rate u_max
    opts.admissible = [&](const std::vector<std::vector<int>>& choice) {
        for (size_t k = 0; k < choice.size(); ++k)
            for (int var_idx : choice[k])
            {
                // recover region index from variable index
                const auto& g = miqp.qp.layouts[k].binary_groups[0];
                int region = -1;
                for (size_t i = 0; i < g.size(); ++i)
                    if (g[i] == var_idx)
                        region = static_cast<int>(i);
                const auto [a, b] = w.regions[static_cast<size_t>(region)];
                const double reach = std::abs(static_cast<double>(k)) * w.u_max;
                if (w.x0 + reach < a - 1e-9 || w.x0 - reach > b + 1e-9)
                    return false;
            }
        return true;
    };
    auto pruned = brute_force(miqp, opts);
    REQUIRE(pruned.status == plain.status);
    CHECK(pruned.objective == Catch::Approx(plain.objective).margin(1e-7));
    CHECK(pruned.nodes_explored < plain.nodes_explored);
}
