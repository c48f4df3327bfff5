#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "sbpc/master.hpp"
#include "sbpc/restocking.hpp"
#include "test_support.hpp"

using namespace sbpc;
using namespace sbpc::test;

namespace {

// Exhaustive pricer: every elementary feasible route with negative reduced cost.
PriceFn brute_force_pricer(const StochasticInstance& inst) {
    return [&inst](const DualPrices& duals, const CutPool& pool) {
        std::vector<PricedColumn> out;
        for_each_elementary_route(inst, [&](const std::vector<int>& route) {
            double g = route_cost_or(inst, route);
            double rc = g - zeta(route, duals, pool);
            if (rc < -1e-6)
                out.push_back({route, g, rc});
        });
        std::sort(out.begin(), out.end(), [](const PricedColumn& a, const PricedColumn& b) {
            if (a.reduced_cost != b.reduced_cost)
                return a.reduced_cost < b.reduced_cost;
            return a.route < b.route;
        });
        if (out.size() > 50)
            out.resize(50);
        return out;
    };
}

std::vector<Column> seed_columns(const StochasticInstance& inst) {
    std::vector<Column> cols;
    for (int i = 1; i <= inst.n; ++i)
        cols.push_back(Column::real({i}, route_cost_or(inst, {i})));
    return cols;
}

}  // namespace

TEST_CASE("zeta: zero duals give zero") {
    DualPrices d;
    d.alpha.assign(5, 0.0);
    CutPool pool;
    CHECK(zeta({1, 2}, d, pool) == 0.0);
}

TEST_CASE("zeta: alpha and beta accumulate") {
    DualPrices d;
    d.alpha = {0.0, 2.0, 3.0, 5.0};
    d.beta = -1.5;
    d.has_beta = true;
    CutPool pool;
    CHECK(zeta({1, 3}, d, pool) == doctest::Approx(2.0 + 5.0 - 1.5));
}

TEST_CASE("zeta: SRC floor term") {
    DualPrices d;
    d.alpha.assign(5, 0.0);
    CutPool pool;
    SrcCut src;
    src.members = {1, 2, 3};
    for (int v : src.members)
        src.mask.set(v);
    pool.srcs.push_back(src);
    d.delta = {-1.0};
    CHECK(zeta({1, 2}, d, pool) == doctest::Approx(-1.0));     // floor(2/2) = 1
    CHECK(zeta({1}, d, pool) == doctest::Approx(0.0));         // floor(1/2) = 0
    CHECK(zeta({1, 2, 3}, d, pool) == doctest::Approx(-1.0));  // floor(3/2) = 1
}

TEST_CASE("zeta: RCC boundary arcs counted on exits only") {
    DualPrices d;
    d.alpha.assign(5, 0.0);
    CutPool pool;
    RccCut rcc;
    rcc.members = {1, 2};
    rcc.mask.set(1);
    rcc.mask.set(2);
    rcc.rhs = 1.0;
    pool.rccs.push_back(rcc);
    d.gamma = {2.0};
    // route 0 -> 1 -> 3 -> 2 -> 0 exits S={1,2} twice: (1,3) and (2,0)
    CHECK(zeta({1, 3, 2}, d, pool) == doctest::Approx(4.0));
    // route 0 -> 1 -> 2 -> 0 exits once: (2,0)
    CHECK(zeta({1, 2}, d, pool) == doctest::Approx(2.0));
    // route 0 -> 3 -> 0 never touches S
    CHECK(zeta({3}, d, pool) == doctest::Approx(0.0));
}

TEST_CASE("arc flows and integral separation behavior") {
    // two deterministic customers, one route covering both at value 1
    auto inst = make_instance({{0, 0}, {1, 0}, {0, 1}},
                              {DemandDistribution::point_mass(0),
                               DemandDistribution::point_mass(3),
                               DemandDistribution::point_mass(4)},
                              10);
    std::vector<Column> cols{Column::real({1, 2}, route_cost_or(inst, {1, 2}))};
    std::vector<double> primal{1.0};
    auto flows = arc_flows(inst, cols, primal);
    CHECK(flows.at(0, 1) == doctest::Approx(1.0));
    CHECK(flows.at(1, 2) == doctest::Approx(1.0));
    CHECK(flows.at(2, 0) == doctest::Approx(1.0));
    CHECK(separate_rcc(flows, inst).empty());
}

TEST_CASE("separate_rcc finds the hand-built fractional violation") {
    // S = {1,2} with mean demands 8+8 = 16, fQ = 10: rhs = ceil(1.6) = 2.
    // Two half-routes (1,2) and (2,1) give boundary flow 1.0 < 2.
    auto inst = make_instance({{0, 0}, {1, 0}, {0, 1}, {5, 5}, {-5, 5}},
                              {DemandDistribution::point_mass(0),
                               DemandDistribution::point_mass(8),
                               DemandDistribution::point_mass(8),
                               DemandDistribution::point_mass(2),
                               DemandDistribution::point_mass(2)},
                              10, 1.0);
    std::vector<Column> cols{
        Column::real({1, 2}, 1.0), Column::real({2, 1}, 1.0),
        Column::real({3}, 1.0), Column::real({4}, 1.0)};
    std::vector<double> primal{0.5, 0.5, 1.0, 1.0};
    auto flows = arc_flows(inst, cols, primal);
    auto sets = separate_rcc(flows, inst);
    bool found = false;
    for (const auto& s : sets)
        if (s == std::vector<int>{1, 2})
            found = true;
    CHECK(found);
}

TEST_CASE("separate_rcc on all-zero flows finds violated singletons") {
    auto inst = make_instance({{0, 0}, {1, 0}, {0, 1}},
                              {DemandDistribution::point_mass(0),
                               DemandDistribution::point_mass(3),
                               DemandDistribution::point_mass(4)},
                              10);
    ArcFlows flows;
    flows.n = inst.n;
    flows.x.assign((inst.n + 1) * (inst.n + 1), 0.0);
    auto sets = separate_rcc(flows, inst);
    CHECK(!sets.empty());
    bool found_singleton = false;
    for (const auto& s : sets)
        if (s.size() == 1)
            found_singleton = true;
    CHECK(found_singleton);
}

TEST_CASE("separate_src examples") {
    const int n = 4;
    SUBCASE("three columns at one half covering two of the triplet") {
        std::vector<Column> cols{Column::real({1, 2}, 1.0), Column::real({2, 3}, 1.0),
                                 Column::real({1, 3}, 1.0)};
        std::vector<double> primal{0.5, 0.5, 0.5};
        auto v = separate_src(primal, cols, n);
        REQUIRE(!v.empty());
        CHECK(v[0].members == std::array<int, 3>{1, 2, 3});
        CHECK(v[0].violation == doctest::Approx(0.5));
    }
    SUBCASE("a single column covering the whole triplet is not violated") {
        std::vector<Column> cols{Column::real({1, 2, 3}, 1.0)};
        std::vector<double> primal{1.0};
        CHECK(separate_src(primal, cols, n).empty());
    }
    SUBCASE("integral partitions are never violated") {
        std::vector<Column> cols{Column::real({1, 2}, 1.0), Column::real({3, 4}, 1.0)};
        std::vector<double> primal{1.0, 1.0};
        CHECK(separate_src(primal, cols, n).empty());
    }
}

TEST_CASE("solve_relaxation on a two-customer instance reaches the best route") {
    auto inst = make_instance({{0, 0}, {3, 0}, {0, 3}},
                              {DemandDistribution::point_mass(0),
                               DemandDistribution::from_weights({2, 5}, {0.5, 0.5}),
                               DemandDistribution::from_weights({3, 4}, {0.5, 0.5})},
                              10);
    // all three elementary routes
    double g1 = route_cost_or(inst, {1});
    double g2 = route_cost_or(inst, {2});
    double g12 = std::min(route_cost_or(inst, {1, 2}), route_cost_or(inst, {2, 1}));
    double best = std::min(g1 + g2, g12);

    MasterConfig cfg;
    cfg.artificial_cost = 1000.0;
    RestrictedMaster master(inst, seed_columns(inst), CutPool{}, cfg);
    auto res = master.solve_relaxation(brute_force_pricer(inst), true);
    CHECK(res.feasible);
    CHECK(res.lower_bound == doctest::Approx(best).epsilon(1e-9));
    CHECK(res.integral);
}

TEST_CASE("infeasible node signals through stuck artificials") {
    // Customer 2's demand exceeds capacity of any single route only if paired;
    // here we simply provide no real column able to cover customer 2 and a
    // pricer that never generates one (as if all its arcs were forbidden).
    auto inst = make_instance({{0, 0}, {3, 0}, {0, 3}},
                              {DemandDistribution::point_mass(0),
                               DemandDistribution::point_mass(3),
                               DemandDistribution::point_mass(4)},
                              10);
    MasterConfig cfg;
    cfg.artificial_cost = 1000.0;
    std::vector<Column> cols{Column::real({1}, route_cost_or(inst, {1}))};
    RestrictedMaster master(inst, cols, CutPool{}, cfg);
    auto res = master.solve_relaxation(
        [](const DualPrices&, const CutPool&) { return std::vector<PricedColumn>{}; }, true);
    CHECK(!res.feasible);
}

TEST_CASE("node bound is monotone across cut rounds") {
    Rng rng(5150);
    auto inst = random_instance(5, 10, 3, 6, rng, 1.5);
    MasterConfig cfg;
    cfg.artificial_cost = 10000.0;
    RestrictedMaster master(inst, seed_columns(inst), CutPool{}, cfg);
    auto res = master.solve_relaxation(brute_force_pricer(inst), true);
    CHECK(res.feasible);
    // solving again can only keep or raise the bound (already converged here)
    auto res2 = master.solve_relaxation(brute_force_pricer(inst), true);
    CHECK(res2.lower_bound >= res.lower_bound - 1e-7);
}

TEST_CASE("state dump is valid JSON") {
    auto inst = make_instance({{0, 0}, {3, 0}},
                              {DemandDistribution::point_mass(0),
                               DemandDistribution::point_mass(3)},
                              10);
    MasterConfig cfg;
    RestrictedMaster master(inst, seed_columns(inst), CutPool{}, cfg);
    auto res = master.solve_relaxation(brute_force_pricer(inst), true);
    CHECK(res.feasible);
    std::ostringstream os;
    master.dump_state(os);
    CHECK(os.str().find("\"columns\"") != std::string::npos);
}
