#include "sbpc/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>

#include "sbpc/restocking.hpp"

#ifdef SBPC_HAVE_OPENMP
#include <omp.h>
#endif

namespace sbpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sweep_objective(const StochasticInstance& inst,
                       const std::vector<std::vector<int>>& routes) {
    double total = 0.0;
    for (const auto& r : routes)
        total += route_cost_or(inst, r);
    return total;
}

}  // namespace

Incumbent greedy_sweep(const StochasticInstance& inst) {
    std::vector<int> by_angle;
    for (int i = 1; i <= inst.n; ++i)
        by_angle.push_back(i);
    std::sort(by_angle.begin(), by_angle.end(), [&](int a, int b) {
        double aa = std::atan2(inst.coords[a].y - inst.coords[0].y,
                               inst.coords[a].x - inst.coords[0].x);
        double ab = std::atan2(inst.coords[b].y - inst.coords[0].y,
                               inst.coords[b].x - inst.coords[0].x);
        if (aa != ab)
            return aa < ab;
        return a < b;
    });

    Incumbent best;
    const int rotations = std::min(inst.n, 16);
    for (int r = 0; r < rotations; ++r) {
        std::vector<std::vector<int>> routes;
        std::vector<int> current;
        double load = 0.0;
        for (int k = 0; k < inst.n; ++k) {
            int c = by_angle[(k + r * inst.n / rotations) % inst.n];
            if (load + inst.mean_demand(c) > inst.load_limit() + 1e-9) {
                routes.push_back(current);
                current.clear();
                load = 0.0;
            }
            current.push_back(c);
            load += inst.mean_demand(c);
        }
        if (!current.empty())
            routes.push_back(current);
        const bool fleet_ok =
            inst.unlimited_fleet() || int(routes.size()) <= inst.fleet;
        const double obj = sweep_objective(inst, routes);
        const bool better =
            (fleet_ok && !best.feasible) ||
            (fleet_ok == best.feasible && obj < best.objective);
        if (better) {
            best.routes = routes;
            best.objective = obj;
            best.feasible = fleet_ok;
        }
    }
    return best;
}

namespace {

struct Node {
    long id = 0;
    double lb = 0.0;
    std::vector<std::pair<int, int>> forced;
    std::vector<std::pair<int, int>> banned;
};

struct NodeCompare {
    bool operator()(const Node& a, const Node& b) const {
        if (a.lb != b.lb)
            return a.lb > b.lb;  // min-heap on the bound
        return a.id > b.id;
    }
};

std::vector<Column> filter_columns(const std::vector<Column>& pool, const ArcRules& rules) {
    std::vector<Column> out;
    for (const auto& c : pool)
        if (rules.allows_route(c.route))
            out.push_back(c);
    return out;
}

// Follows unit arc flows from the depot; empty result when the walk breaks.
std::vector<std::vector<int>> extract_routes(const ArcFlows& flows, int n, double tol) {
    std::vector<std::vector<int>> routes;
    std::vector<char> seen(n + 1, 0);
    for (int start = 1; start <= n; ++start) {
        if (flows.at(0, start) < 1.0 - tol)
            continue;
        std::vector<int> route;
        int cur = start;
        while (cur != 0) {
            if (cur < 0 || seen[cur])
                return {};
            seen[cur] = 1;
            route.push_back(cur);
            int next = -1;
            for (int j = 0; j <= n; ++j)
                if (j != cur && flows.at(cur, j) > 1.0 - tol) {
                    next = j;
                    break;
                }
            if (next < 0)
                return {};
            cur = next;
        }
        routes.push_back(std::move(route));
    }
    for (int i = 1; i <= n; ++i)
        if (!seen[i])
            return {};
    return routes;
}

bool verify_incumbent(const StochasticInstance& inst,
                      const std::vector<std::vector<int>>& routes, double* objective) {
    std::vector<char> seen(inst.n + 1, 0);
    double total = 0.0;
    for (const auto& r : routes) {
        if (r.empty())
            return false;
        double load = 0.0;
        for (int v : r) {
            if (v < 1 || v > inst.n || seen[v])
                return false;
            seen[v] = 1;
            load += inst.mean_demand(v);
        }
        if (load > inst.load_limit() + 1e-9)
            return false;
        total += route_cost_or(inst, r);
    }
    for (int i = 1; i <= inst.n; ++i)
        if (!seen[i])
            return false;
    if (!inst.unlimited_fleet() && int(routes.size()) > inst.fleet)
        return false;
    *objective = total;
    return true;
}

}  // namespace

std::pair<int, int> select_branch_arc(const StochasticInstance& inst,
                                      const std::vector<Column>& columns,
                                      const CutPool& pool, const ArcFlows& flows,
                                      const std::vector<std::pair<int, int>>& forced,
                                      const std::vector<std::pair<int, int>>& banned,
                                      const MasterConfig& mcfg, int k_candidates,
                                      int workers) {
    struct Cand {
        double dist;
        int i, j;
    };
    std::vector<Cand> cands;
    const int n = inst.n;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            if (i == j || (i == 0 && j == 0))
                continue;
            const double x = flows.at(i, j);
            if (x > 1e-6 && x < 1.0 - 1e-6)
                cands.push_back({std::abs(x - 0.5), i, j});
        }
    if (cands.empty())
        throw std::logic_error("select_branch_arc: solution is integral in arc space");
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.dist != b.dist)
            return a.dist < b.dist;
        if (a.i != b.i)
            return a.i < b.i;
        return a.j < b.j;
    });
    if (int(cands.size()) > k_candidates)
        cands.resize(k_candidates);

    std::vector<Column> real_columns;
    for (const auto& c : columns)
        if (!c.artificial)
            real_columns.push_back(c);

    std::vector<double> score(cands.size(), 0.0);
    const int T = std::max(1, workers <= 0 ? 1 : workers);
#ifdef SBPC_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(T) if (T > 1)
#endif
    for (int k = 0; k < int(cands.size()); ++k) {
        auto eval_child = [&](bool force) {
            auto f = forced;
            auto b = banned;
            if (force)
                f.push_back({cands[k].i, cands[k].j});
            else
                b.push_back({cands[k].i, cands[k].j});
            auto rules = ArcRules::from_branching(inst.n, f, b);
            RestrictedMaster child(inst, filter_columns(real_columns, rules), pool, mcfg);
            return child.lp_bound().second;
        };
        score[k] = std::min(eval_child(true), eval_child(false));
    }
    int best = 0;
    for (int k = 1; k < int(cands.size()); ++k) {
        if (score[k] > score[best] + 1e-9 ||
            (score[k] > score[best] - 1e-9 &&
             std::pair(cands[k].i, cands[k].j) < std::pair(cands[best].i, cands[best].j)))
            best = k;
    }
    return {cands[best].i, cands[best].j};
}

BnbResult solve(const StochasticInstance& inst, const BnbConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    BnbResult result;
    auto sweep = greedy_sweep(inst);
    Incumbent incumbent = sweep.feasible ? sweep : Incumbent{};
    if (sweep.feasible) {
        double obj = 0.0;
        if (!verify_incumbent(inst, sweep.routes, &obj))
            incumbent = Incumbent{};
        else
            incumbent.objective = obj;
    }

    MasterConfig mcfg = config.master;
    mcfg.artificial_cost = 10.0 * std::max(1.0, sweep.objective);
    PricingConfig pcfg = config.pricing;
    pcfg.workers = config.workers;
    pcfg.aggressive = true;

    // global pools shared down the tree
    std::vector<Column> columns;
    std::set<std::vector<int>> known_routes;
    auto harvest = [&](const Column& c) {
        if (c.artificial)
            return;
        if (known_routes.insert(c.route).second)
            columns.push_back(c);
    };
    for (int i = 1; i <= inst.n; ++i)
        harvest(Column::real({i}, route_cost_or(inst, {i})));
    for (const auto& r : sweep.routes)
        harvest(Column::real(r, route_cost_or(inst, r)));
    CutPool pool;

    std::priority_queue<Node, std::vector<Node>, NodeCompare> open;
    open.push(Node{});
    long next_id = 1;
    bool fathomed_all = false;

    auto log_line = [&](double node_lb) {
        if (!config.log)
            return;
        const double ub = incumbent.feasible ? incumbent.objective : kInf;
        const double lb = std::min(node_lb, ub);
        (*config.log) << "nodes=" << result.stats.nodes << " lb=" << lb << " ub=" << ub
                      << " gap="
                      << (incumbent.feasible && ub > 0 ? (ub - lb) / ub * 100.0 : 100.0)
                      << "% rcc=" << pool.rccs.size() << " src=" << pool.srcs.size()
                      << " cols=" << columns.size() << " t=" << elapsed() << "s\n";
    };

    while (!open.empty()) {
        if (elapsed() > config.time_limit_seconds) {
            result.timed_out = true;
            break;
        }
        Node node = open.top();
        open.pop();
        if (incumbent.feasible && node.lb >= incumbent.objective - config.optimality_tol) {
            fathomed_all = true;  // best-first: every open node is fathomed too
            break;
        }

        auto rules = ArcRules::from_branching(inst.n, node.forced, node.banned);
        RestrictedMaster master(inst, filter_columns(columns, rules), pool, mcfg);
        auto pricer = [&](const DualPrices& duals, const CutPool& p) {
            return price(inst, duals, p, rules, pcfg, nullptr);
        };
        RelaxResult res;
        res = master.solve_relaxation(pricer, node.id == 0);
        ++result.stats.nodes;
        for (const auto& c : master.columns())
            harvest(c);
        pool = master.pool();
        log_line(node.lb);

        if (node.id == 0 && !res.feasible) {
            result.infeasible = true;
            break;
        }
        if (!res.feasible)
            continue;
        if (res.lower_bound < node.lb - 1e-7)
            throw std::logic_error("bnb: child bound fell below its parent");
        if (incumbent.feasible && res.lower_bound >= incumbent.objective - config.optimality_tol)
            continue;

        if (res.integral) {
            auto routes = extract_routes(res.flows, inst.n, config.integrality_tol);
            double obj = 0.0;
            if (routes.empty() || !verify_incumbent(inst, routes, &obj))
                throw std::runtime_error("bnb: integral flows but route extraction failed");
            if (obj < incumbent.objective) {
                incumbent.routes = routes;
                incumbent.objective = obj;
                incumbent.feasible = true;
            }
            continue;
        }

        auto [bi, bj] = select_branch_arc(inst, master.columns(), pool, res.flows,
                                          node.forced, node.banned, mcfg,
                                          config.branch_candidates, config.workers);
        Node off;
        off.id = next_id++;
        off.lb = res.lower_bound;
        off.forced = node.forced;
        off.banned = node.banned;
        off.banned.push_back({bi, bj});
        Node on;
        on.id = next_id++;
        on.lb = res.lower_bound;
        on.forced = node.forced;
        on.forced.push_back({bi, bj});
        on.banned = node.banned;
        open.push(std::move(off));
        open.push(std::move(on));
    }

    const double ub = incumbent.feasible ? incumbent.objective : kInf;
    double lb;
    if (result.infeasible)
        lb = kInf;
    else if (open.empty() || fathomed_all)
        lb = ub;
    else
        lb = std::min(ub, std::max(0.0, open.top().lb));

    result.incumbent = incumbent;
    result.lower_bound = lb;
    result.proven = !result.infeasible && !result.timed_out && incumbent.feasible &&
                    (open.empty() || fathomed_all);
    if (result.proven)
        result.gap = 0.0;
    else if (!incumbent.feasible)
        result.gap = kInf;
    else
        result.gap = ub > 0 ? (ub - lb) / ub : 0.0;
    result.stats.rcc_count = int(pool.rccs.size());
    result.stats.src_count = int(pool.srcs.size());
    result.stats.columns = long(columns.size());
    result.stats.runtime_seconds = elapsed();
    return result;
}

}  // namespace sbpc
