#ifndef SBPC_TEST_SUPPORT_HPP
#define SBPC_TEST_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sbpc/instance.hpp"
#include "sbpc/restocking.hpp"
#include "sbpc/rng.hpp"

namespace sbpc::test {

// Builds a toy instance from explicit coordinates and demand distributions.
// Costs are unrounded Euclidean; node 0 is the depot.
inline StochasticInstance make_instance(std::vector<Coord> coords,
                                        std::vector<DemandDistribution> demands,
                                        int capacity, double load_factor = 1.0,
                                        int fleet = kUnlimitedFleet) {
    StochasticInstance inst;
    inst.n = int(coords.size()) - 1;
    inst.coords = std::move(coords);
    inst.capacity = capacity;
    inst.fleet = fleet;
    inst.load_factor = load_factor;
    inst.demands = std::move(demands);
    inst.nominal_demand.assign(inst.n + 1, 0);
    for (int i = 1; i <= inst.n; ++i)
        inst.nominal_demand[i] = int(std::lround(inst.demands[i].mean));
    inst.cost.assign(inst.n + 1, std::vector<double>(inst.n + 1, 0.0));
    for (int i = 0; i <= inst.n; ++i)
        for (int j = 0; j <= inst.n; ++j)
            if (i != j)
                inst.cost[i][j] = euclidean_cost(inst.coords[i], inst.coords[j]);
    return inst;
}

// Random planar instance with small discrete demand supports (at most
// `max_points` points, values in [0, max_value]).
inline StochasticInstance random_instance(int n, int capacity, int max_points,
                                          int max_value, Rng& rng,
                                          double load_factor = 1.0) {
    std::vector<Coord> coords(n + 1);
    coords[0] = {0.0, 0.0};
    for (int i = 1; i <= n; ++i)
        coords[i] = {rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
    std::vector<DemandDistribution> demands(n + 1);
    demands[0] = DemandDistribution::point_mass(0);
    for (int i = 1; i <= n; ++i) {
        int points = 1 + int(rng.next_below(max_points));
        std::vector<int> values;
        while (int(values.size()) < points) {
            int v = int(rng.next_below(max_value + 1));
            if (std::find(values.begin(), values.end(), v) == values.end())
                values.push_back(v);
        }
        std::sort(values.begin(), values.end());
        std::vector<double> weights(values.size());
        for (auto& w : weights)
            w = rng.uniform(0.1, 1.0);
        demands[i] = DemandDistribution::from_weights(values, weights);
    }
    return make_instance(std::move(coords), std::move(demands), capacity, load_factor);
}

// Expected cost-to-go after fully serving route[k] with residual capacity q,
// by direct recursion over every demand outcome and both decisions. No tables,
// no monotonicity shortcuts; this is the independent oracle.
inline double oracle_cost_to_go(const StochasticInstance& inst,
                                const std::vector<int>& route, int k, long q) {
    const int H = int(route.size());
    const int v = route[k];
    if (k == H - 1)
        return inst.cost[v][0];
    const int w = route[k + 1];
    const int Q = inst.capacity;
    const double round_trip = inst.cost[w][0] + inst.cost[0][w];
    double e_direct = 0.0, e_restock = 0.0;
    const auto& d = inst.demands[w];
    for (std::size_t s = 0; s < d.support.size(); ++s) {
        const int xi = d.support[s];
        const double p = d.probs[s];
        int t1 = trips_needed(xi, q, Q);
        e_direct += p * (t1 * round_trip +
                         oracle_cost_to_go(inst, route, k + 1, q + long(Q) * t1 - xi));
        int t2 = trips_needed(xi, Q, Q);
        e_restock += p * (t2 * round_trip +
                          oracle_cost_to_go(inst, route, k + 1, long(Q) * (t2 + 1) - xi));
    }
    double direct = inst.cost[v][w] + d.mass * e_direct;
    double restock = inst.cost[v][0] + inst.cost[0][w] + d.mass * e_restock;
    return std::min(direct, restock);
}

inline double oracle_route_cost(const StochasticInstance& inst,
                                const std::vector<int>& route) {
    const int v = route[0];
    const int Q = inst.capacity;
    const double round_trip = inst.cost[v][0] + inst.cost[0][v];
    double e = 0.0;
    const auto& d = inst.demands[v];
    for (std::size_t s = 0; s < d.support.size(); ++s) {
        const int xi = d.support[s];
        int t = trips_needed(xi, Q, Q);
        e += d.probs[s] * (t * round_trip +
                           oracle_cost_to_go(inst, route, 0, long(Q) * (t + 1) - xi));
    }
    return inst.cost[0][v] + d.mass * e;
}

// Enumerates every elementary load-feasible route (nonempty customer
// sequences with sum of mean demands within f*Q).
inline void for_each_elementary_route(const StochasticInstance& inst,
                                      const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> route;
    std::vector<char> used(inst.n + 1, 0);
    std::function<void(double)> rec = [&](double load) {
        if (!route.empty())
            fn(route);
        for (int v = 1; v <= inst.n; ++v) {
            if (used[v])
                continue;
            double next = load + inst.mean_demand(v);
            if (next > inst.load_limit() + 1e-9)
                continue;
            used[v] = 1;
            route.push_back(v);
            rec(next);
            route.pop_back();
            used[v] = 0;
        }
    };
    rec(0.0);
}

// Enumerates every demand scenario of the route with its probability.
inline void for_each_scenario(const StochasticInstance& inst,
                              const std::vector<int>& route,
                              const std::function<void(const std::vector<long>&, double)>& fn) {
    std::vector<long> demands(route.size(), 0);
    std::function<void(std::size_t, double)> rec = [&](std::size_t k, double p) {
        if (k == route.size()) {
            fn(demands, p);
            return;
        }
        const auto& d = inst.demands[route[k]];
        for (std::size_t s = 0; s < d.support.size(); ++s) {
            demands[k] = d.support[s];
            rec(k + 1, p * d.probs[s]);
        }
    };
    rec(0, 1.0);
}

}  // namespace sbpc::test

#endif
