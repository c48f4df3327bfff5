#include "sbpc/restocking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sbpc {

int trips_needed(long xi, long q, int Q) {
    if (xi <= q)
        return 0;
    return int((xi - q + Q - 1) / Q);
}

namespace detail {

double dp_expect(const DemandDistribution& dj, int Q, int q, double c_0j,
                 double c_j0, const double* next) {
    const double round_trip = c_j0 + c_0j;
    double e = 0.0;
    for (std::size_t k = 0; k < dj.support.size(); ++k) {
        const int xi = dj.support[k];
        const int trips = trips_needed(xi, q, Q);
        e += dj.probs[k] * (trips * round_trip + next[q + Q * trips - xi]);
    }
    // Truncated distributions contribute only their retained raw mass.
    return e * dj.mass;
}

double dp_step(const DemandDistribution& dj, int Q, double c_prev_j,
               double c_prev_0, double c_0j, double c_j0, const double* next,
               double* out, std::uint8_t* restock) {
    const double replenish = c_prev_0 + c_0j + dp_expect(dj, Q, Q, c_0j, c_j0, next);
    for (int q = Q; q >= 0; --q) {
        const double direct = c_prev_j + dp_expect(dj, Q, q, c_0j, c_j0, next);
        if (restock) {
            restock[q] = replenish < direct ? 1 : 0;
            out[q] = std::min(direct, replenish);
        } else if (direct < replenish) {
            out[q] = direct;
        } else {
            // phi' is nonincreasing in q under the triangle inequality, so the
            // replenish branch wins for every smaller q as well.
            for (int r = q; r >= 0; --r)
                out[r] = replenish;
            break;
        }
    }
    return replenish;
}

}  // namespace detail

namespace {

void check_route(const StochasticInstance& inst, const std::vector<int>& route) {
    if (route.empty())
        throw std::invalid_argument("route must be nonempty");
    std::vector<char> seen(inst.n + 1, 0);
    for (int v : route) {
        if (v < 1 || v > inst.n)
            throw std::invalid_argument("route contains the depot or an unknown customer");
        if (seen[v]++)
            throw std::invalid_argument("route visits a customer twice");
    }
}

}  // namespace

RoutePolicy build_policy(const StochasticInstance& inst, const std::vector<int>& route) {
    check_route(inst, route);
    const int Q = inst.capacity;
    const int H = int(route.size());

    RoutePolicy policy;
    policy.route = route;
    policy.tables.resize(H);
    policy.restock.assign(std::max(0, H - 1), std::vector<std::uint8_t>(Q + 1, 0));

    policy.tables[H - 1].values.assign(Q + 1, inst.cost[route[H - 1]][0]);
    for (int k = H - 2; k >= 0; --k) {
        const int v = route[k];
        const int w = route[k + 1];
        policy.tables[k].values.resize(Q + 1);
        detail::dp_step(inst.demands[w], Q, inst.cost[v][w], inst.cost[v][0],
                        inst.cost[0][w], inst.cost[w][0],
                        policy.tables[k + 1].values.data(),
                        policy.tables[k].values.data(), policy.restock[k].data());
    }
    const int first = route[0];
    policy.cost = inst.cost[0][first] +
                  detail::dp_expect(inst.demands[first], Q, Q, inst.cost[0][first],
                                    inst.cost[first][0], policy.tables[0].values.data());
    return policy;
}

double route_cost_or(const StochasticInstance& inst, const std::vector<int>& route) {
    check_route(inst, route);
    const int Q = inst.capacity;
    const int H = int(route.size());

    std::vector<double> table(Q + 1, inst.cost[route[H - 1]][0]);
    std::vector<double> scratch(Q + 1);
    for (int k = H - 2; k >= 0; --k) {
        const int v = route[k];
        const int w = route[k + 1];
        detail::dp_step(inst.demands[w], Q, inst.cost[v][w], inst.cost[v][0],
                        inst.cost[0][w], inst.cost[w][0], table.data(),
                        scratch.data(), nullptr);
        table.swap(scratch);
    }
    const int first = route[0];
    return inst.cost[0][first] +
           detail::dp_expect(inst.demands[first], Q, Q, inst.cost[0][first],
                             inst.cost[first][0], table.data());
}

double simulate_execution(const RoutePolicy& policy, const StochasticInstance& inst,
                          const std::vector<long>& demands) {
    const auto& route = policy.route;
    if (demands.size() != route.size())
        throw std::invalid_argument("scenario length must equal route length");
    for (long d : demands)
        if (d < 0)
            throw std::invalid_argument("negative realized demand");

    const int Q = inst.capacity;
    const int H = int(route.size());
    double cost = inst.cost[0][route[0]];
    long q = Q;
    for (int k = 0; k < H; ++k) {
        const int v = route[k];
        const long xi = demands[k];
        const int trips = trips_needed(xi, q, Q);
        cost += trips * (inst.cost[v][0] + inst.cost[0][v]);
        q += long(Q) * trips - xi;
        if (k + 1 < H) {
            const int w = route[k + 1];
            if (policy.restock[k][q]) {
                cost += inst.cost[v][0] + inst.cost[0][w];
                q = Q;
            } else {
                cost += inst.cost[v][w];
            }
        } else {
            cost += inst.cost[v][0];
        }
    }
    return cost;
}

}  // namespace sbpc
