#ifndef SBPC_RESTOCKING_HPP
#define SBPC_RESTOCKING_HPP

#include <cstdint>
#include <vector>

#include "sbpc/instance.hpp"

namespace sbpc {

// Expected cost-to-go indexed by residual capacity q = 0..Q.
struct CostToGoTable {
    std::vector<double> values;
};

// Route together with the full restocking policy: one cost-to-go table per
// position and, for every interior position and residual capacity, whether a
// preventive replenishment strictly beats continuing directly. Ties favor no
// restock.
struct RoutePolicy {
    std::vector<int> route;                          // v_1..v_H
    std::vector<CostToGoTable> tables;               // tables[k] = cost-to-go after route[k]
    std::vector<std::vector<std::uint8_t>> restock;  // restock[k][q], k < H-1
    double cost = 0.0;                               // g*
};

// Number of replenishment trips forced when serving demand `xi` with residual
// capacity `q`: max(0, ceil((xi - q) / Q)).
int trips_needed(long xi, long q, int Q);

namespace detail {

// One backward step of the optimal-restocking dynamic program. Customer j is
// served next; `next` is the post-j cost-to-go over q = 0..Q. Writes
// out[q] = min(phi'(prev,j,q,next), phi''(prev,j,next)) for all q. When
// `restock` is non-null it records where phi'' strictly wins and the whole
// range is evaluated; otherwise the loop stops early once the replenish branch
// takes over (valid whenever arc costs satisfy the triangle inequality).
// Returns phi''.
double dp_step(const DemandDistribution& dj, int Q, double c_prev_j,
               double c_prev_0, double c_0j, double c_j0, const double* next,
               double* out, std::uint8_t* restock);

// E[Upsilon_xi^q * (c_j0 + c_0j) + next(q + Q*Upsilon - xi)] for a given q.
double dp_expect(const DemandDistribution& dj, int Q, int q, double c_0j,
                 double c_j0, const double* next);

}  // namespace detail

RoutePolicy build_policy(const StochasticInstance& inst, const std::vector<int>& route);

// g*(theta) without storing the policy.
double route_cost_or(const StochasticInstance& inst, const std::vector<int>& route);

// Executes the policy on one realized-demand scenario and returns the cost.
double simulate_execution(const RoutePolicy& policy, const StochasticInstance& inst,
                          const std::vector<long>& demands);

}  // namespace sbpc

#endif
