#ifndef SBPC_BNB_HPP
#define SBPC_BNB_HPP

#include <iosfwd>
#include <limits>
#include <utility>
#include <vector>

#include "sbpc/instance.hpp"
#include "sbpc/master.hpp"
#include "sbpc/pricing.hpp"

namespace sbpc {

struct BnbConfig {
    double time_limit_seconds = 600.0 * 60.0;  // mirrors the tables' budget
    PricingConfig pricing;
    MasterConfig master;
    int branch_candidates = 10;  // K most fractional arcs evaluated
    double integrality_tol = 1e-6;
    double optimality_tol = 1e-6;
    int workers = 0;
    std::ostream* log = nullptr;  // progress lines when set
};

struct Incumbent {
    std::vector<std::vector<int>> routes;
    double objective = std::numeric_limits<double>::infinity();
    bool feasible = false;
};

struct BnbStats {
    long nodes = 0;
    int rcc_count = 0;
    int src_count = 0;
    long columns = 0;
    double runtime_seconds = 0.0;
};

struct BnbResult {
    Incumbent incumbent;
    double lower_bound = 0.0;
    double gap = 0.0;  // (UB - LB) / UB when not proven
    bool proven = false;
    bool timed_out = false;
    bool infeasible = false;
    BnbStats stats;
};

// Rotational sweep heuristic evaluated under optimal restocking; used for the
// initial incumbent and the artificial-column cost scale.
Incumbent greedy_sweep(const StochasticInstance&);

// Among the K most fractional arcs, picks the one whose worse child keeps the
// highest restricted-LP bound; ties break lexicographically.
std::pair<int, int> select_branch_arc(const StochasticInstance&,
                                      const std::vector<Column>& columns,
                                      const CutPool& pool, const ArcFlows& flows,
                                      const std::vector<std::pair<int, int>>& forced,
                                      const std::vector<std::pair<int, int>>& banned,
                                      const MasterConfig&, int k_candidates,
                                      int workers);

BnbResult solve(const StochasticInstance&, const BnbConfig& config = {});

}  // namespace sbpc

#endif
