#ifndef SBPC_PRICING_HPP
#define SBPC_PRICING_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sbpc/instance.hpp"
#include "sbpc/mask.hpp"
#include "sbpc/master.hpp"

namespace sbpc {

// Branching state of a node, normalized to a forbidden-arc matrix. Forcing an
// arc (i,j) forbids every competing arc out of i and into j; depot arcs keep
// their multiplicity (several routes may leave or enter the depot).
struct ArcRules {
    int n = 0;
    std::vector<char> forbidden;  // (n+1)^2 row-major

    static ArcRules none(int n);
    static ArcRules from_branching(int n, const std::vector<std::pair<int, int>>& forced,
                                   const std::vector<std::pair<int, int>>& banned);

    bool arc_forbidden(int i, int j) const { return forbidden[i * (n + 1) + j]; }
    bool can_start_route(int j) const { return !arc_forbidden(0, j); }
    bool can_end_route(int i) const { return !arc_forbidden(i, 0); }
    // true when the column 0 -> route -> 0 uses no forbidden arc
    bool allows_route(const std::vector<int>& route) const;
};

struct PricingConfig {
    int max_columns = 200;
    bool use_knapsack = false;       // knapsack completion bound (off by default)
    int m_size = 8;                  // |M| for the RCSP bound
    double rc_eps = 1e-6;            // "negative" reduced-cost cutoff
    bool aggressive = false;         // also prune against best-found/4
    std::size_t max_wave_labels = 2000000;
    int workers = 0;                 // 0 = all available
};

struct PricingStats {
    long labels_created = 0;
    long labels_pruned_pre = 0;   // skipped before the extension was built
    long labels_pruned_rcsp = 0;
    long labels_pruned_kp = 0;
    long columns_emitted = 0;
    long waves = 0;
};

// Per-arc dual gain sigma_ij = alpha_j + sum over RCCs S with i in S, j not in
// S of gamma_S, recomputed from the current duals each pricing round.
struct SigmaTable {
    int n = 0;
    std::vector<double> sigma;      // (n+1)^2; arcs into customers only
    std::vector<double> gamma_arc;  // RCC part alone
    double at(int i, int j) const { return sigma[i * (n + 1) + j]; }
    double gamma_at(int i, int j) const { return gamma_arc[i * (n + 1) + j]; }
};

SigmaTable build_sigma(const StochasticInstance&, const DualPrices&, const CutPool&);

// Backward label: partial path from `v` to the depot with its cost-to-go
// table, remaining expected-load budget and accumulated dual contribution.
struct Label {
    std::vector<int> theta;   // v = theta.front()
    int v = 0;
    double q = 0.0;           // fQ - sum of mean demands
    double zeta_acc = 0.0;
    double gstar = 0.0;       // phi'(0, v, Q, phi)
    Mask128 visits;
    std::vector<double> phi;  // over residual capacity 0..Q
};

// RCSP completion-bound tables: for every subset S of M (indexed by bitmask
// over the sorted members of M), minimum modified-cost path values
// rcsp[S][q][i] from the depot to customer i with capacity budget q.
struct RcspTables {
    std::vector<int> m_set;        // sorted members of M
    int grid = 0;                  // capacity grid = floor(fQ)
    int n = 0;
    std::vector<std::vector<double>> values;  // [subset][(grid+1)*(n+1)]
    double at(int subset, int q, int i) const { return values[subset][q * (n + 1) + i]; }
    int subset_of(const Mask128& visits) const;
};

// Exposed for tests; `price` drives them internally.
Label init_label(const StochasticInstance&, int customer, const DualPrices&,
                 const CutPool&, const SigmaTable&);
Label extend_label(const Label&, int customer, const StochasticInstance&,
                   const DualPrices&, const CutPool&, const SigmaTable&);
double knapsack_bound(const Label&, const SigmaTable&, const StochasticInstance&);
RcspTables rcsp_tables(const StochasticInstance&, const SigmaTable&,
                       const std::vector<int>& m_set, const ArcRules&, int workers);
RcspTables rcsp_tables_serial(const StochasticInstance&, const SigmaTable&,
                              const std::vector<int>& m_set, const ArcRules&);
double rcsp_bound(const Label&, const StochasticInstance&, const DualPrices&,
                  const RcspTables&);
std::vector<int> select_m_set(const StochasticInstance&, const DualPrices&, int m_size);

// Exhaustive elementary pricing with completion bounds. Returns up to
// max_columns best columns with reduced cost below -rc_eps; returns an empty
// list only when no negative elementary route exists under the arc rules.
// Results are independent of the worker count.
std::vector<PricedColumn> price(const StochasticInstance&, const DualPrices&,
                                const CutPool&, const ArcRules&, const PricingConfig&,
                                PricingStats* stats = nullptr);

}  // namespace sbpc

#endif
