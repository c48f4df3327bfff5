#ifndef SBPC_MASTER_HPP
#define SBPC_MASTER_HPP

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include "sbpc/instance.hpp"
#include "sbpc/lp.hpp"
#include "sbpc/mask.hpp"

namespace sbpc {

// One set-partitioning column. Artificial columns either cover a single
// customer or relax one RCC row, at a penalty cost, and carry no arcs and no
// fleet usage; they keep the RMP feasible at every node.
struct Column {
    std::vector<int> route;  // v_1..v_H for real columns
    double cost = 0.0;       // g*(theta), or the penalty for artificials
    Mask128 visits;
    bool artificial = false;
    int relief_rcc = -1;  // index into the RCC pool for relief columns

    static Column real(std::vector<int> route, double cost);
    static Column artificial_cover(int customer, double penalty);
    static Column rcc_relief(int rcc_index, double penalty);
    double load(const StochasticInstance&) const;  // sum of mean demands
};

struct RccCut {
    std::vector<int> members;  // sorted customer set S
    Mask128 mask;
    double rhs = 0.0;  // ceil(sum E[xi] / fQ)
};

struct SrcCut {
    std::array<int, 3> members{};  // sorted triplet
    Mask128 mask;
};

struct CutPool {
    std::vector<RccCut> rccs;
    std::vector<SrcCut> srcs;
    bool has_rcc(const Mask128&) const;
    bool has_src(const Mask128&) const;
};

struct DualPrices {
    std::vector<double> alpha;  // per customer, index 1..n
    double beta = 0.0;          // fleet row dual (<= 0); absent when unlimited
    bool has_beta = false;
    std::vector<double> gamma;  // per RCC (>= 0)
    std::vector<double> delta;  // per SRC (<= 0)
};

// Dual contribution zeta(theta) of Eq. (11): partition duals, fleet dual,
// RCC boundary-arc duals and SRC floor terms.
double zeta(const std::vector<int>& route, const DualPrices& duals, const CutPool& pool);

// Fractional arc flows x_ij = sum_theta a_theta^ij z_theta over (n+1)^2 arcs.
struct ArcFlows {
    int n = 0;
    std::vector<double> x;  // (n+1)*(n+1) row-major
    double at(int i, int j) const { return x[i * (n + 1) + j]; }
    double& at(int i, int j) { return x[i * (n + 1) + j]; }
};

ArcFlows arc_flows(const StochasticInstance&, const std::vector<Column>&,
                   const std::vector<double>& primal);

// Heuristic separation of rounded capacity cuts: connected components of the
// support graph at several thresholds plus greedy one-customer moves.
// Completeness is not promised.
std::vector<std::vector<int>> separate_rcc(const ArcFlows&, const StochasticInstance&);

struct SrcViolation {
    std::array<int, 3> members;
    double violation;
};

// Exact separation of 3-customer subset row cuts by full enumeration,
// sorted by violation, descending.
std::vector<SrcViolation> separate_src(const std::vector<double>& primal,
                                       const std::vector<Column>& columns, int n);

struct MasterConfig {
    double artificial_cost = 1e6;
    double src_root_threshold = 0.000075;  // relative bound increase gates
    double src_other_threshold = 0.0003;
    int max_srcs_per_round = 8;
    int src_eval_cap = 200;  // candidates examined per round
    double violation_tol = 1e-6;
    double integrality_tol = 1e-6;
};

// Columns priced out of the subproblem: route plus its reduced cost.
struct PricedColumn {
    std::vector<int> route;
    double cost = 0.0;          // g*
    double reduced_cost = 0.0;  // g* - zeta
};

using PriceFn =
    std::function<std::vector<PricedColumn>(const DualPrices&, const CutPool&)>;

struct RelaxResult {
    bool feasible = false;
    double lower_bound = 0.0;
    std::vector<double> primal;  // per master column
    ArcFlows flows;
    bool integral = false;
    DualPrices duals;
    int pricing_rounds = 0;
    int rcc_added = 0;
    int src_added = 0;
};

// Restricted master problem: set-partitioning rows, optional fleet row, cut
// rows, and the column-generation / separation loop. Artificial cover and
// relief columns are created internally; callers seed real columns only.
class RestrictedMaster {
  public:
    RestrictedMaster(const StochasticInstance& inst, std::vector<Column> real_columns,
                     CutPool pool, MasterConfig config);

    // Alternates pricing and cut separation until no negative column, violated
    // RCC, or threshold-passing SRC remains. Never decreases across calls.
    RelaxResult solve_relaxation(const PriceFn& price, bool root_node);

    // Solves the current RMP LP only (no pricing, no separation); returns
    // whether artificials are all zero and the objective value.
    std::pair<bool, double> lp_bound();

    void add_column(Column col);
    const std::vector<Column>& columns() const { return columns_; }
    const CutPool& pool() const { return pool_; }
    const StochasticInstance& instance() const { return inst_; }

    // JSON dump of columns, pools and last duals (debug interface).
    void dump_state(std::ostream&) const;

  private:
    double estimate_with_src(const SrcCut&) const;
    DualPrices extract_duals(const lp::SolveResult&) const;
    std::vector<std::pair<int, double>> lp_entries(const Column&) const;
    void append_cut_rows_for(const Column&, std::vector<std::pair<int, double>>&) const;
    int rcc_coefficient(const Column&, const RccCut&) const;

    const StochasticInstance& inst_;
    std::vector<Column> columns_;
    CutPool pool_;
    MasterConfig config_;
    lp::Solver lp_;
    std::vector<int> lp_col_of_;  // master column -> lp column
    DualPrices last_duals_;
    double best_bound_ = 0.0;
};

}  // namespace sbpc

#endif
