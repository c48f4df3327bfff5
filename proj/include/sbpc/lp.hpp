#ifndef SBPC_LP_HPP
#define SBPC_LP_HPP

#include <iosfwd>
#include <utility>
#include <vector>

namespace sbpc::lp {

enum class Sense : char { eq, le, ge };
enum class Status { optimal, infeasible, unbounded };

// Token id of a row's slack/surplus variable (for warm-start tokens).
inline int logical_token(int row) { return (1 << 28) + 2 * row; }

struct Tolerances {
    double feasibility = 1e-9;
    double optimality = 1e-9;
    double pivot = 1e-9;
};

struct SolveResult {
    Status status = Status::optimal;
    double objective = 0.0;
    std::vector<double> primal;  // structural columns only
    std::vector<double> duals;   // per row; minimization convention
};

// Plain data form of a linear program, columns as sparse (row, coef) lists.
struct LinearProgramInstance {
    std::vector<double> objective;
    std::vector<std::vector<std::pair<int, double>>> columns;
    std::vector<Sense> senses;
    std::vector<double> rhs;
};

// Incremental bounded revised simplex over variables x >= 0, minimization.
// Dense basis inverse; row additions warm-start through dual simplex, column
// additions through primal simplex. Degenerate stalls fall back to Bland's
// rule after 10*rows non-improving iterations.
class Solver {
  public:
    explicit Solver(Tolerances tol = {});
    ~Solver();
    Solver(Solver&&) noexcept;
    Solver& operator=(Solver&&) noexcept;
    Solver(const Solver&) = delete;
    Solver& operator=(const Solver&) = delete;

    // `col_entries` holds (column, coefficient) pairs of existing columns that
    // participate in the new row (how cut rows join a running master problem).
    int add_row(Sense sense, double rhs,
                const std::vector<std::pair<int, double>>& col_entries = {});
    int add_column(double cost, const std::vector<std::pair<int, double>>& entries);

    int num_rows() const;
    int num_cols() const;

    const SolveResult& solve();
    const SolveResult& result() const;

    // Basis token for external warm starts (variable id per row). Pass
    // dual_feasible=true when the token comes from an optimal basis of the
    // same LP extended by new rows; the solve then warm-starts dually.
    std::vector<int> basis_token() const;
    void load_basis_token(const std::vector<int>& token, bool dual_feasible = false);

    // Industry-standard LP text export for offline debugging.
    void write_lp(std::ostream& out) const;

  private:
    struct Impl;
    Impl* impl_;
};

SolveResult solve_lp(const LinearProgramInstance& lp,
                     const std::vector<int>* warm_basis = nullptr,
                     Tolerances tol = {});

}  // namespace sbpc::lp

#endif
