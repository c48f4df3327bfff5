#include "sbpc/lp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbpc::lp {

namespace {
constexpr int kLogicalBase = 1 << 28;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

struct Solver::Impl {
    Tolerances tol;

    // rows
    std::vector<Sense> sense;
    std::vector<double> rhs;
    std::vector<int> art_sign;  // +1 / -1 so the artificial starts nonnegative

    // structural columns
    std::vector<double> cost;
    std::vector<std::vector<std::pair<int, double>>> cols;

    // basis state
    enum class State { fresh, primal_feasible, dual_feasible, optimal };
    State state = State::fresh;
    std::vector<int> basis;          // variable id per row
    std::vector<char> basic_struct;  // structural membership flags
    std::vector<char> basic_logic;   // logical/artificial membership, 2 per row
    std::vector<double> binv;        // m x m row-major
    std::vector<double> xb;

    SolveResult result;
    bool result_valid = false;

    int m() const { return int(sense.size()); }
    int n() const { return int(cost.size()); }

    static bool is_struct(int id) { return id < kLogicalBase; }
    static bool is_logical(int id) { return id >= kLogicalBase && ((id - kLogicalBase) & 1) == 0; }
    static bool is_artificial(int id) { return id >= kLogicalBase && ((id - kLogicalBase) & 1) == 1; }
    static int logical_id(int row) { return kLogicalBase + 2 * row; }
    static int artificial_id(int row) { return kLogicalBase + 2 * row + 1; }
    static int row_of(int id) { return (id - kLogicalBase) / 2; }

    double logical_coef(int id) const {
        if (is_artificial(id))
            return double(art_sign[row_of(id)]);
        return sense[row_of(id)] == Sense::ge ? -1.0 : 1.0;
    }

    double phase_cost(int id, bool phase1) const {
        if (phase1)
            return is_artificial(id) ? 1.0 : 0.0;
        return is_struct(id) ? cost[id] : 0.0;
    }

    template <typename Fn>
    void for_entries(int id, Fn&& fn) const {
        if (is_struct(id)) {
            for (const auto& [r, a] : cols[id])
                fn(r, a);
        } else {
            fn(row_of(id), logical_coef(id));
        }
    }

    bool in_basis(int id) const {
        return is_struct(id) ? bool(basic_struct[id]) : bool(basic_logic[id - kLogicalBase]);
    }

    void set_in_basis(int id, bool v) {
        if (is_struct(id))
            basic_struct[id] = v;
        else
            basic_logic[id - kLogicalBase] = v;
    }

    // ---- dense linear algebra ------------------------------------------------

    // Rebuilds binv and xb from the current basis; returns false when the
    // basis matrix is numerically singular.
    bool refactorize() {
        const int mm = m();
        basic_struct.assign(n(), 0);
        basic_logic.assign(2 * mm, 0);
        for (int id : basis)
            set_in_basis(id, true);

        std::vector<double> a(mm * 2 * mm, 0.0);  // [B | I]
        for (int k = 0; k < mm; ++k)
            for_entries(basis[k], [&](int r, double v) { a[r * 2 * mm + k] = v; });
        for (int r = 0; r < mm; ++r)
            a[r * 2 * mm + mm + r] = 1.0;

        for (int c = 0; c < mm; ++c) {
            int piv = -1;
            double best = 1e-11;
            for (int r = c; r < mm; ++r)
                if (std::abs(a[r * 2 * mm + c]) > best) {
                    best = std::abs(a[r * 2 * mm + c]);
                    piv = r;
                }
            if (piv < 0)
                return false;
            if (piv != c)
                for (int j = 0; j < 2 * mm; ++j)
                    std::swap(a[piv * 2 * mm + j], a[c * 2 * mm + j]);
            const double inv = 1.0 / a[c * 2 * mm + c];
            for (int j = 0; j < 2 * mm; ++j)
                a[c * 2 * mm + j] *= inv;
            for (int r = 0; r < mm; ++r) {
                if (r == c)
                    continue;
                const double f = a[r * 2 * mm + c];
                if (f == 0.0)
                    continue;
                for (int j = 0; j < 2 * mm; ++j)
                    a[r * 2 * mm + j] -= f * a[c * 2 * mm + j];
            }
        }
        binv.assign(mm * mm, 0.0);
        for (int r = 0; r < mm; ++r)
            for (int c = 0; c < mm; ++c)
                binv[r * mm + c] = a[r * 2 * mm + mm + c];
        compute_xb();
        return true;
    }

    void compute_xb() {
        const int mm = m();
        xb.assign(mm, 0.0);
        for (int r = 0; r < mm; ++r) {
            double v = 0.0;
            for (int c = 0; c < mm; ++c)
                v += binv[r * mm + c] * rhs[c];
            xb[r] = v;
        }
    }

    std::vector<double> compute_y(bool phase1) const {
        const int mm = m();
        std::vector<double> y(mm, 0.0);
        for (int r = 0; r < mm; ++r) {
            const double cb = phase_cost(basis[r], phase1);
            if (cb == 0.0)
                continue;
            for (int c = 0; c < mm; ++c)
                y[c] += cb * binv[r * mm + c];
        }
        return y;
    }

    double reduced_cost(int id, const std::vector<double>& y, bool phase1) const {
        double d = phase_cost(id, phase1);
        for_entries(id, [&](int r, double a) { d -= y[r] * a; });
        return d;
    }

    std::vector<double> ftran(int id) const {
        const int mm = m();
        std::vector<double> u(mm, 0.0);
        for_entries(id, [&](int r, double a) {
            for (int i = 0; i < mm; ++i)
                u[i] += binv[i * mm + r] * a;
        });
        return u;
    }

    void pivot(int leave_row, int enter_id, const std::vector<double>& u) {
        const int mm = m();
        set_in_basis(basis[leave_row], false);
        basis[leave_row] = enter_id;
        set_in_basis(enter_id, true);

        const double inv = 1.0 / u[leave_row];
        double* rowr = &binv[leave_row * mm];
        for (int c = 0; c < mm; ++c)
            rowr[c] *= inv;
        for (int i = 0; i < mm; ++i) {
            if (i == leave_row)
                continue;
            const double f = u[i];
            if (f == 0.0)
                continue;
            double* rowi = &binv[i * mm];
            for (int c = 0; c < mm; ++c)
                rowi[c] -= f * rowr[c];
        }
        const double t = xb[leave_row] * inv;
        for (int i = 0; i < mm; ++i)
            if (i != leave_row)
                xb[i] -= u[i] * t;
        xb[leave_row] = t;
    }

    // ---- candidate enumeration ----------------------------------------------

    template <typename Fn>
    void for_candidates(Fn&& fn) const {
        for (int j = 0; j < n(); ++j)
            if (!basic_struct[j])
                fn(j);
        for (int r = 0; r < m(); ++r) {
            if (sense[r] != Sense::eq) {
                int id = logical_id(r);
                if (!in_basis(id))
                    fn(id);
            }
            // artificials never re-enter
        }
    }

    double phase_objective(bool phase1) const {
        double obj = 0.0;
        for (int r = 0; r < m(); ++r)
            obj += phase_cost(basis[r], phase1) * xb[r];
        return obj;
    }

    // ---- primal simplex ------------------------------------------------------

    enum class PhaseOutcome { optimal, unbounded };

    PhaseOutcome primal_simplex(bool phase1) {
        const int mm = m();
        bool bland = false;
        int stall = 0;
        long iter = 0;
        const long cap = 200000 + 200L * (mm + n());
        double prev_obj = phase_objective(phase1);
        int since_refactor = 0;

        for (;;) {
            if (++iter > cap)
                throw std::runtime_error("simplex: iteration cap exceeded");
            const auto y = compute_y(phase1);
            int enter = -1;
            double best = -tol.optimality;
            bool stop = false;
            for_candidates([&](int id) {
                if (stop)
                    return;
                const double d = reduced_cost(id, y, phase1);
                if (bland) {
                    if (d < -tol.optimality) {
                        enter = id;
                        stop = true;
                    }
                } else if (d < best) {
                    best = d;
                    enter = id;
                }
            });
            if (enter < 0)
                return PhaseOutcome::optimal;

            auto u = ftran(enter);
            int leave = -1;
            double best_t = kInf, best_piv = 0.0;
            for (int i = 0; i < mm; ++i) {
                if (u[i] <= tol.pivot)
                    continue;
                const double t = std::max(xb[i], 0.0) / u[i];
                bool take = false;
                if (t < best_t - 1e-12) {
                    take = true;
                } else if (t <= best_t + 1e-12) {
                    if (bland) {
                        take = leave >= 0 && basis[i] < basis[leave];
                    } else if (is_artificial(basis[i]) && !is_artificial(basis[leave])) {
                        take = true;  // drive artificials out first
                    } else if (std::abs(u[i]) > best_piv) {
                        take = true;
                    }
                }
                if (take) {
                    best_t = std::min(best_t, t);
                    best_piv = std::abs(u[i]);
                    leave = i;
                }
            }
            if (leave < 0) {
                if (phase1) {
                    // phase 1 is bounded below; treat as numerical trouble
                    if (!refactorize())
                        throw std::runtime_error("simplex: singular basis in phase 1");
                    continue;
                }
                return PhaseOutcome::unbounded;
            }
            pivot(leave, enter, u);

            if (++since_refactor >= 128) {
                since_refactor = 0;
                refactorize();
            }
            const double obj = phase_objective(phase1);
            if (obj < prev_obj - 1e-12 * (1.0 + std::abs(prev_obj))) {
                stall = 0;
                bland = false;
            } else if (++stall > 10 * std::max(1, mm)) {
                bland = true;
            }
            prev_obj = obj;
        }
    }

    // ---- dual simplex --------------------------------------------------------

    // Requires dual feasibility; returns false if primal infeasibility is proven.
    bool dual_simplex() {
        const int mm = m();
        long iter = 0;
        const long cap = 200000 + 200L * (mm + n());
        for (;;) {
            if (++iter > cap)
                throw std::runtime_error("simplex: dual iteration cap exceeded");
            int r = -1;
            double most = -tol.feasibility;
            for (int i = 0; i < mm; ++i)
                if (xb[i] < most) {
                    most = xb[i];
                    r = i;
                }
            if (r < 0)
                return true;

            const auto y = compute_y(false);
            const double* rho = &binv[r * mm];
            int enter = -1;
            double best_ratio = kInf, best_alpha = 0.0;
            for_candidates([&](int id) {
                double alpha = 0.0;
                for_entries(id, [&](int rr, double a) { alpha += rho[rr] * a; });
                if (alpha >= -tol.pivot)
                    return;
                double d = std::max(0.0, reduced_cost(id, y, false));
                const double ratio = d / (-alpha);
                if (ratio < best_ratio - 1e-12 ||
                    (ratio <= best_ratio + 1e-12 && std::abs(alpha) > best_alpha)) {
                    best_ratio = std::min(ratio, best_ratio);
                    best_alpha = std::abs(alpha);
                    enter = id;
                }
            });
            if (enter < 0)
                return false;
            auto u = ftran(enter);
            if (std::abs(u[r]) <= tol.pivot) {
                if (!refactorize())
                    throw std::runtime_error("simplex: singular basis in dual step");
                continue;
            }
            pivot(r, enter, u);
        }
    }

    // ---- orchestration -------------------------------------------------------

    void crash_basis() {
        const int mm = m();
        basis.resize(mm);
        for (int r = 0; r < mm; ++r) {
            const double b = rhs[r];
            if (sense[r] == Sense::le && b >= 0.0)
                basis[r] = logical_id(r);
            else if (sense[r] == Sense::ge && b <= 0.0)
                basis[r] = logical_id(r);
            else
                basis[r] = artificial_id(r);
        }
    }

    bool artificials_active() const {
        for (int r = 0; r < m(); ++r)
            if (is_artificial(basis[r]) && std::abs(xb[r]) > tol.feasibility)
                return true;
        return false;
    }

    // After phase 1: pivot zero-valued artificials out where possible.
    void drive_out_artificials() {
        const int mm = m();
        for (int r = 0; r < mm; ++r) {
            if (!is_artificial(basis[r]))
                continue;
            const double* rho = &binv[r * mm];
            int found = -1;
            for_candidates([&](int id) {
                if (found >= 0)
                    return;
                double alpha = 0.0;
                for_entries(id, [&](int rr, double a) { alpha += rho[rr] * a; });
                if (std::abs(alpha) > 1e-7)
                    found = id;
            });
            if (found >= 0) {
                auto u = ftran(found);
                pivot(r, found, u);
            }
        }
    }

    void extract_result(Status status) {
        result = SolveResult{};
        result.status = status;
        if (status != Status::optimal) {
            result_valid = true;
            return;
        }
        result.primal.assign(n(), 0.0);
        for (int r = 0; r < m(); ++r)
            if (is_struct(basis[r]))
                result.primal[basis[r]] = std::abs(xb[r]) < 1e-11 ? 0.0 : xb[r];
        double obj = 0.0;
        for (int j = 0; j < n(); ++j)
            obj += cost[j] * result.primal[j];
        result.objective = obj;
        result.duals = compute_y(false);
        for (int r = 0; r < m(); ++r) {
            // snap epsilon violations of the sign convention
            if (sense[r] == Sense::le && result.duals[r] > 0.0 && result.duals[r] < 1e-7)
                result.duals[r] = 0.0;
            if (sense[r] == Sense::ge && result.duals[r] < 0.0 && result.duals[r] > -1e-7)
                result.duals[r] = 0.0;
        }
        result_valid = true;
    }

    const SolveResult& run() {
        if (state == State::optimal && result_valid)
            return result;
        if (m() == 0) {
            // No rows: every column at lower bound is optimal (costs >= 0 not
            // required; negative costs make it unbounded only with no rows to
            // block, but columns here are always nonnegative-bounded at 0).
            bool unbounded = false;
            for (double c : cost)
                if (c < 0.0)
                    unbounded = true;
            basis.clear();
            extract_result(unbounded ? Status::unbounded : Status::optimal);
            state = State::optimal;
            return result;
        }

        bool fresh = state == State::fresh;
        if (!fresh && int(basis.size()) != m())
            fresh = true;
        if (fresh) {
            crash_basis();
            if (!refactorize()) {
                // should not happen with the crash basis
                throw std::runtime_error("simplex: singular crash basis");
            }
        } else if (!refactorize()) {
            crash_basis();
            refactorize();
            fresh = true;
        }

        if (!fresh) {
            double worst = 0.0;
            for (double v : xb)
                worst = std::min(worst, v);
            if (worst < -tol.feasibility) {
                if (state == State::dual_feasible) {
                    if (!dual_simplex()) {
                        extract_result(Status::infeasible);
                        state = State::fresh;  // basis unusable for warm starts
                        return result;
                    }
                } else {
                    // warm basis went primal infeasible without dual feasibility
                    crash_basis();
                    refactorize();
                    fresh = true;
                }
            }
        }

        if (artificials_active()) {
            primal_simplex(true);
            if (phase_objective(true) > tol.feasibility * (1.0 + double(m()))) {
                extract_result(Status::infeasible);
                state = State::fresh;
                return result;
            }
            drive_out_artificials();
        }

        auto outcome = primal_simplex(false);
        if (outcome == PhaseOutcome::unbounded) {
            extract_result(Status::unbounded);
            state = State::fresh;
            return result;
        }

        // Validate primal feasibility; refactor and repeat once on drift.
        for (int attempt = 0; attempt < 2; ++attempt) {
            refactorize();
            double worst = 0.0;
            for (double v : xb)
                worst = std::min(worst, v);
            if (worst >= -1e-7)
                break;
            if (!dual_simplex()) {
                extract_result(Status::infeasible);
                state = State::fresh;
                return result;
            }
            primal_simplex(false);
        }

        extract_result(Status::optimal);
        state = State::optimal;
        return result;
    }
};

Solver::Solver(Tolerances tol) : impl_(new Impl) { impl_->tol = tol; }
Solver::~Solver() { delete impl_; }
Solver::Solver(Solver&& o) noexcept : impl_(o.impl_) { o.impl_ = nullptr; }
Solver& Solver::operator=(Solver&& o) noexcept {
    std::swap(impl_, o.impl_);
    return *this;
}

int Solver::add_row(Sense sense, double rhs,
                    const std::vector<std::pair<int, double>>& col_entries) {
    auto& s = *impl_;
    const int r = s.m();
    s.sense.push_back(sense);
    s.rhs.push_back(rhs);
    s.art_sign.push_back(rhs >= 0.0 ? 1 : -1);
    s.result_valid = false;
    for (const auto& [j, a] : col_entries) {
        if (j < 0 || j >= s.n())
            throw std::invalid_argument("lp: row entry references an unknown column");
        s.cols[j].push_back({r, a});
    }
    if (s.state == Impl::State::fresh || sense == Sense::eq) {
        s.state = Impl::State::fresh;
        return r;
    }
    // extend the basis with the new row's logical; duals stay feasible
    s.basis.push_back(Impl::logical_id(r));
    s.state = s.state == Impl::State::optimal || s.state == Impl::State::dual_feasible
                  ? Impl::State::dual_feasible
                  : Impl::State::fresh;
    return r;
}

int Solver::add_column(double cost, const std::vector<std::pair<int, double>>& entries) {
    auto& s = *impl_;
    const int j = s.n();
    for (const auto& [r, a] : entries) {
        if (r < 0 || r >= s.m())
            throw std::invalid_argument("lp: column entry references an unknown row");
        (void)a;
    }
    s.cost.push_back(cost);
    s.cols.push_back(entries);
    s.result_valid = false;
    if (s.state == Impl::State::optimal)
        s.state = Impl::State::primal_feasible;
    else if (s.state == Impl::State::dual_feasible)
        s.state = Impl::State::fresh;  // a new column may break dual feasibility
    return j;
}

int Solver::num_rows() const { return impl_->m(); }
int Solver::num_cols() const { return impl_->n(); }

const SolveResult& Solver::solve() { return impl_->run(); }
const SolveResult& Solver::result() const { return impl_->result; }

std::vector<int> Solver::basis_token() const { return impl_->basis; }

void Solver::load_basis_token(const std::vector<int>& token, bool dual_feasible) {
    auto& s = *impl_;
    if (int(token.size()) != s.m())
        throw std::invalid_argument("lp: basis token size mismatch");
    s.basis = token;
    s.state = dual_feasible ? Impl::State::dual_feasible : Impl::State::primal_feasible;
    s.result_valid = false;
    if (!s.refactorize())
        s.state = Impl::State::fresh;
}

void Solver::write_lp(std::ostream& out) const {
    const auto& s = *impl_;
    out << "\\ sbpc RMP export\nMinimize\n obj:";
    for (int j = 0; j < s.n(); ++j) {
        if (s.cost[j] == 0.0)
            continue;
        out << (s.cost[j] >= 0 ? " + " : " - ") << std::abs(s.cost[j]) << " x" << j;
    }
    out << "\nSubject To\n";
    for (int r = 0; r < s.m(); ++r) {
        out << " r" << r << ":";
        for (int j = 0; j < s.n(); ++j)
            for (const auto& [rr, a] : s.cols[j])
                if (rr == r && a != 0.0)
                    out << (a >= 0 ? " + " : " - ") << std::abs(a) << " x" << j;
        const char* op = s.sense[r] == Sense::eq ? "=" : s.sense[r] == Sense::le ? "<=" : ">=";
        out << " " << op << " " << s.rhs[r] << "\n";
    }
    out << "Bounds\n";
    for (int j = 0; j < s.n(); ++j)
        out << " 0 <= x" << j << "\n";
    out << "End\n";
}

SolveResult solve_lp(const LinearProgramInstance& lp, const std::vector<int>* warm_basis,
                     Tolerances tol) {
    if (lp.senses.size() != lp.rhs.size() || lp.objective.size() != lp.columns.size())
        throw std::invalid_argument("lp: malformed LinearProgramInstance");
    Solver solver(tol);
    for (std::size_t r = 0; r < lp.senses.size(); ++r)
        solver.add_row(lp.senses[r], lp.rhs[r]);
    for (std::size_t j = 0; j < lp.columns.size(); ++j)
        solver.add_column(lp.objective[j], lp.columns[j]);
    if (warm_basis)
        solver.load_basis_token(*warm_basis);
    return solver.solve();
}

}  // namespace sbpc::lp
