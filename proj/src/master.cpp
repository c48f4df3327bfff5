#include "sbpc/master.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace sbpc {

Column Column::real(std::vector<int> route, double cost) {
    Column c;
    c.route = std::move(route);
    c.cost = cost;
    for (int v : c.route)
        c.visits.set(v);
    return c;
}

Column Column::artificial_cover(int customer, double penalty) {
    Column c;
    c.route = {customer};
    c.cost = penalty;
    c.visits.set(customer);
    c.artificial = true;
    return c;
}

Column Column::rcc_relief(int rcc_index, double penalty) {
    Column c;
    c.cost = penalty;
    c.artificial = true;
    c.relief_rcc = rcc_index;
    return c;
}

double Column::load(const StochasticInstance& inst) const {
    double total = 0.0;
    for (int v : route)
        total += inst.mean_demand(v);
    return total;
}

bool CutPool::has_rcc(const Mask128& mask) const {
    for (const auto& c : rccs)
        if (c.mask == mask)
            return true;
    return false;
}

bool CutPool::has_src(const Mask128& mask) const {
    for (const auto& c : srcs)
        if (c.mask == mask)
            return true;
    return false;
}

double zeta(const std::vector<int>& route, const DualPrices& duals, const CutPool& pool) {
    double z = 0.0;
    for (int v : route)
        z += duals.alpha[v];
    if (duals.has_beta)
        z += duals.beta;
    Mask128 visits;
    for (int v : route)
        visits.set(v);
    for (std::size_t k = 0; k < pool.rccs.size(); ++k) {
        const double g = duals.gamma[k];
        if (g == 0.0)
            continue;
        const auto& mask = pool.rccs[k].mask;
        int prev = 0;
        int exits = 0;
        for (int v : route) {
            if (mask.test(prev) && !mask.test(v))
                ++exits;
            prev = v;
        }
        if (mask.test(prev))
            ++exits;  // closing arc back to the depot
        z += exits * g;
    }
    for (std::size_t k = 0; k < pool.srcs.size(); ++k) {
        const double d = duals.delta[k];
        if (d == 0.0)
            continue;
        z += (visits.count_and(pool.srcs[k].mask) / 2) * d;
    }
    return z;
}

ArcFlows arc_flows(const StochasticInstance& inst, const std::vector<Column>& columns,
                   const std::vector<double>& primal) {
    ArcFlows f;
    f.n = inst.n;
    f.x.assign((inst.n + 1) * (inst.n + 1), 0.0);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const double z = primal[c];
        if (z <= 1e-12 || columns[c].artificial)
            continue;
        int prev = 0;
        for (int v : columns[c].route) {
            f.at(prev, v) += z;
            prev = v;
        }
        f.at(prev, 0) += z;
    }
    return f;
}

namespace {

double rcc_rhs(const StochasticInstance& inst, const std::vector<int>& members) {
    double load = 0.0;
    for (int v : members)
        load += inst.mean_demand(v);
    return std::ceil(load / inst.load_limit() - 1e-9);
}

struct RccCandidate {
    std::vector<int> members;
    double violation;
};

double outflow(const ArcFlows& f, const std::vector<char>& in_set, int n) {
    double total = 0.0;
    for (int i = 1; i <= n; ++i) {
        if (!in_set[i])
            continue;
        for (int j = 0; j <= n; ++j)
            if (!in_set[j] && j != i)
                total += f.at(i, j);
    }
    return total;
}

}  // namespace

std::vector<std::vector<int>> separate_rcc(const ArcFlows& flows,
                                           const StochasticInstance& inst) {
    const int n = inst.n;
    const double tol = 1e-6;
    std::vector<std::vector<int>> raw_candidates;

    // connected components of the support graph at multiple thresholds
    for (double tau : {0.01, 0.05, 0.15, 0.35, 0.5}) {
        std::vector<int> comp(n + 1, -1);
        int ncomp = 0;
        for (int start = 1; start <= n; ++start) {
            if (comp[start] >= 0)
                continue;
            std::vector<int> stack{start};
            comp[start] = ncomp;
            while (!stack.empty()) {
                int i = stack.back();
                stack.pop_back();
                for (int j = 1; j <= n; ++j) {
                    if (j == i || comp[j] >= 0)
                        continue;
                    if (flows.at(i, j) + flows.at(j, i) >= tau) {
                        comp[j] = ncomp;
                        stack.push_back(j);
                    }
                }
            }
            ++ncomp;
        }
        std::vector<std::vector<int>> sets(ncomp);
        for (int i = 1; i <= n; ++i)
            sets[comp[i]].push_back(i);
        for (auto& s : sets)
            if (!s.empty())
                raw_candidates.push_back(std::move(s));
    }
    {
        std::vector<int> all;
        for (int i = 1; i <= n; ++i)
            all.push_back(i);
        raw_candidates.push_back(std::move(all));
    }

    std::vector<RccCandidate> results;
    auto consider = [&](const std::vector<char>& in_set) {
        std::vector<int> members;
        double load = 0.0;
        for (int i = 1; i <= n; ++i)
            if (in_set[i]) {
                members.push_back(i);
                load += inst.mean_demand(i);
            }
        if (members.empty())
            return;
        double rhs = std::ceil(load / inst.load_limit() - 1e-9);
        double v = rhs - outflow(flows, in_set, n);
        if (v > tol)
            results.push_back({std::move(members), v});
    };

    for (const auto& cand : raw_candidates) {
        std::vector<char> in_set(n + 1, 0);
        double load = 0.0;
        int set_size = 0;
        for (int v : cand) {
            in_set[v] = 1;
            load += inst.mean_demand(v);
            ++set_size;
        }
        consider(in_set);
        double out_now = outflow(flows, in_set, n);
        double best = std::ceil(load / inst.load_limit() - 1e-9) - out_now;

        // greedy single-customer add/remove improvement, incremental deltas
        auto toggled_outflow = [&](int i) {
            // outflow after flipping membership of customer i
            double delta = 0.0;
            if (!in_set[i]) {
                for (int k = 0; k <= n; ++k) {
                    if (k == i)
                        continue;
                    if (in_set[k])
                        delta -= flows.at(k, i);  // arcs into i stop leaving S
                    else
                        delta += flows.at(i, k);  // arcs out of i start leaving S
                }
            } else {
                for (int k = 0; k <= n; ++k) {
                    if (k == i)
                        continue;
                    if (in_set[k] && k >= 1)
                        delta += flows.at(k, i);
                    else
                        delta -= flows.at(i, k);
                }
            }
            return out_now + delta;
        };
        for (int pass = 0; pass < 30; ++pass) {
            int best_move = 0;
            double best_value = best + 1e-9, best_outflow = 0.0, best_load = 0.0;
            for (int i = 1; i <= n; ++i) {
                if (!in_set[i] && set_size == n)
                    continue;
                if (in_set[i] && set_size == 1)
                    continue;
                const double new_load =
                    load + (in_set[i] ? -inst.mean_demand(i) : inst.mean_demand(i));
                const double new_out = toggled_outflow(i);
                const double v =
                    std::ceil(new_load / inst.load_limit() - 1e-9) - new_out;
                if (v > best_value) {
                    best_value = v;
                    best_move = i;
                    best_outflow = new_out;
                    best_load = new_load;
                }
            }
            if (best_move == 0)
                break;
            set_size += in_set[best_move] ? -1 : 1;
            in_set[best_move] ^= 1;
            load = best_load;
            out_now = best_outflow;
            best = best_value;
            consider(in_set);
        }
    }

    // dedupe, keep the most violated first, lexicographic members on ties
    std::sort(results.begin(), results.end(), [](const RccCandidate& a, const RccCandidate& b) {
        if (a.violation != b.violation)
            return a.violation > b.violation;
        return a.members < b.members;
    });
    std::vector<std::vector<int>> out;
    for (auto& r : results) {
        bool dup = false;
        for (const auto& o : out)
            if (o == r.members)
                dup = true;
        if (!dup)
            out.push_back(std::move(r.members));
    }
    return out;
}

std::vector<SrcViolation> separate_src(const std::vector<double>& primal,
                                       const std::vector<Column>& columns, int n) {
    std::vector<double> pair_w((n + 1) * (n + 1), 0.0);
    std::unordered_map<std::uint64_t, double> triple_w;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const double z = primal[c];
        if (z <= 1e-9 || columns[c].artificial)
            continue;
        std::vector<int> r = columns[c].route;
        std::sort(r.begin(), r.end());
        for (std::size_t a = 0; a < r.size(); ++a)
            for (std::size_t b = a + 1; b < r.size(); ++b) {
                pair_w[r[a] * (n + 1) + r[b]] += z;
                for (std::size_t d = b + 1; d < r.size(); ++d) {
                    std::uint64_t key = (std::uint64_t(r[a]) << 32) |
                                        (std::uint64_t(r[b]) << 16) | std::uint64_t(r[d]);
                    triple_w[key] += z;
                }
            }
    }
    std::vector<SrcViolation> out;
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            for (int k = j + 1; k <= n; ++k) {
                double lhs = pair_w[i * (n + 1) + j] + pair_w[i * (n + 1) + k] +
                             pair_w[j * (n + 1) + k];
                if (lhs <= 1.0 + 1e-6)
                    continue;
                auto it = triple_w.find((std::uint64_t(i) << 32) | (std::uint64_t(j) << 16) |
                                        std::uint64_t(k));
                if (it != triple_w.end())
                    lhs -= 2.0 * it->second;
                if (lhs > 1.0 + 1e-6)
                    out.push_back({{i, j, k}, lhs - 1.0});
            }
    std::sort(out.begin(), out.end(), [](const SrcViolation& a, const SrcViolation& b) {
        if (a.violation != b.violation)
            return a.violation > b.violation;
        return a.members < b.members;
    });
    return out;
}

RestrictedMaster::RestrictedMaster(const StochasticInstance& inst,
                                   std::vector<Column> real_columns, CutPool pool,
                                   MasterConfig config)
    : inst_(inst), pool_(std::move(pool)), config_(config) {
    if (inst.n > 127)
        throw std::invalid_argument("master: instances above 127 customers are unsupported");
    // rows: customers, then the fleet row when the fleet is fixed, then cuts
    for (int i = 1; i <= inst.n; ++i)
        lp_.add_row(lp::Sense::eq, 1.0);
    if (!inst.unlimited_fleet())
        lp_.add_row(lp::Sense::le, double(inst.fleet));
    for (const auto& c : pool_.rccs)
        lp_.add_row(lp::Sense::ge, c.rhs);
    for (const auto& c : pool_.srcs) {
        (void)c;
        lp_.add_row(lp::Sense::le, 1.0);
    }
    for (int i = 1; i <= inst.n; ++i)
        add_column(Column::artificial_cover(i, config_.artificial_cost));
    for (int k = 0; k < int(pool_.rccs.size()); ++k)
        add_column(Column::rcc_relief(k, config_.artificial_cost));
    for (auto& c : real_columns) {
        if (c.artificial)
            throw std::invalid_argument("master: seed columns must be real routes");
        add_column(std::move(c));
    }
}

int RestrictedMaster::rcc_coefficient(const Column& col, const RccCut& cut) const {
    if (col.artificial)
        return 0;
    int exits = 0;
    int prev = 0;
    for (int v : col.route) {
        if (cut.mask.test(prev) && !cut.mask.test(v))
            ++exits;
        prev = v;
    }
    if (cut.mask.test(prev))
        ++exits;
    return exits;
}

std::vector<std::pair<int, double>> RestrictedMaster::lp_entries(const Column& col) const {
    const int base = inst_.n + (inst_.unlimited_fleet() ? 0 : 1);
    std::vector<std::pair<int, double>> entries;
    if (col.relief_rcc >= 0) {
        entries.push_back({base + col.relief_rcc, 1.0});
        return entries;
    }
    for (int v : col.route)
        entries.push_back({v - 1, 1.0});
    if (!inst_.unlimited_fleet() && !col.artificial)
        entries.push_back({inst_.n, 1.0});
    append_cut_rows_for(col, entries);
    return entries;
}

void RestrictedMaster::append_cut_rows_for(const Column& col,
                                           std::vector<std::pair<int, double>>& entries) const {
    const int base = inst_.n + (inst_.unlimited_fleet() ? 0 : 1);
    for (std::size_t k = 0; k < pool_.rccs.size(); ++k) {
        int coef = rcc_coefficient(col, pool_.rccs[k]);
        if (coef != 0)
            entries.push_back({base + int(k), double(coef)});
    }
    for (std::size_t k = 0; k < pool_.srcs.size(); ++k) {
        if (col.artificial)
            continue;
        int coef = col.visits.count_and(pool_.srcs[k].mask) / 2;
        if (coef != 0)
            entries.push_back({base + int(pool_.rccs.size() + k), double(coef)});
    }
}

void RestrictedMaster::add_column(Column col) {
    if (!col.artificial && col.load(inst_) > inst_.load_limit() + 1e-9)
        throw std::invalid_argument("master: column violates the load-factor limit");
    lp_col_of_.push_back(lp_.add_column(col.cost, lp_entries(col)));
    columns_.push_back(std::move(col));
}

DualPrices RestrictedMaster::extract_duals(const lp::SolveResult& res) const {
    DualPrices d;
    d.alpha.assign(inst_.n + 1, 0.0);
    for (int i = 1; i <= inst_.n; ++i)
        d.alpha[i] = res.duals[i - 1];
    const int base = inst_.n + (inst_.unlimited_fleet() ? 0 : 1);
    if (!inst_.unlimited_fleet()) {
        d.has_beta = true;
        d.beta = std::min(0.0, res.duals[inst_.n]);
    }
    d.gamma.resize(pool_.rccs.size());
    for (std::size_t k = 0; k < pool_.rccs.size(); ++k)
        d.gamma[k] = std::max(0.0, res.duals[base + k]);
    d.delta.resize(pool_.srcs.size());
    for (std::size_t k = 0; k < pool_.srcs.size(); ++k)
        d.delta[k] = std::min(0.0, res.duals[base + pool_.rccs.size() + k]);
    return d;
}

double RestrictedMaster::estimate_with_src(const SrcCut& cut) const {
    // Re-solve over the existing columns only, with the candidate row added.
    lp::Solver probe;
    for (int i = 1; i <= inst_.n; ++i)
        probe.add_row(lp::Sense::eq, 1.0);
    if (!inst_.unlimited_fleet())
        probe.add_row(lp::Sense::le, double(inst_.fleet));
    for (const auto& c : pool_.rccs)
        probe.add_row(lp::Sense::ge, c.rhs);
    for (std::size_t k = 0; k < pool_.srcs.size(); ++k)
        probe.add_row(lp::Sense::le, 1.0);
    const int cut_row = probe.add_row(lp::Sense::le, 1.0);
    for (const auto& col : columns_) {
        auto entries = lp_entries(col);
        if (!col.artificial) {
            int coef = col.visits.count_and(cut.mask) / 2;
            if (coef != 0)
                entries.push_back({cut_row, double(coef)});
        }
        probe.add_column(col.cost, entries);
    }
    // the new row enters the basis through its own slack
    auto token = lp_.basis_token();
    token.push_back(lp::logical_token(cut_row));
    probe.load_basis_token(token, /*dual_feasible=*/true);
    const auto& res = probe.solve();
    if (res.status != lp::Status::optimal)
        return -std::numeric_limits<double>::infinity();
    return res.objective;
}

RelaxResult RestrictedMaster::solve_relaxation(const PriceFn& price, bool root_node) {
    RelaxResult out;
    for (;;) {
        const auto& res = lp_.solve();
        if (res.status != lp::Status::optimal)
            throw std::runtime_error("master: RMP should stay feasible via artificials");
        last_duals_ = extract_duals(res);

        auto priced = price(last_duals_, pool_);
        if (!priced.empty()) {
            for (auto& pc : priced)
                add_column(Column::real(std::move(pc.route), pc.cost));
            ++out.pricing_rounds;
            continue;
        }

        // priced to optimality: the RMP value is a valid node bound
        if (res.objective < best_bound_ - 1e-7)
            throw std::runtime_error("master: node bound decreased");
        best_bound_ = std::max(best_bound_, res.objective);

        auto flows = arc_flows(inst_, columns_, res.primal);
        auto rcc_sets = separate_rcc(flows, inst_);
        int added = 0;
        for (auto& members : rcc_sets) {
            RccCut cut;
            cut.members = members;
            for (int v : members)
                cut.mask.set(v);
            if (pool_.has_rcc(cut.mask))
                continue;
            cut.rhs = rcc_rhs(inst_, members);
            std::vector<std::pair<int, double>> row_entries;
            for (std::size_t c = 0; c < columns_.size(); ++c) {
                int coef = rcc_coefficient(columns_[c], cut);
                if (coef != 0)
                    row_entries.push_back({lp_col_of_[c], double(coef)});
            }
            pool_.rccs.push_back(std::move(cut));
            lp_.add_row(lp::Sense::ge, pool_.rccs.back().rhs, row_entries);
            add_column(Column::rcc_relief(int(pool_.rccs.size()) - 1, config_.artificial_cost));
            ++added;
        }
        if (added > 0) {
            out.rcc_added += added;
            continue;
        }

        auto src_violations = separate_src(res.primal, columns_, inst_.n);
        int accepted = 0;
        int examined = 0;
        const double threshold =
            root_node ? config_.src_root_threshold : config_.src_other_threshold;
        for (const auto& sv : src_violations) {
            if (accepted >= config_.max_srcs_per_round || examined >= config_.src_eval_cap)
                break;
            ++examined;
            SrcCut cut;
            cut.members = sv.members;
            for (int v : sv.members)
                cut.mask.set(v);
            if (pool_.has_src(cut.mask))
                continue;
            const double est = estimate_with_src(cut);
            const double base = std::max(std::abs(res.objective), 1e-9);
            if ((est - res.objective) / base <= threshold)
                continue;
            std::vector<std::pair<int, double>> row_entries;
            for (std::size_t c = 0; c < columns_.size(); ++c) {
                if (columns_[c].artificial)
                    continue;
                int coef = columns_[c].visits.count_and(cut.mask) / 2;
                if (coef != 0)
                    row_entries.push_back({lp_col_of_[c], double(coef)});
            }
            pool_.srcs.push_back(std::move(cut));
            lp_.add_row(lp::Sense::le, 1.0, row_entries);
            ++accepted;
        }
        if (accepted > 0) {
            out.src_added += accepted;
            continue;
        }

        // converged
        out.lower_bound = res.objective;
        out.primal = res.primal;
        out.flows = std::move(flows);
        out.duals = last_duals_;
        out.feasible = true;
        for (std::size_t c = 0; c < columns_.size(); ++c)
            if (columns_[c].artificial && res.primal[c] > 1e-7)
                out.feasible = false;
        out.integral = out.feasible;
        if (out.integral)
            for (double v : out.flows.x)
                if (v > config_.integrality_tol && v < 1.0 - config_.integrality_tol)
                    out.integral = false;
        return out;
    }
}

std::pair<bool, double> RestrictedMaster::lp_bound() {
    const auto& res = lp_.solve();
    if (res.status != lp::Status::optimal)
        throw std::runtime_error("master: RMP should stay feasible via artificials");
    bool clean = true;
    for (std::size_t c = 0; c < columns_.size(); ++c)
        if (columns_[c].artificial && res.primal[c] > 1e-7)
            clean = false;
    return {clean, res.objective};
}

void RestrictedMaster::dump_state(std::ostream& os) const {
    nlohmann::json j;
    j["columns"] = nlohmann::json::array();
    for (const auto& c : columns_) {
        nlohmann::json jc;
        jc["route"] = c.route;
        jc["cost"] = c.cost;
        jc["artificial"] = c.artificial;
        j["columns"].push_back(jc);
    }
    j["rccs"] = nlohmann::json::array();
    for (const auto& c : pool_.rccs)
        j["rccs"].push_back({{"members", c.members}, {"rhs", c.rhs}});
    j["srcs"] = nlohmann::json::array();
    for (const auto& c : pool_.srcs)
        j["srcs"].push_back({{"members", c.members}});
    j["duals"] = {{"alpha", last_duals_.alpha},
                  {"beta", last_duals_.beta},
                  {"gamma", last_duals_.gamma},
                  {"delta", last_duals_.delta}};
    os << j.dump(2) << "\n";
}

}  // namespace sbpc
