#include "sbpc/pricing.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sbpc/restocking.hpp"

#ifdef SBPC_HAVE_OPENMP
#include <omp.h>
#endif

namespace sbpc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

int resolve_workers(int requested) {
#ifdef SBPC_HAVE_OPENMP
    if (requested > 0)
        return requested;
    return std::max(1, omp_get_max_threads());
#else
    (void)requested;
    return 1;
#endif
}

int floor_grid(double x) { return int(std::floor(x + 1e-12)); }

}  // namespace

ArcRules ArcRules::none(int n) {
    ArcRules r;
    r.n = n;
    r.forbidden.assign((n + 1) * (n + 1), 0);
    return r;
}

ArcRules ArcRules::from_branching(int n, const std::vector<std::pair<int, int>>& forced,
                                  const std::vector<std::pair<int, int>>& banned) {
    ArcRules r = none(n);
    for (auto [i, j] : banned)
        r.forbidden[i * (n + 1) + j] = 1;
    for (auto [i, j] : forced) {
        if (i >= 1)
            for (int k = 0; k <= n; ++k)
                if (k != j)
                    r.forbidden[i * (n + 1) + k] = 1;
        if (j >= 1)
            for (int k = 0; k <= n; ++k)
                if (k != i)
                    r.forbidden[k * (n + 1) + j] = 1;
        r.forbidden[i * (n + 1) + j] = 0;  // forcing always wins over bans
    }
    return r;
}

bool ArcRules::allows_route(const std::vector<int>& route) const {
    int prev = 0;
    for (int v : route) {
        if (arc_forbidden(prev, v))
            return false;
        prev = v;
    }
    return !arc_forbidden(prev, 0);
}

SigmaTable build_sigma(const StochasticInstance& inst, const DualPrices& duals,
                       const CutPool& pool) {
    const int n = inst.n;
    SigmaTable t;
    t.n = n;
    t.sigma.assign((n + 1) * (n + 1), 0.0);
    t.gamma_arc.assign((n + 1) * (n + 1), 0.0);
    for (std::size_t k = 0; k < pool.rccs.size(); ++k) {
        const double g = duals.gamma[k];
        if (g == 0.0)
            continue;
        const auto& mask = pool.rccs[k].mask;
        for (int i = 1; i <= n; ++i) {
            if (!mask.test(i))
                continue;
            for (int j = 0; j <= n; ++j)
                if (j != i && !mask.test(j))
                    t.gamma_arc[i * (n + 1) + j] += g;
        }
    }
    for (int i = 0; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            if (i != j)
                t.sigma[i * (n + 1) + j] = duals.alpha[j] + t.gamma_arc[i * (n + 1) + j];
    return t;
}

namespace {

// Shared label math; the public Label wrappers and the wave engine both use it.
struct LabelCore {
    int v = 0;
    double q = 0.0;
    double zeta = 0.0;
    double gstar = 0.0;
    Mask128 visits;
};

void core_init(const StochasticInstance& inst, const DualPrices& duals,
               const SigmaTable& sigma, int i, LabelCore& out, double* phi) {
    const int Q = inst.capacity;
    out.v = i;
    out.q = inst.load_limit() - inst.mean_demand(i);
    out.visits = Mask128{};
    out.visits.set(i);
    std::fill(phi, phi + Q + 1, inst.cost[i][0]);
    out.zeta = duals.alpha[i] + (duals.has_beta ? duals.beta : 0.0) + sigma.gamma_at(i, 0);
    out.gstar = inst.cost[0][i] + detail::dp_expect(inst.demands[i], Q, Q, inst.cost[0][i],
                                                    inst.cost[i][0], phi);
}

void core_extend(const StochasticInstance& inst, const DualPrices& duals,
                 const CutPool& pool, const SigmaTable& sigma, const LabelCore& l1,
                 const double* phi1, int i, LabelCore& l2, double* phi2) {
    const int Q = inst.capacity;
    l2.v = i;
    l2.q = l1.q - inst.mean_demand(i);
    l2.visits = l1.visits;
    l2.visits.set(i);
    detail::dp_step(inst.demands[l1.v], Q, inst.cost[i][l1.v], inst.cost[i][0],
                    inst.cost[0][l1.v], inst.cost[l1.v][0], phi1, phi2, nullptr);
    double z = l1.zeta + duals.alpha[i] + sigma.gamma_at(i, l1.v);
    for (std::size_t k = 0; k < pool.srcs.size(); ++k) {
        const double d = duals.delta[k];
        if (d == 0.0 || !pool.srcs[k].mask.test(i))
            continue;
        if ((l1.visits.count_and(pool.srcs[k].mask) + 1) % 2 == 0)
            z += d;
    }
    l2.zeta = z;
    l2.gstar = inst.cost[0][i] + detail::dp_expect(inst.demands[i], Q, Q, inst.cost[0][i],
                                                   inst.cost[i][0], phi2);
}

struct KnapsackScratch {
    std::vector<double> dp;
};

double knapsack_gain(const StochasticInstance& inst, const Mask128& visits, double budget,
                     const std::vector<double>& value, const std::vector<int>& weight,
                     KnapsackScratch& scratch) {
    const int cap = std::max(0, floor_grid(budget));
    auto& dp = scratch.dp;
    dp.assign(cap + 1, 0.0);
    double freebies = 0.0;
    for (int j = 1; j <= inst.n; ++j) {
        if (visits.test(j) || value[j] <= 0.0)
            continue;
        const int w = weight[j];
        if (w == 0) {
            freebies += value[j];
            continue;
        }
        if (w > cap)
            continue;
        for (int c = cap; c >= w; --c)
            dp[c] = std::max(dp[c], dp[c - w] + value[j]);
    }
    return dp[cap] + freebies;
}

}  // namespace

Label init_label(const StochasticInstance& inst, int customer, const DualPrices& duals,
                 const CutPool& pool, const SigmaTable& sigma) {
    (void)pool;
    Label l;
    l.phi.assign(inst.capacity + 1, 0.0);
    LabelCore core;
    core_init(inst, duals, sigma, customer, core, l.phi.data());
    l.theta = {customer};
    l.v = core.v;
    l.q = core.q;
    l.zeta_acc = core.zeta;
    l.gstar = core.gstar;
    l.visits = core.visits;
    return l;
}

Label extend_label(const Label& l1, int customer, const StochasticInstance& inst,
                   const DualPrices& duals, const CutPool& pool, const SigmaTable& sigma) {
    if (l1.visits.test(customer))
        throw std::invalid_argument("extend_label: customer already on the path");
    if (inst.mean_demand(customer) > l1.q + 1e-9)
        throw std::invalid_argument("extend_label: load budget exhausted");
    Label l2;
    l2.phi.assign(inst.capacity + 1, 0.0);
    LabelCore c1;
    c1.v = l1.v;
    c1.q = l1.q;
    c1.zeta = l1.zeta_acc;
    c1.gstar = l1.gstar;
    c1.visits = l1.visits;
    LabelCore c2;
    core_extend(inst, duals, pool, sigma, c1, l1.phi.data(), customer, c2, l2.phi.data());
    l2.theta.reserve(l1.theta.size() + 1);
    l2.theta.push_back(customer);
    l2.theta.insert(l2.theta.end(), l1.theta.begin(), l1.theta.end());
    l2.v = c2.v;
    l2.q = c2.q;
    l2.zeta_acc = c2.zeta;
    l2.gstar = c2.gstar;
    l2.visits = c2.visits;
    return l2;
}

double knapsack_bound(const Label& l, const SigmaTable& sigma,
                      const StochasticInstance& inst) {
    std::vector<double> value(inst.n + 1, 0.0);
    std::vector<int> weight(inst.n + 1, 0);
    for (int j = 1; j <= inst.n; ++j) {
        double best = 0.0;
        for (int i = 0; i <= inst.n; ++i)
            if (i != j)
                best = std::max(best, sigma.at(i, j));
        value[j] = best;
        weight[j] = std::max(0, floor_grid(inst.mean_demand(j)));
    }
    KnapsackScratch scratch;
    return l.gstar - l.zeta_acc - knapsack_gain(inst, l.visits, l.q, value, weight, scratch);
}

namespace {

// DP for one forbidden-set row of the RCSP table. Paths may repeat customers;
// each visit to j consumes floor(E[xi_j]). Zero-weight customers are relaxed
// to a within-level fixpoint; negative zero-weight cycles push values to -inf.
void rcsp_subset(const StochasticInstance& inst, const std::vector<double>& cbar,
                 const std::vector<int>& weight, const std::vector<char>& in_set,
                 int grid, std::vector<double>& out) {
    const int n = inst.n;
    out.assign((grid + 1) * (n + 1), kInf);
    std::vector<int> zero_weight;
    for (int i = 1; i <= n; ++i)
        if (weight[i] == 0)
            zero_weight.push_back(i);

    for (int q = 0; q <= grid; ++q) {
        double* row = &out[q * (n + 1)];
        const double* below = q > 0 ? &out[(q - 1) * (n + 1)] : nullptr;
        for (int i = 1; i <= n; ++i) {
            double best = below ? below[i] : kInf;
            const int wi = weight[i];
            if (wi <= q) {
                best = std::min(best, cbar[i]);  // direct arc from the depot
                if (wi > 0) {
                    const double* from = &out[(q - wi) * (n + 1)];
                    for (int j = 1; j <= n; ++j) {
                        if (j == i || in_set[j])
                            continue;
                        const double c = cbar[j * (n + 1) + i];
                        if (c == kInf || from[j] == kInf)
                            continue;
                        if (from[j] + c < best)
                            best = from[j] + c;
                    }
                }
            }
            row[i] = best;
        }
        if (!zero_weight.empty()) {
            bool improved = true;
            std::size_t pass = 0;
            while (improved && pass <= zero_weight.size()) {
                improved = false;
                ++pass;
                for (int i : zero_weight) {
                    double best = row[i];
                    for (int j = 1; j <= n; ++j) {
                        if (j == i || in_set[j])
                            continue;
                        const double c = cbar[j * (n + 1) + i];
                        if (c == kInf || row[j] == kInf)
                            continue;
                        if (row[j] + c < best - 1e-15)
                            best = row[j] + c;
                    }
                    if (best < row[i] - 1e-15) {
                        row[i] = best;
                        improved = true;
                    }
                }
            }
            if (improved)  // negative zero-weight cycle: no useful bound here
                for (int i : zero_weight)
                    row[i] = -kInf;
        }
    }
}

RcspTables rcsp_tables_impl(const StochasticInstance& inst, const SigmaTable& sigma,
                            const std::vector<int>& m_set, const ArcRules& rules,
                            int workers) {
    const int n = inst.n;
    RcspTables t;
    t.m_set = m_set;
    t.n = n;
    t.grid = std::max(0, floor_grid(inst.load_limit()));
    t.values.assign(std::size_t(1) << m_set.size(), {});

    std::vector<double> cbar((n + 1) * (n + 1), kInf);
    for (int i = 0; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            if (i != j && !rules.arc_forbidden(i, j))
                cbar[i * (n + 1) + j] = inst.cost[i][j] - sigma.at(i, j);
    std::vector<int> weight(n + 1, 0);
    for (int i = 1; i <= n; ++i)
        weight[i] = std::max(0, floor_grid(inst.mean_demand(i)));

    const int subsets = int(t.values.size());
    const int threads = std::max(1, std::min(workers, subsets));
#ifdef SBPC_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (threads > 1)
#endif
    for (int s = 0; s < subsets; ++s) {
        std::vector<char> in_set(n + 1, 0);
        for (std::size_t b = 0; b < m_set.size(); ++b)
            if (s >> b & 1)
                in_set[m_set[b]] = 1;
        rcsp_subset(inst, cbar, weight, in_set, t.grid, t.values[s]);
    }
    return t;
}

}  // namespace

RcspTables rcsp_tables(const StochasticInstance& inst, const SigmaTable& sigma,
                       const std::vector<int>& m_set, const ArcRules& rules, int workers) {
    return rcsp_tables_impl(inst, sigma, m_set, rules, resolve_workers(workers));
}

RcspTables rcsp_tables_serial(const StochasticInstance& inst, const SigmaTable& sigma,
                              const std::vector<int>& m_set, const ArcRules& rules) {
    return rcsp_tables_impl(inst, sigma, m_set, rules, 1);
}

int RcspTables::subset_of(const Mask128& visits) const {
    int s = 0;
    for (std::size_t b = 0; b < m_set.size(); ++b)
        if (visits.test(m_set[b]))
            s |= 1 << b;
    return s;
}

double rcsp_bound(const Label& l, const StochasticInstance& inst, const DualPrices& duals,
                  const RcspTables& tables) {
    const int s = tables.subset_of(l.visits);
    const int q = std::max(0, std::min(tables.grid, floor_grid(l.q + inst.mean_demand(l.v))));
    const double path = tables.at(s, q, l.v);
    if (path == kInf)
        return kInf;
    return path + duals.alpha[l.v] + l.phi[inst.capacity] - l.zeta_acc;
}

std::vector<int> select_m_set(const StochasticInstance& inst, const DualPrices& duals,
                              int m_size) {
    std::vector<std::pair<double, int>> ranked;
    for (int i = 1; i <= inst.n; ++i) {
        const double e = inst.mean_demand(i);
        double ratio;
        if (e > 1e-12)
            ratio = duals.alpha[i] / e;
        else
            ratio = duals.alpha[i] > 0 ? 1e300 : (duals.alpha[i] < 0 ? -1e300 : 0.0);
        ranked.push_back({ratio, i});
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> m;
    for (int k = 0; k < int(ranked.size()) && k < m_size; ++k)
        m.push_back(ranked[k].second);
    std::sort(m.begin(), m.end());
    return m;
}

namespace {

struct WaveLabel {
    int v = 0;
    int parent = -1;  // index into the processed order of the previous wave
    double q = 0.0;
    double zeta = 0.0;
    double gstar = 0.0;
    Mask128 visits;
    std::size_t phi = 0;  // offset into the wave arena
};

struct Wave {
    std::vector<WaveLabel> labels;
    std::vector<double> arena;
    PricingStats stats;  // per-thread deltas during chunk processing
};

struct Candidate {
    double rc;
    double gstar;
    std::vector<int> route;
};

std::vector<int> reconstruct(const std::vector<std::vector<std::pair<int, int>>>& history,
                             int wave, int index) {
    std::vector<int> route;
    while (wave >= 0 && index >= 0) {
        route.push_back(history[wave][index].first);
        index = history[wave][index].second;
        --wave;
    }
    return route;
}

}  // namespace

std::vector<PricedColumn> price(const StochasticInstance& inst, const DualPrices& duals,
                                const CutPool& pool, const ArcRules& rules,
                                const PricingConfig& config, PricingStats* stats) {
    const int n = inst.n;
    const int Q = inst.capacity;
    const int phi_len = Q + 1;
    PricingStats local_stats;
    PricingStats& st = stats ? *stats : local_stats;
    st = PricingStats{};

    const SigmaTable sigma = build_sigma(inst, duals, pool);
    const auto m_set = select_m_set(inst, duals, config.m_size);
    const int workers = resolve_workers(config.workers);
    const RcspTables tables = rcsp_tables_impl(inst, sigma, m_set, rules, workers);

    std::vector<double> kp_value(n + 1, 0.0);
    std::vector<int> kp_weight(n + 1, 0);
    if (config.use_knapsack) {
        for (int j = 1; j <= n; ++j) {
            double best = 0.0;
            for (int i = 0; i <= n; ++i)
                if (i != j)
                    best = std::max(best, sigma.at(i, j));
            kp_value[j] = best;
            kp_weight[j] = std::max(0, floor_grid(inst.mean_demand(j)));
        }
    }

    auto subset_with = [&](const Mask128& visits, int extra) {
        int s = 0;
        for (std::size_t b = 0; b < m_set.size(); ++b)
            if (visits.test(m_set[b]) || m_set[b] == extra)
                s |= 1 << b;
        return s;
    };

    std::vector<Candidate> candidates;
    std::vector<std::vector<std::pair<int, int>>> history;
    double prune_limit = -config.rc_eps;

    // Completion-bound filter: true when the label can be discarded.
    auto discard_label = [&](const WaveLabel& l, const double* phi, KnapsackScratch& scratch,
                             PricingStats& pstats) {
        const int s = subset_with(l.visits, -1);
        const int qi = std::max(0, std::min(tables.grid, floor_grid(l.q + inst.mean_demand(l.v))));
        const double path = tables.at(s, qi, l.v);
        const double rb = path == kInf ? kInf : path + duals.alpha[l.v] + phi[Q] - l.zeta;
        if (rb >= prune_limit) {
            ++pstats.labels_pruned_rcsp;
            return true;
        }
        if (config.use_knapsack) {
            const double kb =
                l.gstar - l.zeta - knapsack_gain(inst, l.visits, l.q, kp_value, kp_weight, scratch);
            if (kb >= prune_limit) {
                ++pstats.labels_pruned_kp;
                return true;
            }
        }
        return false;
    };

    // wave 0: one label per customer that may close a route at the depot side
    Wave wave;
    KnapsackScratch scratch0;
    for (int i = 1; i <= n; ++i) {
        if (!rules.can_end_route(i))
            continue;
        if (inst.mean_demand(i) > inst.load_limit() + 1e-9)
            continue;
        WaveLabel l;
        l.phi = wave.arena.size();
        wave.arena.resize(wave.arena.size() + phi_len);
        LabelCore core;
        core_init(inst, duals, sigma, i, core, &wave.arena[l.phi]);
        l.v = core.v;
        l.q = core.q;
        l.zeta = core.zeta;
        l.gstar = core.gstar;
        l.visits = core.visits;
        l.parent = -1;
        ++st.labels_created;
        const double rc = l.gstar - l.zeta;
        if (rc < -config.rc_eps && rules.can_start_route(i))
            candidates.push_back({rc, l.gstar, {i}});
        if (discard_label(l, &wave.arena[l.phi], scratch0, st))
            wave.arena.resize(l.phi);  // drop the tail allocation
        else
            wave.labels.push_back(l);
    }

    while (!wave.labels.empty() && int(candidates.size()) < config.max_columns) {
        ++st.waves;
        if (config.aggressive && !candidates.empty()) {
            double best = 0.0;
            for (const auto& c : candidates)
                best = std::min(best, c.rc);
            prune_limit = std::min(-config.rc_eps, best / 4.0);
        }
        // processing order: descending dual contribution, canonical tie-break
        std::vector<int> order(wave.labels.size());
        for (std::size_t k = 0; k < order.size(); ++k)
            order[k] = int(k);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (wave.labels[a].zeta != wave.labels[b].zeta)
                return wave.labels[a].zeta > wave.labels[b].zeta;
            if (wave.labels[a].parent != wave.labels[b].parent)
                return wave.labels[a].parent < wave.labels[b].parent;
            return wave.labels[a].v < wave.labels[b].v;
        });
        if (order.size() > config.max_wave_labels) {
            if (candidates.empty())
                throw std::runtime_error(
                    "pricing: label storage limit hit before any column was found");
            order.resize(config.max_wave_labels / 2);
        }

        history.push_back({});
        auto& hist = history.back();
        hist.reserve(order.size());
        std::vector<int> hist_index(wave.labels.size(), -1);
        for (std::size_t k = 0; k < order.size(); ++k) {
            hist_index[order[k]] = int(k);
            hist.push_back({wave.labels[order[k]].v, wave.labels[order[k]].parent});
        }

        const int T = std::max(1, std::min<int>(workers, int(order.size())));
        std::vector<Wave> buffers(T);
        std::vector<std::vector<Candidate>> cand_buffers(T);

        auto process_chunk = [&](int t) {
            const std::size_t lo = order.size() * std::size_t(t) / T;
            const std::size_t hi = order.size() * std::size_t(t + 1) / T;
            auto& out = buffers[t];
            auto& cands = cand_buffers[t];
            KnapsackScratch scratch;
            std::vector<double> phi2(phi_len);
            for (std::size_t k = lo; k < hi; ++k) {
                const WaveLabel& l = wave.labels[order[k]];
                const double* phi1 = &wave.arena[l.phi];
                for (int i = 1; i <= n; ++i) {
                    if (l.visits.test(i))
                        continue;
                    if (inst.mean_demand(i) > l.q + 1e-9)
                        continue;
                    if (rules.arc_forbidden(i, l.v))
                        continue;
                    // cheap pre-bound before building the extension
                    {
                        const int s = subset_with(l.visits, i);
                        const int qi = std::max(0, std::min(tables.grid, floor_grid(l.q)));
                        const double path = tables.at(s, qi, i);
                        if (path == kInf) {
                            ++out.stats.labels_pruned_pre;
                            continue;
                        }
                        const double lb_phi =
                            std::min(inst.cost[i][l.v], inst.cost[i][0] + inst.cost[0][l.v]) +
                            inst.demands[l.v].mass * phi1[Q];
                        if (path + lb_phi - l.zeta - sigma.gamma_at(i, l.v) >= prune_limit) {
                            ++out.stats.labels_pruned_pre;
                            continue;
                        }
                    }
                    LabelCore c1;
                    c1.v = l.v;
                    c1.q = l.q;
                    c1.zeta = l.zeta;
                    c1.gstar = l.gstar;
                    c1.visits = l.visits;
                    LabelCore c2;
                    core_extend(inst, duals, pool, sigma, c1, phi1, i, c2, phi2.data());
                    ++out.stats.labels_created;
                    const double rc = c2.gstar - c2.zeta;
                    if (rc < -config.rc_eps && rules.can_start_route(i)) {
                        auto route =
                            reconstruct(history, int(history.size()) - 1, hist_index[order[k]]);
                        route.insert(route.begin(), i);
                        cands.push_back({rc, c2.gstar, std::move(route)});
                    }
                    WaveLabel nl;
                    nl.v = i;
                    nl.parent = hist_index[order[k]];
                    nl.q = c2.q;
                    nl.zeta = c2.zeta;
                    nl.gstar = c2.gstar;
                    nl.visits = c2.visits;
                    if (!discard_label(nl, phi2.data(), scratch, out.stats)) {
                        nl.phi = out.arena.size();
                        out.arena.insert(out.arena.end(), phi2.begin(), phi2.end());
                        out.labels.push_back(nl);
                    }
                }
            }
        };

#ifdef SBPC_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(T) if (T > 1)
#endif
        for (int t = 0; t < T; ++t)
            process_chunk(t);

        Wave next;
        for (int t = 0; t < T; ++t) {
            for (auto l : buffers[t].labels) {
                const std::size_t ofs = l.phi;
                l.phi = next.arena.size();
                next.arena.insert(next.arena.end(), buffers[t].arena.begin() + ofs,
                                  buffers[t].arena.begin() + ofs + phi_len);
                next.labels.push_back(l);
            }
            for (auto& c : cand_buffers[t])
                candidates.push_back(std::move(c));
            st.labels_created += buffers[t].stats.labels_created;
            st.labels_pruned_pre += buffers[t].stats.labels_pruned_pre;
            st.labels_pruned_rcsp += buffers[t].stats.labels_pruned_rcsp;
            st.labels_pruned_kp += buffers[t].stats.labels_pruned_kp;
        }
        wave = std::move(next);
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.rc != b.rc)
            return a.rc < b.rc;
        return a.route < b.route;
    });
    if (int(candidates.size()) > config.max_columns)
        candidates.resize(config.max_columns);

    std::vector<PricedColumn> out;
    for (auto& c : candidates) {
        const double g = route_cost_or(inst, c.route);
        if (std::abs(g - c.gstar) > 1e-9 * std::max(1.0, std::abs(g)))
            throw std::logic_error("pricing: label cost disagrees with route_cost_or");
        const double rc = g - zeta(c.route, duals, pool);
        if (rc < -config.rc_eps) {
            st.columns_emitted++;
            out.push_back({std::move(c.route), g, rc});
        }
    }
    return out;
}

}  // namespace sbpc
