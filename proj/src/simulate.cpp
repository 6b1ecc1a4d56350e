#include "distflex/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include "distflex/csv.hpp"
#include "distflex/parallel.hpp"

namespace distflex::simulate {

namespace {

std::uint64_t key64(EntityId a, EntityId b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

void SimConfig::validate() const {
    if (tau < 1) throw ValidationError("sim: tau must be >= 1");
    if (horizon < 1) throw ValidationError("sim: horizon must be >= 1");
    if (lead_time < 1) throw ValidationError("sim: lead_time must be >= 1");
    if (warmup < 0) throw ValidationError("sim: warmup must be >= 0");
    phi.validate();
}

void ShockSpec::validate() const {
    if (!(shock_fraction >= 0.0 && shock_fraction <= 1.0))
        throw ValidationError("shock: shock_fraction must be in [0,1]");
}

AnnualFlows annual_flows(const std::vector<ingest::Transaction>& txs,
                         const EntityCatalog& catalog) {
    AnnualFlows flows;
    Day lo = 0, hi = 0;
    bool first = true;
    for (const auto& tx : txs) {
        if (catalog.is_manufacturer(tx.buyer) || catalog.is_final_buyer(tx.seller))
            continue;  // mirrored from reconstruction: these rows are skipped
        const auto q = static_cast<double>(tx.quantity);
        flows.out_total[tx.seller] += q;
        if (catalog.is_final_buyer(tx.buyer))
            flows.final_out[tx.seller] += q;
        else
            flows.in_by_source[key64(tx.buyer, tx.seller)] += q;
        if (first || tx.date < lo) lo = tx.date;
        if (first || tx.date > hi) hi = tx.date;
        first = false;
    }
    flows.days = first ? 365 : std::max(365, hi - lo + 1);
    return flows;
}

SimSystem::SimSystem(const tensors::OrderTransitionTensor& two_step,
                     const tensors::OrderTransitionTensor& one_step, const AnnualFlows& flows,
                     const EntityCatalog& catalog, double manufacturer_stock_days,
                     TargetMode target_mode) {
    if (manufacturer_stock_days <= 0)
        throw ValidationError("sim: manufacturer_stock_days must be positive");
    // Order-routing triples: tensor support union plus direct first-order
    // orders for observed pairs without a tensor row (these run against the
    // supplier's production stock).
    std::set<std::array<EntityId, 3>> triples;
    std::set<std::pair<EntityId, EntityId>> pairs_with_rows;
    for (const auto* t : {&two_step, &one_step})
        for (const auto& e : t->entries) {
            triples.insert({e.i, e.j, e.k});
            pairs_with_rows.emplace(e.i, e.j);
        }
    for (const auto& [key, w] : flows.in_by_source) {
        (void)w;
        const auto h = static_cast<EntityId>(key >> 32);
        const auto src = static_cast<EntityId>(key & 0xffffffffu);
        if (!pairs_with_rows.count({h, src})) triples.insert({h, src, kSourceEntity});
    }

    // Sub-stock universe: observed pairs, claimant/supplier pairs implied by
    // the routing triples, and one production stock per shipping manufacturer.
    std::set<std::pair<EntityId, EntityId>> keys;
    for (const auto& [key, w] : flows.in_by_source) {
        (void)w;
        keys.emplace(static_cast<EntityId>(key >> 32), static_cast<EntityId>(key & 0xffffffffu));
    }
    for (const auto& t : triples) {
        keys.emplace(t[0], t[1]);
        keys.emplace(t[1], t[2]);
    }
    for (const auto& [e, w] : flows.out_total) {
        (void)w;
        if (catalog.is_manufacturer(e)) keys.emplace(e, kSourceEntity);
    }

    for (const auto& [h, s] : keys) {
        index_.emplace(key64(h, s), static_cast<std::uint32_t>(holder_.size()));
        holder_.push_back(h);
        source_.push_back(s);
    }
    const std::size_t n = holder_.size();
    target_.assign(n, 0.0);
    final_demand_.assign(n, 0.0);
    production_rate_.assign(n, 0.0);
    is_production_.assign(n, 0);

    const double days = static_cast<double>(flows.days);
    std::unordered_map<EntityId, double> in_total;
    for (const auto& [key, w] : flows.in_by_source) in_total[static_cast<EntityId>(key >> 32)] += w;
    auto lookup = [](const std::unordered_map<EntityId, double>& m, EntityId e) {
        auto it = m.find(e);
        return it == m.end() ? 0.0 : it->second;
    };

    // Entities that ship without any recorded inflow or final sales have no
    // place in the flow accounting; surface them. (They may also lack a
    // sub-stock entirely, so scan the raw flows.)
    for (const auto& [e, w_out] : std::map<EntityId, double>(flows.out_total.begin(),
                                                             flows.out_total.end())) {
        if (catalog.is_manufacturer(e)) continue;
        if (w_out > 0 && lookup(in_total, e) == 0 && lookup(flows.final_out, e) == 0)
            flagged_outflow_only_.push_back(e);
    }

    // Per-holder scalars: daily final-buyer demand and the target stock.
    std::unordered_map<EntityId, double> holder_c, holder_target, holder_in;
    for (const EntityId h : std::set<EntityId>(holder_.begin(), holder_.end())) {
        const double w_in = lookup(in_total, h);
        const double w_out = lookup(flows.out_total, h);
        const double omega = lookup(flows.final_out, h);
        if (catalog.is_manufacturer(h)) {
            auto it = index_.find(key64(h, kSourceEntity));
            if (it != index_.end()) {
                const double rate = w_out / days;
                production_rate_[it->second] = rate;
                is_production_[it->second] = 1;
                target_[it->second] = manufacturer_stock_days * rate;
                final_demand_[it->second] = omega / days;
            }
            continue;
        }
        double target =
            target_mode == TargetMode::Annual ? w_in - (w_out - omega) : w_in - w_out;
        if (target <= 0 && (w_in > 0 || w_out > 0 || omega > 0)) {
            target = 1.0;
            min_buffer_entities_.push_back(h);
        }
        holder_c[h] = omega / days;
        holder_target[h] = std::max(target, 0.0);
        holder_in[h] = w_in;
    }

    for (std::size_t s = 0; s < n; ++s) {
        if (is_production_[s]) continue;
        const EntityId h = holder_[s];
        const double w_in_h = lookup(holder_in, h);
        const double c_h = lookup(holder_c, h);
        const double target_h = lookup(holder_target, h);
        if (w_in_h > 0) {
            auto it = flows.in_by_source.find(key64(h, source_[s]));
            const double share = it == flows.in_by_source.end() ? 0.0 : it->second / w_in_h;
            final_demand_[s] = c_h * share;
            target_[s] = target_h * share;
        } else if (source_[s] == kSourceEntity) {
            // Direct seller with no inflows: demand rests on a local slot.
            final_demand_[s] = c_h;
            target_[s] = target_h;
        }
    }
    for (std::size_t s = 0; s < n; ++s) total_final_demand_ += final_demand_[s];

    // Edges grouped per claimant substock. Triples are sorted by (i, j, k)
    // and substocks by (holder, source), so the grouping is already CSR-ready.
    edges_.reserve(triples.size());
    for (const auto& t : triples)
        edges_.push_back(Edge{index_.at(key64(t[0], t[1])), index_.at(key64(t[1], t[2])), t[0],
                              t[1], t[2]});
    claimant_ptr_.assign(n + 1, 0);
    for (const auto& e : edges_) claimant_ptr_[e.from + 1] += 1;
    for (std::size_t s = 0; s < n; ++s) claimant_ptr_[s + 1] += claimant_ptr_[s];
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

namespace detail {

struct Engine {
    const SimSystem& sys;
    const SimConfig& config;
    std::size_t n;

    struct ShareSet {
        std::vector<double> share;
        std::vector<char> nonzero;
        std::vector<std::ptrdiff_t> last_edge;  // per substock, -1 if none
    };
    ShareSet base_shares, flex_shares;
    const ShareSet* active = nullptr;

    std::vector<double> stock, d_prev, demand_today, claims, orders;
    std::vector<std::vector<double>> arrival_ring;  // lead_time + 1 slots
    std::vector<std::vector<std::uint32_t>> edges_into;  // per substock: edge indices
    bool halted = false;

    // audit state
    double initial_mass = 0, cum_production = 0, cum_final = 0, cum_removed = 0;
    double worst_mass_error = 0, min_stock_seen = 0;
    bool order_conservation_ok = true;

    Engine(const SimSystem& system, const SimConfig& cfg)
        : sys(system), config(cfg), n(system.holder_.size()) {
        stock = sys.target_;
        d_prev.assign(n, 0.0);
        demand_today.assign(n, 0.0);
        claims.assign(sys.edges_.size(), 0.0);
        orders.assign(n, 0.0);
        arrival_ring.assign(static_cast<std::size_t>(config.lead_time) + 1,
                            std::vector<double>(n, 0.0));
        edges_into.assign(n, {});
        for (std::uint32_t e = 0; e < sys.edges_.size(); ++e)
            edges_into[sys.edges_[e].to].push_back(e);
    }

    void bind_shares(ShareSet& out, const tensors::OrderTransitionTensor& tensor) {
        out.share.assign(sys.edges_.size(), 0.0);
        out.nonzero.assign(sys.edges_.size(), 0);
        out.last_edge.assign(n, -1);
        std::vector<double> raw(sys.edges_.size(), 0.0);
        std::size_t m = 0;
        const auto& entries = tensor.entries;
        for (std::size_t e = 0; e < sys.edges_.size(); ++e) {
            const auto& edge = sys.edges_[e];
            while (m < entries.size() &&
                   std::array<EntityId, 3>{entries[m].i, entries[m].j, entries[m].k} <
                       std::array<EntityId, 3>{edge.orderer, edge.via, edge.origin})
                ++m;
            if (m < entries.size() && entries[m].i == edge.orderer && entries[m].j == edge.via &&
                entries[m].k == edge.origin)
                raw[e] = entries[m].value;
        }
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t begin = sys.claimant_ptr_[s], end = sys.claimant_ptr_[s + 1];
            if (begin == end) continue;
            double total = 0;
            for (std::size_t e = begin; e < end; ++e) total += raw[e];
            if (total <= 0.0) {
                // A pair with no tensor row routes its whole order directly.
                if (end - begin == 1 && sys.edges_[begin].origin == kSourceEntity) {
                    out.share[begin] = 1.0;
                    out.nonzero[begin] = 1;
                    out.last_edge[s] = static_cast<std::ptrdiff_t>(begin);
                }
                continue;
            }
            for (std::size_t e = begin; e < end; ++e) {
                out.share[e] = raw[e] / total;
                out.nonzero[e] = out.share[e] > 0.0 ? 1 : 0;
                if (out.nonzero[e]) out.last_edge[s] = static_cast<std::ptrdiff_t>(e);
            }
        }
    }

    /// Split per-substock orders into per-edge claims. The last nonzero
    /// component takes the exact remainder, making the row sum an identity.
    void split_orders() {
        const ShareSet& shares = *active;
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t begin = sys.claimant_ptr_[s], end = sys.claimant_ptr_[s + 1];
            if (begin == end) continue;
            const double o = orders[s];
            const auto last = shares.last_edge[s];
            double partial = 0;
            for (std::size_t e = begin; e < end; ++e) {
                if (!shares.nonzero[e]) {
                    claims[e] = 0.0;
                    continue;
                }
                if (static_cast<std::ptrdiff_t>(e) == last) {
                    claims[e] = o - partial;
                } else {
                    claims[e] = o * shares.share[e];
                    partial += claims[e];
                }
            }
            if (config.audit && last >= 0) {
                double check = 0;
                for (std::size_t e = begin; e < end; ++e)
                    if (shares.nonzero[e] && static_cast<std::ptrdiff_t>(e) != last)
                        check += claims[e];
                if (claims[static_cast<std::size_t>(last)] != o - check)
                    order_conservation_ok = false;
            }
        }
    }

    /// One simulated day. Returns (final_shipped, total_shipped).
    std::pair<double, double> step(int measured_day, const ShockSpec& shock,
                                   std::vector<double>* inflow_row) {
        // Flexibility is the response to the shock: relaxed preferences take
        // over from the shock day (immediately when no shock is set).
        active = shock.t_star >= 1 && measured_day < shock.t_star ? &base_shares : &flex_shares;
        // Shock first: manufacturer stocks cut, production optionally halted.
        if (shock.t_star >= 1 && measured_day == shock.t_star &&
            (shock.shock_fraction > 0.0 || shock.production_halt)) {
            for (std::size_t s = 0; s < n; ++s)
                if (sys.is_production_[s]) {
                    cum_removed += stock[s] * shock.shock_fraction;
                    stock[s] *= 1.0 - shock.shock_fraction;
                }
            if (shock.production_halt) halted = true;
        }
        // Arrivals land, production replenishes.
        std::vector<double>& today = arrival_ring[0];
        for (std::size_t s = 0; s < n; ++s) {
            stock[s] += today[s];
            today[s] = 0.0;
        }
        if (!halted)
            for (std::size_t s = 0; s < n; ++s)
                if (sys.is_production_[s]) {
                    stock[s] += sys.production_rate_[s];
                    cum_production += sys.production_rate_[s];
                }
        std::rotate(arrival_ring.begin(), arrival_ring.begin() + 1, arrival_ring.end());

        // Orders: yesterday's demand plus the target-gap correction,
        // floored at zero, then split over sources conditional on the
        // intermediary.
        const double inv_tau = 1.0 / static_cast<double>(config.tau);
        for (std::size_t s = 0; s < n; ++s) {
            if (sys.claimant_ptr_[s] == sys.claimant_ptr_[s + 1]) {
                orders[s] = 0.0;
                continue;
            }
            const double o = d_prev[s] + inv_tau * (sys.target_[s] - stock[s]);
            orders[s] = o > 0.0 ? o : 0.0;
        }
        split_orders();

        // Demand faced by each supplier substock: final buyers plus claims.
        for (std::size_t s = 0; s < n; ++s) demand_today[s] = sys.final_demand_[s];
        for (std::size_t e = 0; e < sys.edges_.size(); ++e)
            demand_today[sys.edges_[e].to] += claims[e];

        // Shipping: capped by stock, rationed proportionally, final buyers
        // served in the same proportion as distributor claims.
        double final_shipped = 0, total_shipped = 0;
        std::vector<double>& next = arrival_ring[config.lead_time - 1];
        for (std::size_t u = 0; u < n; ++u) {
            const double demand = demand_today[u];
            if (demand <= 0.0) continue;
            double remaining = stock[u];
            if (remaining <= 0.0) continue;
            const double ratio = demand <= remaining ? 1.0 : remaining / demand;
            if (sys.final_demand_[u] > 0.0) {
                const double ship = std::min(remaining, sys.final_demand_[u] * ratio);
                remaining -= ship;
                final_shipped += ship;
                total_shipped += ship;
            }
            for (const std::uint32_t e : edges_into[u]) {
                if (claims[e] <= 0.0) continue;
                const double ship = std::min(remaining, claims[e] * ratio);
                remaining -= ship;
                total_shipped += ship;
                next[sys.edges_[e].from] += ship;
                if (inflow_row) (*inflow_row)[sys.edges_[e].from] += ship;
            }
            stock[u] = remaining;
        }
        cum_final += final_shipped;
        d_prev = demand_today;

        if (config.audit) {
            double mass = cum_final - cum_production + cum_removed;
            for (std::size_t s = 0; s < n; ++s) mass += stock[s];
            for (const auto& slot : arrival_ring)
                for (double x : slot) mass += x;
            const double scale = std::max(1.0, initial_mass + cum_production);
            worst_mass_error = std::max(worst_mass_error, std::abs(mass - initial_mass) / scale);
            for (std::size_t s = 0; s < n; ++s) min_stock_seen = std::min(min_stock_seen, stock[s]);
        }
        return {final_shipped, total_shipped};
    }

    /// Pre-run demand propagation to the ordering fixed point, so that
    /// data-initialized systems start in steady state.
    void cascade_demand(const ShareSet& shares) {
        active = &shares;
        std::vector<double> d = sys.final_demand_;
        for (int it = 0; it < 500; ++it) {
            orders = d;
            for (std::size_t s = 0; s < n; ++s)
                if (sys.claimant_ptr_[s] == sys.claimant_ptr_[s + 1]) orders[s] = 0.0;
            split_orders();
            double diff = 0;
            std::vector<double> next = sys.final_demand_;
            for (std::size_t e = 0; e < sys.edges_.size(); ++e)
                next[sys.edges_[e].to] += claims[e];
            for (std::size_t s = 0; s < n; ++s) diff = std::max(diff, std::abs(next[s] - d[s]));
            d.swap(next);
            if (diff <= 1e-10 * (1.0 + sys.total_final_demand_)) break;
        }
        d_prev = d;
    }
};

}  // namespace detail

RunResult run_simulation(const SimSystem& system, const tensors::OrderTransitionTensor& base,
                         const tensors::OrderTransitionTensor& flexed, const SimConfig& config,
                         const ShockSpec& shock) {
    config.validate();
    shock.validate();
    if (system.total_final_demand() <= 0.0)
        throw ValidationError("sim: zero total final-buyer demand");

    detail::Engine engine(system, config);
    engine.bind_shares(engine.base_shares, base);
    engine.bind_shares(engine.flex_shares, flexed);
    engine.cascade_demand(shock.t_star >= 1 ? engine.base_shares : engine.flex_shares);
    for (double s : engine.stock) engine.initial_mass += s;

    RunResult result;
    result.total_final_demand = system.total_final_demand();
    auto& series = result.series;
    series.final_shipped.reserve(config.horizon);
    series.shipped_total.reserve(config.horizon);
    if (config.record_flows)
        series.inflow.assign(config.horizon, std::vector<double>(system.substock_count(), 0.0));

    for (int day = -config.warmup + 1; day <= 0; ++day) engine.step(day, shock, nullptr);
    for (int day = 1; day <= config.horizon; ++day) {
        std::vector<double>* row = config.record_flows ? &series.inflow[day - 1] : nullptr;
        auto [fin, tot] = engine.step(day, shock, row);
        series.final_shipped.push_back(fin);
        series.shipped_total.push_back(tot);
    }
    series.deficit = deficit_curve(series.final_shipped, system.total_final_demand());
    result.order_conservation_ok = engine.order_conservation_ok;
    result.worst_mass_error = engine.worst_mass_error;
    result.min_stock_seen = engine.min_stock_seen;
    if (config.audit) result.final_stocks = engine.stock;
    return result;
}

std::vector<double> deficit_curve(const std::vector<double>& final_shipped,
                                  double total_final_demand) {
    if (total_final_demand <= 0.0) throw ValidationError("deficit: zero total demand");
    std::vector<double> out(final_shipped.size());
    double unmet = 0;
    for (std::size_t t = 0; t < final_shipped.size(); ++t) {
        unmet += total_final_demand - final_shipped[t];
        double d = unmet / (static_cast<double>(t + 1) * total_final_demand);
        out[t] = std::clamp(d, 0.0, 1.0);
    }
    return out;
}

std::pair<std::vector<double>, bool> path_usage(const MetricsSeries& at_phi,
                                                const MetricsSeries& at_zero,
                                                const MetricsSeries& at_one) {
    const std::size_t days = at_phi.inflow.size();
    if (days == 0 || at_zero.inflow.size() != days || at_one.inflow.size() != days)
        throw ValidationError("path_usage: runs must share horizon and record flows");
    const std::size_t n = at_phi.inflow[0].size();
    std::vector<double> gamma(days, 0.0);
    // Volumes shipped per pair up to day t. Day-level flows oscillate under
    // rationing (a mid-phi run can deviate from the phi=0 run more than the
    // phi=1 run does on isolated days); cumulative volumes measure the
    // alternative-path share the normalization intends.
    std::vector<double> cum_phi(n, 0.0), cum_zero(n, 0.0), cum_one(n, 0.0);
    bool degenerate = false;
    for (std::size_t t = 0; t < days; ++t) {
        double num = 0, den = 0;
        for (std::size_t s = 0; s < n; ++s) {
            cum_phi[s] += at_phi.inflow[t][s];
            cum_zero[s] += at_zero.inflow[t][s];
            cum_one[s] += at_one.inflow[t][s];
            num += std::abs(cum_phi[s] - cum_zero[s]);
            den += std::abs(cum_one[s] - cum_zero[s]);
        }
        if (den > 0.0)
            gamma[t] = std::min(num / den, 1.0);
        else
            degenerate = true;
    }
    return {gamma, degenerate};
}

int resupply_window(const std::vector<double>& deficit, double asd) {
    for (std::size_t t = deficit.size(); t > 0; --t)
        if (deficit[t - 1] <= asd) return static_cast<int>(t);
    return 0;
}

SweepResult sweep_phi(const SimSystem& system, const tensors::OrderTransitionTensor& two_step,
                      const tensors::OrderTransitionTensor& one_step, const SimConfig& config,
                      const ShockSpec& shock, std::vector<double> grid,
                      const std::vector<int>& times, unsigned workers) {
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.empty()) throw ValidationError("sweep: empty phi grid");
    for (double g : grid)
        if (!(g >= 0.0 && g <= 1.0)) throw ValidationError("sweep: phi grid outside [0,1]");
    for (int t : times)
        if (t < 1 || t > config.horizon)
            throw ValidationError("sweep: measurement time outside [1, horizon]");

    std::vector<double> points = grid;
    if (points.front() != 0.0) points.insert(points.begin(), 0.0);
    if (points.back() != 1.0) points.push_back(1.0);

    std::vector<RunResult> runs(points.size());
    SimConfig run_config = config;
    run_config.record_flows = true;
    parallel_for(points.size(), workers, [&](std::size_t k) {
        const auto mixed =
            tensors::mix(two_step, one_step, tensors::Flexibility::homogeneous(points[k]));
        runs[k] = run_simulation(system, two_step, mixed, run_config, shock);
    });

    std::unordered_map<double, std::size_t> slot;
    for (std::size_t k = 0; k < points.size(); ++k) slot[points[k]] = k;
    const RunResult& zero = runs[slot.at(0.0)];
    const RunResult& one = runs[slot.at(1.0)];

    SweepResult sweep;
    sweep.grid = grid;
    std::vector<std::vector<double>> gammas(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        auto [g, degenerate] = path_usage(runs[k].series, zero.series, one.series);
        gammas[k] = std::move(g);
        sweep.gamma_degenerate = sweep.gamma_degenerate || degenerate;
    }

    for (double phi : grid) {
        const std::size_t k = slot.at(phi);
        for (int t = 1; t <= config.horizon; ++t) {
            SweepRow row;
            row.phi = phi;
            row.t = t;
            row.deficit = runs[k].series.deficit[t - 1];
            row.gamma = gammas[k][t - 1];
            row.delta_reduction = zero.series.deficit[t - 1] - row.deficit;
            row.shipped_total = runs[k].series.shipped_total[t - 1];
            row.efficient = true;
            sweep.rows.push_back(row);
        }
    }
    // phi*(t): grid argmin of the deficit, smallest phi on ties.
    for (int t = 1; t <= config.horizon; ++t) {
        double best_phi = grid.front();
        double best = runs[slot.at(grid.front())].series.deficit[t - 1];
        for (double phi : grid) {
            const double d = runs[slot.at(phi)].series.deficit[t - 1];
            if (d < best) {
                best = d;
                best_phi = phi;
            }
        }
        sweep.phi_star.emplace_back(t, best_phi);
    }
    // Efficiency: a row is efficient iff no smaller phi achieves >= the same
    // deficit reduction at that t.
    for (auto& row : sweep.rows) {
        for (double smaller : grid) {
            if (smaller >= row.phi) break;
            const double other =
                zero.series.deficit[row.t - 1] - runs[slot.at(smaller)].series.deficit[row.t - 1];
            if (other >= row.delta_reduction) {
                row.efficient = false;
                break;
            }
        }
    }
    return sweep;
}

void write_sweep(std::ostream& out, const SweepResult& sweep) {
    out << "t,phi,deficit,gamma,delta_reduction,shipped_total\n";
    for (const auto& row : sweep.rows)
        out << row.t << ',' << csv::format_double(row.phi) << ','
            << csv::format_double(row.deficit) << ',' << csv::format_double(row.gamma) << ','
            << csv::format_double(row.delta_reduction) << ','
            << csv::format_double(row.shipped_total) << '\n';
}

}  // namespace distflex::simulate
