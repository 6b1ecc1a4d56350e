#include "distflex/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "distflex/csv.hpp"
#include "distflex/rng.hpp"

namespace distflex::ingest {

void SynthSpec::validate() const {
    if (n_manufacturers == 0) throw ValidationError("synth: n_manufacturers must be positive");
    if (n_final_buyers == 0) throw ValidationError("synth: n_final_buyers must be positive");
    if (tiers < 1) throw ValidationError("synth: tiers must be >= 1");
    if (!(overlap >= 0.0 && overlap <= 1.0)) throw ValidationError("synth: overlap must be in [0,1]");
    if (!(volume_scale > 0.0)) throw ValidationError("synth: volume_scale must be positive");
    if (years < 1) throw ValidationError("synth: years must be >= 1");
    if (batches_per_year < 1 || batches_per_year > 300)
        throw ValidationError("synth: batches_per_year must be in [1,300]");
}

std::vector<Transaction> parse_transactions(std::istream& in, const EntityCatalog& catalog,
                                            Interner& products) {
    csv::Reader reader(in, "date,seller_id,buyer_id,product_code,quantity", "transactions");
    std::vector<Transaction> txs;
    csv::Row row;
    while (reader.next(row)) {
        Transaction tx;
        tx.date = parse_iso_date(row.fields[0]);
        EntityId seller = catalog.ids.find(row.fields[1]);
        if (seller == kNoEntity)
            throw ValidationError("transactions: line " + std::to_string(row.line_no) +
                                  ": unknown entity '" + std::string(row.fields[1]) + "'");
        EntityId buyer = catalog.ids.find(row.fields[2]);
        if (buyer == kNoEntity)
            throw ValidationError("transactions: line " + std::to_string(row.line_no) +
                                  ": unknown entity '" + std::string(row.fields[2]) + "'");
        if (seller == buyer)
            throw ValidationError("transactions: line " + std::to_string(row.line_no) +
                                  ": seller equals buyer ('" + std::string(row.fields[1]) + "')");
        tx.seller = seller;
        tx.buyer = buyer;
        tx.product = products.intern(row.fields[3]);
        tx.quantity = csv::parse_int(row.fields[4], "transactions", row.line_no);
        if (tx.quantity <= 0)
            throw ValidationError("transactions: line " + std::to_string(row.line_no) +
                                  ": non-positive quantity " + std::to_string(tx.quantity));
        txs.push_back(tx);
    }
    std::stable_sort(txs.begin(), txs.end(),
                     [](const Transaction& a, const Transaction& b) { return a.date < b.date; });
    return txs;
}

void write_transactions(std::ostream& out, const std::vector<Transaction>& txs,
                        const EntityCatalog& catalog, const Interner& products) {
    out << "date,seller_id,buyer_id,product_code,quantity\n";
    for (const auto& tx : txs) {
        out << format_iso_date(tx.date) << ',' << catalog.ids.name(tx.seller) << ','
            << catalog.ids.name(tx.buyer) << ',' << products.name(tx.product) << ',' << tx.quantity
            << '\n';
    }
}

EntityCatalog parse_catalog(std::istream& in) {
    csv::Reader reader(in, "entity_id,role", "catalog");
    EntityCatalog catalog;
    csv::Row row;
    while (reader.next(row)) {
        if (row.fields[0].empty() || row.fields[0] == kSourceName)
            throw ValidationError("catalog: line " + std::to_string(row.line_no) +
                                  ": reserved or empty entity id");
        if (catalog.contains(row.fields[0]))
            throw ValidationError("catalog: line " + std::to_string(row.line_no) +
                                  ": duplicate entity '" + std::string(row.fields[0]) + "'");
        catalog.add(row.fields[0], parse_role(row.fields[1]));
    }
    return catalog;
}

void write_catalog(std::ostream& out, const EntityCatalog& catalog) {
    out << "entity_id,role\n";
    for (EntityId id = 1; id < catalog.ids.size(); ++id)
        out << catalog.ids.name(id) << ',' << role_name(catalog.role(id)) << '\n';
}

std::map<std::string, ProductRule> parse_rules(std::istream& in) {
    csv::Reader reader(in, "product_code,ingredient,form,strength", "rules");
    std::map<std::string, ProductRule> rules;
    csv::Row row;
    while (reader.next(row)) {
        ProductRule rule{std::string(row.fields[1]), std::string(row.fields[2]),
                         std::string(row.fields[3])};
        if (rule.ingredient.empty())
            throw ValidationError("rules: line " + std::to_string(row.line_no) +
                                  ": empty ingredient");
        rules[std::string(row.fields[0])] = std::move(rule);
    }
    return rules;
}

void write_rules(std::ostream& out, const std::map<std::string, ProductRule>& rules) {
    out << "product_code,ingredient,form,strength\n";
    for (const auto& [code, rule] : rules)
        out << code << ',' << rule.ingredient << ',' << rule.form << ',' << rule.strength << '\n';
}

std::vector<EquivalenceClass> group_substitutables(const std::vector<std::string>& products,
                                                   const std::map<std::string, ProductRule>& rules) {
    std::map<std::string, std::vector<std::string>> by_ingredient;
    for (const auto& code : products) {
        auto it = rules.find(code);
        if (it == rules.end())
            throw ValidationError("substitutability: product '" + code + "' has no rule entry");
        by_ingredient[it->second.ingredient].push_back(code);
    }
    std::vector<EquivalenceClass> classes;
    classes.reserve(by_ingredient.size());
    for (auto& [ingredient, members] : by_ingredient) {
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        classes.push_back(EquivalenceClass{ingredient, std::move(members)});
    }
    return classes;
}

// ---------------------------------------------------------------------------
// Synthetic system generation.
//
// The generator plans explicit routes (manufacturer -> distributors -> final
// buyer) and emits each route's annual volume as `batches_per_year` waves.
// Hop h of batch b exists only when b <= B - h + 1, so every node on a route
// retains exactly one batch per year: ship-in >= ship-out holds per
// distributor-year by construction, and because a hop always lands one day
// before the next hop departs, FIFO custody reproduces the planned routes
// exactly (see pathrec tests).
// ---------------------------------------------------------------------------

namespace {

struct Route {
    EntityId buyer;
    ProductId product;                // interned product id
    std::vector<EntityId> chain;      // manufacturer first, then distributors
    std::vector<std::int64_t> annual; // volume per year
    std::vector<std::uint32_t> cum_retention;  // per hop: batches held back upstream of it
};

// Largest-remainder split of `total` into parts proportional to weights.
std::vector<std::int64_t> integer_split(std::int64_t total, const std::vector<double>& weights) {
    double wsum = 0;
    for (double w : weights) wsum += w;
    std::vector<std::int64_t> parts(weights.size(), 0);
    if (total <= 0 || wsum <= 0) return parts;
    std::vector<std::pair<double, std::size_t>> rema;
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double exact = static_cast<double>(total) * weights[i] / wsum;
        parts[i] = static_cast<std::int64_t>(exact);
        assigned += parts[i];
        rema.emplace_back(exact - static_cast<double>(parts[i]), i);
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::int64_t k = 0; k < total - assigned; ++k) parts[rema[static_cast<std::size_t>(k) % rema.size()].second] += 1;
    return parts;
}

std::uint64_t pair_key(EntityId a, EntityId b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

SyntheticSystem generate_synthetic_system(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    SyntheticSystem sys;
    sys.product_codes = {"AX-100", "AX-200"};
    sys.rules["AX-100"] = ProductRule{"ax", "tablet", "100mg"};
    sys.rules["AX-200"] = ProductRule{"ax", "vial", "200mg"};
    const std::size_t n_products = sys.product_codes.size();
    std::vector<ProductId> pids;
    for (const auto& code : sys.product_codes) pids.push_back(sys.products.intern(code));

    auto pad = [](const char* prefix, std::uint32_t i) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "%s%05u", prefix, i);
        return std::string(buf);
    };

    std::vector<EntityId> manufacturers, distributors, buyers;
    for (std::uint32_t i = 0; i < spec.n_manufacturers; ++i)
        manufacturers.push_back(sys.catalog.add(pad("M", i), Role::Manufacturer));
    for (std::uint32_t i = 0; i < spec.n_distributors; ++i)
        distributors.push_back(sys.catalog.add(pad("D", i), Role::Distributor));
    for (std::uint32_t i = 0; i < spec.n_final_buyers; ++i)
        buyers.push_back(sys.catalog.add(pad("F", i), Role::FinalBuyer));

    // Tier layout: distributors split into at most `tiers` non-empty layers.
    const std::uint32_t tiers_eff =
        spec.n_distributors == 0 ? 0 : std::min<std::uint32_t>(spec.tiers, spec.n_distributors);
    std::vector<std::vector<EntityId>> tier_nodes(tiers_eff);
    for (std::uint32_t t = 0, idx = 0; t < tiers_eff; ++t) {
        std::uint32_t size = spec.n_distributors / tiers_eff + (t < spec.n_distributors % tiers_eff ? 1 : 0);
        for (std::uint32_t k = 0; k < size; ++k) tier_nodes[t].push_back(distributors[idx++]);
    }

    // Per-product tier membership with the requested shared fraction.
    std::vector<std::vector<std::vector<EntityId>>> sets(n_products,
                                                         std::vector<std::vector<EntityId>>(tiers_eff));
    for (std::uint32_t t = 0; t < tiers_eff; ++t) {
        std::vector<EntityId> layer = tier_nodes[t];
        for (std::size_t i = layer.size(); i > 1; --i)
            std::swap(layer[i - 1], layer[rng.below(i)]);
        const std::size_t m = layer.size();
        const auto n_shared = static_cast<std::size_t>(std::lround(spec.overlap * static_cast<double>(m)));
        const std::size_t rest = m - n_shared;
        const std::size_t excl_a = (rest + 1) / 2;
        for (std::size_t i = 0; i < m; ++i) {
            bool in_a = i < n_shared + excl_a;
            bool in_b = i < n_shared || i >= n_shared + excl_a;
            if (in_a) sets[0][t].push_back(layer[i]);
            if (in_b) sets[1][t].push_back(layer[i]);
        }
        for (std::size_t p = 0; p < n_products; ++p)
            if (sets[p][t].empty()) sets[p][t].push_back(layer[0]);
    }

    // Upstream options per (product, node): 1-2 nodes of the layer above
    // (manufacturers above tier 0).
    std::vector<std::unordered_map<EntityId, std::vector<EntityId>>> ups(n_products);
    for (std::size_t p = 0; p < n_products; ++p) {
        for (std::uint32_t t = 0; t < tiers_eff; ++t) {
            const std::vector<EntityId>& pool = t == 0 ? manufacturers : sets[p][t - 1];
            for (EntityId d : sets[p][t]) {
                std::size_t want = pool.size() >= 2 && rng.uniform() < 0.8 ? 2 : 1;
                std::vector<EntityId>& u = ups[p][d];
                while (u.size() < want) {
                    EntityId cand = pool[rng.below(pool.size())];
                    if (std::find(u.begin(), u.end(), cand) == u.end()) u.push_back(cand);
                }
            }
        }
    }

    // 2-step route preference: for a (child, parent) pair, which of the
    // parent's upstream options the child's orders travel through. "Hard"
    // pairs pin a single option, which is what creates unobserved-but-
    // possible alternative paths in the reconstructed tensors.
    std::vector<std::unordered_map<std::uint64_t, std::vector<std::pair<EntityId, double>>>> prefs(
        n_products);
    auto pref_of = [&](std::size_t p, EntityId child, EntityId parent)
        -> const std::vector<std::pair<EntityId, double>>& {
        auto key = pair_key(child, parent);
        auto it = prefs[p].find(key);
        if (it != prefs[p].end()) return it->second;
        const std::vector<EntityId>& options = ups[p][parent];
        std::vector<std::pair<EntityId, double>> choice;
        if (options.size() <= 1 || rng.uniform() < 0.65) {
            choice.emplace_back(options[options.empty() ? 0 : rng.below(options.size())], 1.0);
        } else {
            double w = 0.15 + 0.7 * rng.uniform();
            choice.emplace_back(options[0], w);
            choice.emplace_back(options[1], 1.0 - w);
        }
        return prefs[p].emplace(key, std::move(choice)).first->second;
    };

    // Expand the chains reachable from a terminal supplier, deepest tier
    // first. Chains are stored manufacturer-first.
    struct Partial {
        std::vector<EntityId> rev;  // supplier first, walking upstream
        double weight;
    };
    auto expand_chains = [&](std::size_t p, EntityId supplier) {
        std::vector<Partial> done, frontier{{std::vector<EntityId>{supplier}, 1.0}};
        // Top-level supplier uses all of its upstream options.
        while (!frontier.empty()) {
            Partial cur = std::move(frontier.back());
            frontier.pop_back();
            EntityId tail = cur.rev.back();
            if (sys.catalog.is_manufacturer(tail)) {
                done.push_back(std::move(cur));
                continue;
            }
            if (cur.rev.size() == 1) {
                const std::vector<EntityId>& options = ups[p][tail];
                double share = 1.0 / static_cast<double>(options.size());
                for (EntityId u : options) {
                    Partial next = cur;
                    next.rev.push_back(u);
                    next.weight *= share;
                    frontier.push_back(std::move(next));
                }
            } else {
                EntityId child = cur.rev[cur.rev.size() - 2];
                for (const auto& [u, w] : pref_of(p, child, tail)) {
                    Partial next = cur;
                    next.rev.push_back(u);
                    next.weight *= w;
                    frontier.push_back(std::move(next));
                }
            }
        }
        std::sort(done.begin(), done.end(), [](const Partial& a, const Partial& b) {
            if (a.weight != b.weight) return a.weight > b.weight;
            return a.rev < b.rev;
        });
        if (done.size() > 6) done.resize(6);
        for (auto& c : done) std::reverse(c.rev.begin(), c.rev.end());
        return done;
    };

    std::vector<Route> routes;

    for (std::size_t f = 0; f < buyers.size(); ++f) {
        bool buys[2];
        buys[0] = rng.uniform() < 0.8;
        buys[1] = rng.uniform() < 0.8;
        if (!buys[0] && !buys[1]) buys[f % 2] = true;
        for (std::size_t p = 0; p < n_products; ++p) {
            if (!buys[p]) continue;
            const std::vector<EntityId>& pool =
                tiers_eff == 0 ? manufacturers : sets[p][tiers_eff - 1];
            std::size_t n_sup = pool.size() >= 2 && rng.uniform() < 0.5 ? 2 : 1;
            std::vector<EntityId> sups;
            while (sups.size() < n_sup) {
                EntityId cand = pool[rng.below(pool.size())];
                if (std::find(sups.begin(), sups.end(), cand) == sups.end()) sups.push_back(cand);
            }
            std::vector<std::size_t> group;
            std::vector<double> weights;
            for (EntityId s : sups) {
                double sup_w = 0.25 + rng.uniform();
                if (sys.catalog.is_manufacturer(s)) {
                    routes.push_back(Route{buyers[f], pids[p], {s}, {}, {}});
                    group.push_back(routes.size() - 1);
                    weights.push_back(sup_w);
                } else {
                    for (auto& chain : expand_chains(p, s)) {
                        routes.push_back(
                            Route{buyers[f], pids[p], std::move(chain.rev), {}, {}});
                        group.push_back(routes.size() - 1);
                        weights.push_back(sup_w * chain.weight);
                    }
                }
            }
            // Draw per-year demand and split it across the group's routes.
            for (std::uint32_t y = 0; y < spec.years; ++y) {
                auto demand = static_cast<std::int64_t>(
                    std::llround(rng.lognormal(std::log(spec.volume_scale), 0.75)));
                demand = std::max<std::int64_t>(demand, 1);
                auto parts = integer_split(demand, weights);
                for (std::size_t k = 0; k < group.size(); ++k) {
                    auto& annual = routes[group[k]].annual;
                    annual.resize(spec.years, 0);
                    annual[y] = parts[k];
                }
            }
        }
    }

    // Coverage patches: every distributor in a product's tier sets must carry
    // at least one route of that product (overlap semantics depend on it).
    for (std::size_t p = 0; p < n_products; ++p) {
        std::unordered_set<EntityId> covered;
        for (const Route& r : routes)
            if (r.product == pids[p])
                for (std::size_t i = 1; i < r.chain.size(); ++i) covered.insert(r.chain[i]);
        for (std::uint32_t t = 0; t < tiers_eff; ++t) {
            for (EntityId d : sets[p][t]) {
                if (covered.count(d)) continue;
                std::vector<EntityId> chain{d};
                while (!sys.catalog.is_manufacturer(chain.front())) {
                    const std::vector<EntityId>& u = ups[p][chain.front()];
                    chain.insert(chain.begin(), u[0]);
                }
                for (std::uint32_t tt = t + 1; tt < tiers_eff; ++tt) {
                    const std::vector<EntityId>& pool = sets[p][tt];
                    EntityId next = kNoEntity;
                    for (EntityId cand : pool) {
                        const std::vector<EntityId>& u = ups[p][cand];
                        if (std::find(u.begin(), u.end(), chain.back()) != u.end()) {
                            next = cand;
                            break;
                        }
                    }
                    if (next == kNoEntity) next = pool[rng.below(pool.size())];
                    chain.push_back(next);
                }
                Route patch;
                patch.buyer = buyers[rng.below(buyers.size())];
                patch.product = pids[p];
                patch.chain = std::move(chain);
                patch.annual.assign(spec.years, 0);
                auto vol = static_cast<std::int64_t>(std::llround(spec.volume_scale / 4.0));
                for (std::uint32_t y = 0; y < spec.years; ++y)
                    patch.annual[y] = std::max<std::int64_t>(vol, spec.batches_per_year);
                for (std::size_t i = 1; i < patch.chain.size(); ++i) covered.insert(patch.chain[i]);
                routes.push_back(std::move(patch));
            }
        }
    }

    // Triangle routes: three rotations of a same-tier 3-cycle per product.
    // Real distribution systems trade laterally, which keeps the second-order
    // chain non-nilpotent (the slow-down factor needs recurrent structure).
    for (std::size_t p = 0; p < n_products; ++p) {
        std::uint32_t best_tier = 0;
        for (std::uint32_t t = 1; t < tiers_eff; ++t)
            if (sets[p][t].size() > sets[p][best_tier].size()) best_tier = t;
        if (tiers_eff == 0 || sets[p][best_tier].size() < 3) continue;
        const std::size_t n_triangles = 1 + (spec.n_distributors >= 30 ? 1 : 0);
        for (std::size_t tri = 0; tri < n_triangles; ++tri) {
            const auto& pool = sets[p][best_tier];
            std::array<EntityId, 3> corner{};
            corner[0] = pool[rng.below(pool.size())];
            do corner[1] = pool[rng.below(pool.size())];
            while (corner[1] == corner[0]);
            do corner[2] = pool[rng.below(pool.size())];
            while (corner[2] == corner[0] || corner[2] == corner[1]);
            for (int rot = 0; rot < 3; ++rot) {
                std::vector<EntityId> chain{corner[rot % 3], corner[(rot + 1) % 3],
                                            corner[(rot + 2) % 3]};
                while (!sys.catalog.is_manufacturer(chain.front())) {
                    const std::vector<EntityId>& u = ups[p][chain.front()];
                    chain.insert(chain.begin(), u[0]);
                }
                for (std::uint32_t tt = best_tier + 1; tt < tiers_eff; ++tt) {
                    const auto& next_pool = sets[p][tt];
                    chain.push_back(next_pool[rng.below(next_pool.size())]);
                }
                Route loop;
                loop.buyer = buyers[rng.below(buyers.size())];
                loop.product = pids[p];
                loop.chain = std::move(chain);
                loop.annual.assign(spec.years, 0);
                const auto vol = std::max<std::int64_t>(
                    static_cast<std::int64_t>(std::llround(spec.volume_scale / 20.0)),
                    spec.batches_per_year);
                for (std::uint32_t y = 0; y < spec.years; ++y) loop.annual[y] = vol;
                routes.push_back(std::move(loop));
            }
        }
    }

    // Heterogeneous buffers: every supply edge has a fixed holding policy,
    // thin (one batch) or deep (up to a third of the year's batches), applied
    // by the receiving distributor to goods from that sender. Sibling
    // sub-stocks of one holder then differ in depth, which is what makes
    // substitution worth anything in a stress test: uniform buffers drain in
    // lockstep and leave no idle stock for alternative routes to reach.
    const std::uint32_t B = spec.batches_per_year;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_keep;
    auto keep_of = [&](EntityId from, EntityId to) {
        auto [it, fresh] = edge_keep.try_emplace(pair_key(from, to), 0);
        if (fresh) {
            std::uint32_t keep = 1;
            if (rng.uniform() < 0.5)
                keep += static_cast<std::uint32_t>(rng.below(std::max<std::uint32_t>(2, B / 3)));
            it->second = keep;
        }
        return it->second;
    };
    for (Route& route : routes) {
        route.cum_retention.assign(route.chain.size() + 1, 0);
        std::uint32_t cum = 0;
        for (std::size_t h = 1; h <= route.chain.size(); ++h) {
            route.cum_retention[h - 1] = cum;
            if (h == route.chain.size()) {  // hop h leaves the last chain node
                route.cum_retention[h] = cum;
                break;
            }
            cum = std::min(cum + keep_of(route.chain[h - 1], route.chain[h]),
                           B > 1 ? B - 1 : 0);
            route.cum_retention[h] = cum;
        }
    }

    // Emission: batch-major then route-major so that same-day FIFO order is
    // consistent between a node's ship-ins and ship-outs.
    const int max_hops = static_cast<int>(tiers_eff) + 3;  // triangle routes add two lateral hops
    const int period = std::max(1, (360 - max_hops) / static_cast<int>(B));
    std::vector<int> phase(routes.size());
    for (std::size_t r = 0; r < routes.size(); ++r)
        phase[r] = static_cast<int>((r * 2654435761ULL) % static_cast<std::uint64_t>(period));

    std::vector<Transaction>& txs = sys.transactions;
    for (std::uint32_t y = 0; y < spec.years; ++y) {
        const Day year_start = day_from_ymd(spec.start_year + static_cast<int>(y), 1, 1);
        for (std::uint32_t b = 1; b <= B; ++b) {
            for (std::size_t r = 0; r < routes.size(); ++r) {
                const Route& route = routes[r];
                const std::int64_t annual = route.annual[y];
                std::int64_t vol = annual / B + (b <= static_cast<std::uint32_t>(annual % B) ? 1 : 0);
                if (vol <= 0) continue;
                const std::size_t n_hops = route.chain.size();  // chain hops + final hop
                for (std::size_t h = 1; h <= n_hops; ++h) {
                    if (b > B - route.cum_retention[h - 1]) break;  // retained tail batches
                    Transaction tx;
                    tx.date = year_start + phase[r] + static_cast<int>(b - 1) * period +
                              static_cast<int>(h - 1);
                    tx.seller = route.chain[h - 1];
                    tx.buyer = h < n_hops ? route.chain[h] : route.buyer;
                    tx.product = route.product;
                    tx.quantity = vol;
                    txs.push_back(tx);
                }
            }
        }
    }
    std::stable_sort(txs.begin(), txs.end(),
                     [](const Transaction& a, const Transaction& b) { return a.date < b.date; });
    return sys;
}

}  // namespace distflex::ingest
