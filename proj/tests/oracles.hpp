#pragma once

// Test-only oracles, kept independent of the library implementations they
// cross-check.

#include <array>
#include <deque>
#include <map>
#include <vector>

#include "distflex/ingest.hpp"
#include "distflex/rng.hpp"
#include "distflex/types.hpp"

namespace oracles {

using distflex::EntityCatalog;
using distflex::EntityId;
using distflex::ProductId;
using distflex::Rng;
using distflex::ingest::Transaction;

/// Unit-level FIFO tracer: every package is an individual token carrying its
/// full provenance. Same day semantics as the engine: in input order, with
/// unservable sales retried after the rest of the day and phantom-sourced
/// only when no retry makes progress.
struct TokenTracer {
    struct Result {
        // (product, node sequence) -> delivered package count
        std::map<std::pair<ProductId, std::vector<EntityId>>, long long> paths;
        std::map<std::pair<EntityId, ProductId>, long long> phantom;
        long long delivered = 0;
    };

    static Result trace(const std::vector<Transaction>& txs, const EntityCatalog& catalog) {
        Result result;
        std::map<std::pair<EntityId, ProductId>, std::deque<std::vector<EntityId>>> stock;

        auto servable = [&](const Transaction& tx) {
            if (catalog.is_manufacturer(tx.seller)) return true;
            auto it = stock.find({tx.seller, tx.product});
            const long long have = it == stock.end() ? 0 : static_cast<long long>(it->second.size());
            return have >= tx.quantity;
        };
        auto process = [&](const Transaction& tx) {
            if (catalog.is_final_buyer(tx.seller) || catalog.is_manufacturer(tx.buyer)) return;
            auto& q = stock[{tx.seller, tx.product}];
            for (long long u = 0; u < tx.quantity; ++u) {
                std::vector<EntityId> provenance;
                if (catalog.is_manufacturer(tx.seller)) {
                    provenance = {tx.seller};
                } else if (!q.empty()) {
                    provenance = std::move(q.front());
                    q.pop_front();
                } else {
                    provenance = {tx.seller};  // phantom token
                    result.phantom[{tx.seller, tx.product}] += 1;
                }
                if (catalog.is_final_buyer(tx.buyer)) {
                    result.paths[{tx.product, provenance}] += 1;
                    result.delivered += 1;
                } else {
                    provenance.push_back(tx.buyer);
                    stock[{tx.buyer, tx.product}].push_back(std::move(provenance));
                }
            }
        };

        std::size_t i = 0;
        while (i < txs.size()) {
            std::size_t j = i;
            std::vector<const Transaction*> deferred, still;
            while (j < txs.size() && txs[j].date == txs[i].date) {
                if (servable(txs[j]))
                    process(txs[j]);
                else
                    deferred.push_back(&txs[j]);
                ++j;
            }
            while (!deferred.empty()) {
                still.clear();
                bool progress = false;
                for (const auto* tx : deferred) {
                    if (servable(*tx)) {
                        process(*tx);
                        progress = true;
                    } else {
                        still.push_back(tx);
                    }
                }
                if (!progress) {
                    for (const auto* tx : still) process(*tx);  // phantom remainder
                    break;
                }
                deferred.swap(still);
            }
            i = j;
        }
        return result;
    }
};

/// Random transaction log for FIFO equivalence checks: tiered sales with
/// deliberate underflows and same-day chains.
inline std::vector<Transaction> random_log(EntityCatalog& catalog, std::size_t max_txs, Rng& rng) {
    const int n_m = static_cast<int>(rng.range(1, 3));
    const int n_d = static_cast<int>(rng.range(2, 8));
    const int n_f = static_cast<int>(rng.range(2, 6));
    std::vector<EntityId> ms, ds, fs;
    for (int k = 0; k < n_m; ++k) ms.push_back(catalog.add("m" + std::to_string(k), distflex::Role::Manufacturer));
    for (int k = 0; k < n_d; ++k) ds.push_back(catalog.add("d" + std::to_string(k), distflex::Role::Distributor));
    for (int k = 0; k < n_f; ++k) fs.push_back(catalog.add("f" + std::to_string(k), distflex::Role::FinalBuyer));
    const int n_products = static_cast<int>(rng.range(1, 2));

    std::vector<Transaction> txs;
    distflex::Day day = 0;
    const std::size_t n = rng.below(max_txs) + 1;
    for (std::size_t k = 0; k < n; ++k) {
        if (rng.uniform() < 0.55) day += static_cast<distflex::Day>(rng.range(0, 2));
        Transaction tx;
        tx.date = day;
        tx.product = static_cast<ProductId>(rng.range(1, n_products));
        tx.quantity = rng.range(1, 12);
        const double what = rng.uniform();
        if (what < 0.45) {  // manufacturer -> distributor
            tx.seller = ms[rng.below(ms.size())];
            tx.buyer = ds[rng.below(ds.size())];
        } else if (what < 0.7) {  // distributor -> distributor
            tx.seller = ds[rng.below(ds.size())];
            do {
                tx.buyer = ds[rng.below(ds.size())];
            } while (tx.buyer == tx.seller);
        } else {  // distributor -> final buyer
            tx.seller = ds[rng.below(ds.size())];
            tx.buyer = fs[rng.below(fs.size())];
        }
        txs.push_back(tx);
    }
    return txs;
}

/// Brute-force sub-path window enumeration for path_counts cross-checks.
struct WindowCounts {
    std::map<std::array<EntityId, 3>, double> triples;  // (orderer, via, source)
    std::map<std::array<EntityId, 2>, double> pairs;
};

inline WindowCounts enumerate_windows(
    const std::vector<std::pair<std::vector<EntityId>, long long>>& paths) {
    WindowCounts w;
    for (const auto& [nodes, count] : paths) {
        for (std::size_t t = 1; t < nodes.size(); ++t) {
            w.pairs[{nodes[t], nodes[t - 1]}] += static_cast<double>(count);
            if (t >= 2) w.triples[{nodes[t], nodes[t - 1], nodes[t - 2]}] += static_cast<double>(count);
        }
    }
    return w;
}

}  // namespace oracles
