#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "distflex/ingest.hpp"
#include "distflex/types.hpp"

namespace distflex::pathrec {

/// Interned path prefixes: a trie node per (parent prefix, entity). Keeps
/// per-package provenance sharable so reconstruction stays O(transactions)
/// in memory instead of O(packages).
class PathTable {
  public:
    static constexpr std::uint32_t kRoot = 0;

    std::uint32_t extend(std::uint32_t parent, EntityId node) {
        const std::uint64_t key = (static_cast<std::uint64_t>(parent) << 32) | node;
        auto it = index_.find(key);
        if (it != index_.end()) return it->second;
        auto id = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back(Node{parent, node, nodes_[parent].depth + 1});
        index_.emplace(key, id);
        return id;
    }

    EntityId entity(std::uint32_t id) const { return nodes_[id].entity; }
    std::uint32_t parent(std::uint32_t id) const { return nodes_[id].parent; }
    std::uint32_t depth(std::uint32_t id) const { return nodes_[id].depth; }

    EntityId root_entity(std::uint32_t id) const {
        while (nodes_[id].parent != kRoot) id = nodes_[id].parent;
        return nodes_[id].entity;
    }

    /// Nodes from the path head (manufacturer or phantom root) to the holder.
    std::vector<EntityId> materialize(std::uint32_t id) const {
        std::vector<EntityId> out(nodes_[id].depth);
        for (std::size_t i = out.size(); id != kRoot; id = nodes_[id].parent) out[--i] = nodes_[id].entity;
        return out;
    }

    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        std::uint32_t parent;
        EntityId entity;
        std::uint32_t depth;
    };
    std::vector<Node> nodes_{Node{0, kNoEntity, 0}};
    std::unordered_map<std::uint64_t, std::uint32_t> index_;
};

/// A completed distribution path: manufacturer first, then the distributor
/// sequence; final buyers never appear. `phantom` marks paths whose head is
/// not a manufacturer (stock underflow provenance).
struct DistributionPath {
    std::vector<EntityId> nodes;
    ProductId product = 0;
    std::int64_t count = 0;
    bool phantom = false;
};

struct PathMultiset {
    PathTable table;
    std::unordered_map<std::uint64_t, std::int64_t> counts;  // (prefix<<32|product) -> packages
    Day window_start = 0;
    Day window_end = 0;

    void add(std::uint32_t prefix, ProductId product, std::int64_t n) {
        counts[(static_cast<std::uint64_t>(prefix) << 32) | product] += n;
    }

    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto& [k, v] : counts) t += v;
        return t;
    }
    std::int64_t total_phantom(const EntityCatalog& catalog) const;

    /// Deterministically ordered materialization (product, then node tuple).
    std::vector<DistributionPath> materialized(const EntityCatalog& catalog) const;
};

struct ReconstructReport {
    struct Underflow {
        EntityId entity;
        ProductId product;
        std::int64_t phantom_units;
    };
    std::vector<Underflow> underflows;  // aggregated per (entity, product), sorted
    std::int64_t phantom_units_total = 0;
    std::int64_t delivered_units = 0;              // packages that reached final buyers
    std::int64_t final_buyer_sales_skipped = 0;    // transactions ignored: seller is a final buyer
    std::int64_t manufacturer_purchases_skipped = 0;  // transactions ignored: buyer is a manufacturer
};

/// FIFO path reconstruction over a date-sorted log. Same-day transactions run
/// in input order; a distributor sale that exceeds current stock is retried
/// after the rest of the day's transactions, and only then phantom-sourced.
/// workers > 1 splits the log by product code (queues are disjoint) and
/// produces byte-identical results to the sequential run.
PathMultiset reconstruct_paths(const std::vector<ingest::Transaction>& txs,
                               const EntityCatalog& catalog, ReconstructReport& report,
                               unsigned workers = 1);

/// A_ijk counts of order sub-paths (k -> j -> i in shipment direction),
/// including occurrences inside longer paths, plus the first-order margin of
/// (orderer, source) pair counts. Defined in tensors.cpp; declared here to
/// keep the operation with its module. See tensors.hpp for CountTensor.
// (path_counts lives in tensors.hpp to avoid a circular include)

/// Count-weighted mean 1-based position of each distributor in the
/// distributor sequence (path head excluded). Entities appearing in no path
/// are absent.
std::unordered_map<EntityId, double> distributor_positions(const PathMultiset& paths);

/// Fraction of each entity's path outflow that terminates at final buyers
/// (path-end occurrences / all occurrences). Keys are the final-distributor
/// set Omega used by the second-order chain.
std::unordered_map<EntityId, double> final_shipment_fractions(const PathMultiset& paths);

void write_paths(std::ostream& out, const PathMultiset& paths, const EntityCatalog& catalog,
                 const Interner& products);
PathMultiset parse_paths(std::istream& in, const EntityCatalog& catalog, Interner& products);

void write_underflow_report(std::ostream& out, const ReconstructReport& report,
                            const EntityCatalog& catalog, const Interner& products);

}  // namespace distflex::pathrec
