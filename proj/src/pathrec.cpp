#include "distflex/pathrec.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "distflex/csv.hpp"
#include "distflex/parallel.hpp"

namespace distflex::pathrec {

namespace {

// Vector-backed FIFO with a running total so whole-transaction servability
// is an O(1) check.
struct Fifo {
    struct Entry {
        std::uint32_t prefix;
        std::int64_t qty;
    };
    std::vector<Entry> buf;
    std::size_t head = 0;
    std::int64_t total = 0;

    void push(std::uint32_t prefix, std::int64_t qty) {
        if (buf.size() > head && buf.back().prefix == prefix)
            buf.back().qty += qty;  // merge only into a live tail entry
        else
            buf.push_back(Entry{prefix, qty});
        total += qty;
    }
    void compact() {
        if (head > 64 && head * 2 > buf.size()) {
            buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(head));
            head = 0;
        }
    }
};

std::uint64_t qkey(EntityId entity, ProductId product) {
    return (static_cast<std::uint64_t>(entity) << 32) | product;
}

struct Tracer {
    const EntityCatalog& catalog;
    PathMultiset& out;
    ReconstructReport& report;
    std::unordered_map<std::uint64_t, Fifo> queues;
    std::unordered_map<std::uint64_t, std::int64_t> phantom;  // (entity,product) -> units

    explicit Tracer(const EntityCatalog& catalog_, PathMultiset& out_, ReconstructReport& report_)
        : catalog(catalog_), out(out_), report(report_) {}

    void deliver(std::uint32_t prefix, ProductId product, std::int64_t qty, EntityId buyer) {
        if (catalog.is_final_buyer(buyer)) {
            out.add(prefix, product, qty);
            report.delivered_units += qty;
        } else {
            queues[qkey(buyer, product)].push(out.table.extend(prefix, buyer), qty);
        }
    }

    // Returns false when the sale cannot currently be served in full and may
    // be retried later in the day. allow_phantom forces completion.
    bool process(const ingest::Transaction& tx, bool allow_phantom) {
        if (catalog.is_final_buyer(tx.seller)) {
            ++report.final_buyer_sales_skipped;
            return true;
        }
        if (catalog.is_manufacturer(tx.buyer)) {
            ++report.manufacturer_purchases_skipped;
            return true;
        }
        if (catalog.is_manufacturer(tx.seller)) {
            deliver(out.table.extend(PathTable::kRoot, tx.seller), tx.product, tx.quantity, tx.buyer);
            return true;
        }
        Fifo& q = queues[qkey(tx.seller, tx.product)];
        if (q.total < tx.quantity && !allow_phantom) return false;

        std::int64_t need = tx.quantity;
        while (need > 0 && q.head < q.buf.size()) {
            Fifo::Entry& e = q.buf[q.head];
            const std::int64_t take = std::min(e.qty, need);
            deliver(e.prefix, tx.product, take, tx.buyer);
            e.qty -= take;
            q.total -= take;
            need -= take;
            if (e.qty == 0) ++q.head;
        }
        q.compact();
        if (need > 0) {
            // Left-censored stock: source the remainder from a phantom entry
            // whose provenance starts at the seller.
            phantom[qkey(tx.seller, tx.product)] += need;
            deliver(out.table.extend(PathTable::kRoot, tx.seller), tx.product, need, tx.buyer);
        }
        return true;
    }
};

void run_sequential(const std::vector<ingest::Transaction>& txs, const EntityCatalog& catalog,
                    PathMultiset& out, ReconstructReport& report) {
    Tracer tracer(catalog, out, report);
    std::vector<const ingest::Transaction*> deferred, still;
    std::size_t i = 0;
    while (i < txs.size()) {
        std::size_t j = i;
        const Day day = txs[i].date;
        deferred.clear();
        for (; j < txs.size() && txs[j].date == day; ++j)
            if (!tracer.process(txs[j], false)) deferred.push_back(&txs[j]);
        while (!deferred.empty()) {
            still.clear();
            for (const auto* tx : deferred)
                if (!tracer.process(*tx, false)) still.push_back(tx);
            if (still.size() == deferred.size()) {  // no progress: phantom-source the rest
                for (const auto* tx : still) tracer.process(*tx, true);
                break;
            }
            deferred.swap(still);
        }
        i = j;
    }
    std::map<std::uint64_t, std::int64_t> sorted(tracer.phantom.begin(), tracer.phantom.end());
    for (const auto& [key, units] : sorted) {
        report.underflows.push_back(ReconstructReport::Underflow{
            static_cast<EntityId>(key >> 32), static_cast<ProductId>(key & 0xffffffffu), units});
        report.phantom_units_total += units;
    }
}

}  // namespace

PathMultiset reconstruct_paths(const std::vector<ingest::Transaction>& txs,
                               const EntityCatalog& catalog, ReconstructReport& report,
                               unsigned workers) {
    report = ReconstructReport{};
    PathMultiset out;
    if (!txs.empty()) {
        out.window_start = txs.front().date;
        out.window_end = txs.back().date;
    }
    for (std::size_t k = 1; k < txs.size(); ++k)
        if (txs[k].date < txs[k - 1].date)
            throw ValidationError("reconstruct: transactions are not date-sorted");

    if (workers <= 1) {
        run_sequential(txs, catalog, out, report);
        return out;
    }

    // Product codes have disjoint queues: split, trace independently, merge
    // in product order so the result is identical to the sequential run.
    std::vector<ProductId> products;
    {
        std::vector<bool> seen;
        for (const auto& tx : txs) {
            if (tx.product >= seen.size()) seen.resize(tx.product + 1, false);
            seen[tx.product] = true;
        }
        for (ProductId p = 0; p < seen.size(); ++p)
            if (seen[p]) products.push_back(p);
    }
    std::vector<std::vector<ingest::Transaction>> split(products.size());
    {
        std::unordered_map<ProductId, std::size_t> slot;
        for (std::size_t s = 0; s < products.size(); ++s) slot[products[s]] = s;
        for (const auto& tx : txs) split[slot[tx.product]].push_back(tx);
    }
    std::vector<PathMultiset> parts(products.size());
    std::vector<ReconstructReport> part_reports(products.size());
    parallel_for(products.size(), workers, [&](std::size_t s) {
        run_sequential(split[s], catalog, parts[s], part_reports[s]);
    });
    for (std::size_t s = 0; s < products.size(); ++s) {
        for (const auto& [key, count] : parts[s].counts) {
            const auto prefix = static_cast<std::uint32_t>(key >> 32);
            const auto product = static_cast<ProductId>(key & 0xffffffffu);
            std::uint32_t re = PathTable::kRoot;
            for (EntityId node : parts[s].table.materialize(prefix)) re = out.table.extend(re, node);
            out.add(re, product, count);
        }
        const ReconstructReport& pr = part_reports[s];
        report.phantom_units_total += pr.phantom_units_total;
        report.delivered_units += pr.delivered_units;
        report.final_buyer_sales_skipped += pr.final_buyer_sales_skipped;
        report.manufacturer_purchases_skipped += pr.manufacturer_purchases_skipped;
        report.underflows.insert(report.underflows.end(), pr.underflows.begin(), pr.underflows.end());
    }
    std::sort(report.underflows.begin(), report.underflows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.entity, a.product) < std::tie(b.entity, b.product);
    });
    return out;
}

std::int64_t PathMultiset::total_phantom(const EntityCatalog& catalog) const {
    std::int64_t t = 0;
    for (const auto& [key, count] : counts) {
        const auto prefix = static_cast<std::uint32_t>(key >> 32);
        if (!catalog.is_manufacturer(table.root_entity(prefix))) t += count;
    }
    return t;
}

std::vector<DistributionPath> PathMultiset::materialized(const EntityCatalog& catalog) const {
    std::vector<DistributionPath> out;
    out.reserve(counts.size());
    for (const auto& [key, count] : counts) {
        const auto prefix = static_cast<std::uint32_t>(key >> 32);
        DistributionPath p;
        p.nodes = table.materialize(prefix);
        p.product = static_cast<ProductId>(key & 0xffffffffu);
        p.count = count;
        p.phantom = !catalog.is_manufacturer(p.nodes.front());
        out.push_back(std::move(p));
    }
    std::sort(out.begin(), out.end(), [](const DistributionPath& a, const DistributionPath& b) {
        if (a.product != b.product) return a.product < b.product;
        return a.nodes < b.nodes;
    });
    return out;
}

std::unordered_map<EntityId, double> distributor_positions(const PathMultiset& paths) {
    if (paths.counts.empty()) throw ValidationError("distributor_positions: empty path multiset");
    std::unordered_map<EntityId, std::pair<double, double>> acc;  // sum(pos*w), sum(w)
    for (const auto& [key, count] : paths.counts) {
        const auto prefix = static_cast<std::uint32_t>(key >> 32);
        std::vector<EntityId> nodes = paths.table.materialize(prefix);
        for (std::size_t k = 1; k < nodes.size(); ++k) {
            auto& slot = acc[nodes[k]];
            slot.first += static_cast<double>(k) * static_cast<double>(count);
            slot.second += static_cast<double>(count);
        }
    }
    std::unordered_map<EntityId, double> out;
    for (const auto& [id, sums] : acc) out[id] = sums.first / sums.second;
    return out;
}

std::unordered_map<EntityId, double> final_shipment_fractions(const PathMultiset& paths) {
    std::unordered_map<EntityId, std::pair<double, double>> acc;  // (ending weight, total weight)
    for (const auto& [key, count] : paths.counts) {
        const auto prefix = static_cast<std::uint32_t>(key >> 32);
        std::vector<EntityId> nodes = paths.table.materialize(prefix);
        const auto w = static_cast<double>(count);
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            auto& slot = acc[nodes[k]];
            slot.second += w;
            if (k + 1 == nodes.size()) slot.first += w;
        }
    }
    std::unordered_map<EntityId, double> out;
    for (const auto& [id, sums] : acc)
        if (sums.first > 0) out[id] = sums.first / sums.second;
    return out;
}

void write_paths(std::ostream& out, const PathMultiset& paths, const EntityCatalog& catalog,
                 const Interner& products) {
    out << "path,product_code,count\n";
    for (const auto& p : paths.materialized(catalog)) {
        for (std::size_t k = 0; k < p.nodes.size(); ++k) {
            if (k) out << '>';
            out << catalog.ids.name(p.nodes[k]);
        }
        out << ',' << products.name(p.product) << ',' << p.count << '\n';
    }
}

PathMultiset parse_paths(std::istream& in, const EntityCatalog& catalog, Interner& products) {
    csv::Reader reader(in, "path,product_code,count", "paths");
    PathMultiset out;
    csv::Row row;
    while (reader.next(row)) {
        std::uint32_t prefix = PathTable::kRoot;
        std::string_view rest = row.fields[0];
        while (!rest.empty()) {
            const std::size_t sep = rest.find('>');
            const std::string_view name = rest.substr(0, sep);
            const EntityId id = catalog.ids.find(name);
            if (id == kNoEntity)
                throw ValidationError("paths: line " + std::to_string(row.line_no) +
                                      ": unknown entity '" + std::string(name) + "'");
            prefix = out.table.extend(prefix, id);
            if (sep == std::string_view::npos) break;
            rest.remove_prefix(sep + 1);
        }
        if (prefix == PathTable::kRoot)
            throw ValidationError("paths: line " + std::to_string(row.line_no) + ": empty path");
        const std::int64_t count = csv::parse_int(row.fields[2], "paths", row.line_no);
        if (count <= 0)
            throw ValidationError("paths: line " + std::to_string(row.line_no) +
                                  ": non-positive count");
        out.add(prefix, products.intern(row.fields[1]), count);
    }
    return out;
}

void write_underflow_report(std::ostream& out, const ReconstructReport& report,
                            const EntityCatalog& catalog, const Interner& products) {
    out << "entity_id,product_code,phantom_units\n";
    for (const auto& u : report.underflows)
        out << catalog.ids.name(u.entity) << ',' << products.name(u.product) << ','
            << u.phantom_units << '\n';
}

}  // namespace distflex::pathrec
