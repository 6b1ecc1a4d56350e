#include "distflex/tensors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "distflex/csv.hpp"

namespace distflex::tensors {

namespace {

bool triple_less(const Triple& a, const Triple& b) {
    if (a.i != b.i) return a.i < b.i;
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
}

void sort_merge(std::vector<Triple>& entries) {
    std::sort(entries.begin(), entries.end(), triple_less);
    std::size_t w = 0;
    for (std::size_t r = 0; r < entries.size(); ++r) {
        if (w > 0 && entries[w - 1].i == entries[r].i && entries[w - 1].j == entries[r].j &&
            entries[w - 1].k == entries[r].k)
            entries[w - 1].value += entries[r].value;
        else
            entries[w++] = entries[r];
    }
    entries.resize(w);
}

void sort_merge(std::vector<PairEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const PairEntry& a, const PairEntry& b) {
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    std::size_t w = 0;
    for (std::size_t r = 0; r < entries.size(); ++r) {
        if (w > 0 && entries[w - 1].i == entries[r].i && entries[w - 1].j == entries[r].j)
            entries[w - 1].value += entries[r].value;
        else
            entries[w++] = entries[r];
    }
    entries.resize(w);
}

/// Normalize consecutive runs with equal i so each row sums to 1. Rows with
/// zero mass are dropped.
void normalize_rows(std::vector<Triple>& entries) {
    std::size_t begin = 0;
    std::vector<Triple> out;
    out.reserve(entries.size());
    while (begin < entries.size()) {
        std::size_t end = begin;
        double total = 0;
        while (end < entries.size() && entries[end].i == entries[begin].i) total += entries[end++].value;
        if (total > 0)
            for (std::size_t e = begin; e < end; ++e)
                out.push_back(Triple{entries[e].i, entries[e].j, entries[e].k, entries[e].value / total});
        begin = end;
    }
    entries = std::move(out);
}

}  // namespace

void Flexibility::validate() const {
    auto check = [](double v) {
        if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError("flexibility value " + csv::format_double(v) + " outside [0,1]");
    };
    check(base);
    for (const auto& [id, v] : overrides) {
        (void)id;
        check(v);
    }
}

CountTensor path_counts(const pathrec::PathMultiset& paths, int max_order) {
    if (max_order != 2)
        throw ValidationError("path_counts: only max_order == 2 is supported");
    CountTensor counts;
    for (const auto& [key, count] : paths.counts) {
        const auto prefix = static_cast<std::uint32_t>(key >> 32);
        const std::vector<EntityId> nodes = paths.table.materialize(prefix);
        const auto c = static_cast<double>(count);
        for (std::size_t t = 1; t < nodes.size(); ++t) {
            counts.margin.push_back(PairEntry{nodes[t], nodes[t - 1], c});
            if (t >= 2) counts.entries.push_back(Triple{nodes[t], nodes[t - 1], nodes[t - 2], c});
        }
    }
    sort_merge(counts.entries);
    sort_merge(counts.margin);
    return counts;
}

std::pair<std::size_t, std::size_t> OrderTransitionTensor::row(EntityId i) const {
    auto lo = std::lower_bound(entries.begin(), entries.end(), i,
                               [](const Triple& t, EntityId id) { return t.i < id; });
    auto hi = std::upper_bound(entries.begin(), entries.end(), i,
                               [](EntityId id, const Triple& t) { return id < t.i; });
    return {static_cast<std::size_t>(lo - entries.begin()),
            static_cast<std::size_t>(hi - entries.begin())};
}

OrderTransitionTensor build_two_step(const CountTensor& counts) {
    if (counts.entries.empty() && counts.margin.empty())
        throw ValidationError("build_two_step: empty count tensor");
    OrderTransitionTensor out;
    out.entries = counts.entries;

    // Orderers seen only in 2-node windows have no A row; give them a
    // degenerate row against the production source so they stay representable.
    std::set<EntityId> with_rows;
    for (const auto& e : counts.entries) with_rows.insert(e.i);
    for (const auto& p : counts.margin) {
        if (with_rows.count(p.i)) continue;
        out.entries.push_back(Triple{p.i, p.j, kSourceEntity, p.value});
        if (out.degenerate_orderers.empty() || out.degenerate_orderers.back() != p.i)
            out.degenerate_orderers.push_back(p.i);
    }
    std::sort(out.degenerate_orderers.begin(), out.degenerate_orderers.end());
    out.degenerate_orderers.erase(
        std::unique(out.degenerate_orderers.begin(), out.degenerate_orderers.end()),
        out.degenerate_orderers.end());
    sort_merge(out.entries);
    normalize_rows(out.entries);
    return out;
}

FirstOrderMatrix first_order_matrix(const OrderTransitionTensor& two_step) {
    FirstOrderMatrix s;
    for (const auto& e : two_step.entries) s.entries.push_back(PairEntry{e.i, e.j, e.value});
    sort_merge(s.entries);
    return s;
}

OrderTransitionTensor build_one_step(const CountTensor& counts) {
    const OrderTransitionTensor two_step = build_two_step(counts);
    const FirstOrderMatrix s = first_order_matrix(two_step);

    // Row ranges of S per orderer, renormalized so each mix sums to 1.
    std::unordered_map<EntityId, std::pair<std::size_t, std::size_t>> s_rows;
    {
        std::size_t begin = 0;
        while (begin < s.entries.size()) {
            std::size_t end = begin;
            while (end < s.entries.size() && s.entries[end].i == s.entries[begin].i) ++end;
            s_rows[s.entries[begin].i] = {begin, end};
            begin = end;
        }
    }

    OrderTransitionTensor out;
    out.degenerate_orderers = two_step.degenerate_orderers;
    for (const auto& sij : s.entries) {
        // Theta gate: i placed orders via j. The orderer adopts j's own
        // upstream mix, weighted by its own 1-step share toward j.
        auto it = s_rows.find(sij.j);
        if (it == s_rows.end()) {
            // Intermediary with no orders of its own (manufacturer or
            // left-censored root): its only source is production.
            out.entries.push_back(Triple{sij.i, sij.j, kSourceEntity, sij.value});
            continue;
        }
        double total = 0;
        for (std::size_t e = it->second.first; e < it->second.second; ++e)
            total += s.entries[e].value;
        for (std::size_t e = it->second.first; e < it->second.second; ++e)
            out.entries.push_back(
                Triple{sij.i, sij.j, s.entries[e].j, sij.value * (s.entries[e].value / total)});
    }
    sort_merge(out.entries);
    normalize_rows(out.entries);
    return out;
}

OrderTransitionTensor mix(const OrderTransitionTensor& two_step,
                          const OrderTransitionTensor& one_step, const Flexibility& phi) {
    phi.validate();
    OrderTransitionTensor out;
    out.degenerate_orderers = two_step.degenerate_orderers;
    const auto& a = two_step.entries;
    const auto& b = one_step.entries;
    std::size_t ia = 0, ib = 0;
    out.entries.reserve(a.size() + b.size());
    while (ia < a.size() || ib < b.size()) {
        const EntityId i = std::min(ia < a.size() ? a[ia].i : kNoEntity,
                                    ib < b.size() ? b[ib].i : kNoEntity);
        const double p = phi.at(i);
        // Merge the two sorted rows of orderer i.
        while ((ia < a.size() && a[ia].i == i) || (ib < b.size() && b[ib].i == i)) {
            const bool ha = ia < a.size() && a[ia].i == i;
            const bool hb = ib < b.size() && b[ib].i == i;
            int cmp;
            if (ha && hb) {
                if (a[ia].j != b[ib].j)
                    cmp = a[ia].j < b[ib].j ? -1 : 1;
                else if (a[ia].k != b[ib].k)
                    cmp = a[ia].k < b[ib].k ? -1 : 1;
                else
                    cmp = 0;
            } else {
                cmp = ha ? -1 : 1;
            }
            Triple t{};
            if (cmp == 0) {
                t = a[ia];
                t.value = a[ia].value == b[ib].value ? a[ia].value
                          : p == 0.0               ? a[ia].value
                          : p == 1.0               ? b[ib].value
                                                   : (1.0 - p) * a[ia].value + p * b[ib].value;
                ++ia, ++ib;
            } else if (cmp < 0) {
                t = a[ia];
                t.value = p == 1.0 ? 0.0 : (1.0 - p) * a[ia].value;
                ++ia;
            } else {
                t = b[ib];
                t.value = p == 0.0 ? 0.0 : p * b[ib].value;
                ++ib;
            }
            if (t.value != 0.0) out.entries.push_back(t);
        }
    }
    return out;
}

std::unordered_map<EntityId, double> order_volumes(const CountTensor& counts) {
    std::unordered_map<EntityId, double> v;
    for (const auto& e : counts.entries) v[e.i] += e.value;
    // Degenerate orderers (no 3-node windows) fall back to their pair totals.
    std::unordered_map<EntityId, double> pair_totals;
    for (const auto& p : counts.margin) pair_totals[p.i] += p.value;
    for (const auto& [id, total] : pair_totals) v.try_emplace(id, total);
    return v;
}

ShipmentTensor build_shipment_tensor(const OrderTransitionTensor& tensor,
                                     const std::unordered_map<EntityId, double>& volumes,
                                     int window_days) {
    ShipmentTensor out;
    out.window_days = window_days;
    std::unordered_map<EntityId, double> denom;  // per shipment origin
    out.entries.reserve(tensor.entries.size());
    for (const auto& e : tensor.entries) {
        auto it = volumes.find(e.i);
        const double v = it == volumes.end() ? 0.0 : it->second;
        const double w = e.value * v;
        if (w <= 0.0) continue;
        out.entries.push_back(Triple{e.k, e.j, e.i, w});  // shipment origin = order target
        denom[e.k] += w;
    }
    for (auto& e : out.entries) e.value /= denom[e.i];
    sort_merge(out.entries);
    return out;
}

ShipmentTensor build_shipment_tensor_unit(const OrderTransitionTensor& tensor, int window_days) {
    std::unordered_map<EntityId, double> ones;
    for (const auto& e : tensor.entries) ones[e.i] = 1.0;
    return build_shipment_tensor(tensor, ones, window_days);
}

SecondOrderChain to_second_order(const ShipmentTensor& shipments,
                                 const std::unordered_map<EntityId, double>& omega_fractions) {
    if (omega_fractions.empty())
        throw ValidationError("to_second_order: empty final-distributor set (chain cannot absorb)");
    for (const auto& [id, f] : omega_fractions) {
        (void)id;
        if (!(f > 0.0 && f <= 1.0))
            throw ValidationError("to_second_order: absorption fraction outside (0,1]");
    }

    std::map<std::pair<EntityId, EntityId>, std::uint32_t> index;
    for (const auto& e : shipments.entries) {
        index.emplace(std::make_pair(e.i, e.j), 0);
        index.emplace(std::make_pair(e.j, e.k), 0);
    }
    SecondOrderChain chain;
    chain.meta.reserve(index.size());
    for (auto& [pair, id] : index) {
        id = static_cast<std::uint32_t>(chain.meta.size());
        chain.meta.push_back(pair);
    }
    const auto end_state = static_cast<std::uint32_t>(chain.meta.size());

    // Continuations of meta-node (i, j): entries B_ij. (sorted by (i, j, k)).
    chain.row_ptr.assign(chain.n_states() + 1, 0);
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(chain.n_states());
    std::size_t begin = 0;
    while (begin < shipments.entries.size()) {
        std::size_t end = begin;
        const EntityId i = shipments.entries[begin].i, j = shipments.entries[begin].j;
        double total = 0;
        while (end < shipments.entries.size() && shipments.entries[end].i == i &&
               shipments.entries[end].j == j)
            total += shipments.entries[end++].value;
        const std::uint32_t s = index.at({i, j});
        auto om = omega_fractions.find(j);
        const double absorb = om == omega_fractions.end() ? 0.0 : om->second;
        if (absorb > 0.0) rows[s].emplace_back(end_state, absorb);
        for (std::size_t e = begin; e < end; ++e)
            rows[s].emplace_back(index.at({j, shipments.entries[e].k}),
                                 (1.0 - absorb) * shipments.entries[e].value / total);
        begin = end;
    }
    // Destination-only meta-nodes must absorb.
    for (std::uint32_t s = 0; s < end_state; ++s) {
        if (!rows[s].empty()) continue;
        const EntityId j = chain.meta[s].second;
        if (!omega_fractions.count(j))
            throw ValidationError("to_second_order: dangling non-absorbing meta-node (" +
                                  std::to_string(chain.meta[s].first) + "," + std::to_string(j) +
                                  ")");
        rows[s].emplace_back(end_state, 1.0);
    }
    rows[end_state].emplace_back(end_state, 1.0);

    // Renormalize rows (absorption plus scaled continuations) and pack CSR.
    for (auto& row : rows) {
        double total = 0;
        for (const auto& [c, w] : row) total += w;
        for (auto& [c, w] : row) w /= total;
    }
    for (std::size_t s = 0; s < chain.n_states(); ++s) {
        chain.row_ptr[s] = chain.col.size();
        for (const auto& [c, w] : rows[s]) {
            chain.col.push_back(c);
            chain.val.push_back(w);
        }
    }
    chain.row_ptr[chain.n_states()] = chain.col.size();
    return chain;
}

std::vector<ClassifiedEdge> alternative_edges(const OrderTransitionTensor& two_step,
                                              const OrderTransitionTensor& one_step) {
    std::vector<ClassifiedEdge> out;
    const auto& a = two_step.entries;
    const auto& b = one_step.entries;
    std::size_t ia = 0, ib = 0;
    while (ia < a.size() || ib < b.size()) {
        int cmp;
        if (ia < a.size() && ib < b.size())
            cmp = triple_less(a[ia], b[ib]) ? -1 : triple_less(b[ib], a[ia]) ? 1 : 0;
        else
            cmp = ia < a.size() ? -1 : 1;
        if (cmp <= 0) {
            out.push_back(ClassifiedEdge{a[ia].i, a[ia].j, a[ia].k, a[ia].value, false});
            ++ia;
            if (cmp == 0) ++ib;
        } else {
            out.push_back(ClassifiedEdge{b[ib].i, b[ib].j, b[ib].k, b[ib].value, true});
            ++ib;
        }
    }
    return out;
}

void write_tensor(std::ostream& out, const std::vector<Triple>& entries,
                  const EntityCatalog& catalog) {
    out << "i,j,k,value\n";
    for (const auto& e : entries)
        out << catalog.ids.name(e.i) << ',' << catalog.ids.name(e.j) << ',' << catalog.ids.name(e.k)
            << ',' << csv::format_double(e.value) << '\n';
}

void write_second_order_edges(std::ostream& out, const std::vector<ClassifiedEdge>& edges,
                              const EntityCatalog& catalog) {
    // Meta-node convention: the order triple (i, j, k) is the shipment path
    // k -> j -> i, rendered as the edge (k|j) -> (j|i).
    out << "src_pair,dst_pair,weight,class\n";
    for (const auto& e : edges)
        out << catalog.ids.name(e.k) << '|' << catalog.ids.name(e.j) << ','
            << catalog.ids.name(e.j) << '|' << catalog.ids.name(e.i) << ','
            << csv::format_double(e.weight) << ',' << (e.alternative ? "alternative" : "observed")
            << '\n';
}

}  // namespace distflex::tensors
