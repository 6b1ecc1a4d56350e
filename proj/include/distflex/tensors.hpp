#pragma once

#include <cstdint>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "distflex/pathrec.hpp"
#include "distflex/types.hpp"

namespace distflex::tensors {

/// One sparse entry of a 3-index object. Index semantics follow the order
/// convention: i places orders to k via the intermediary j (shipments flow
/// k -> j -> i).
struct Triple {
    EntityId i, j, k;
    double value;
    friend bool operator==(const Triple&, const Triple&) = default;
};

struct PairEntry {
    EntityId i, j;
    double value;
    friend bool operator==(const PairEntry&, const PairEntry&) = default;
};

/// Raw sub-path statistics: A_ijk counts of (k -> j -> i) windows summed over
/// standalone and embedded occurrences, plus the first-order margin of
/// (orderer, direct source) pair counts from 2-node windows.
struct CountTensor {
    std::vector<Triple> entries;    // sorted by (i, j, k)
    std::vector<PairEntry> margin;  // sorted by (i, j)
};

/// A_ijk and the pair margin from a path multiset. Only max_order == 2 is
/// supported (the model is fixed at two upstream steps).
CountTensor path_counts(const pathrec::PathMultiset& paths, int max_order = 2);

/// Per-entity flexibility phi_i in [0, 1]: a base value plus overrides.
struct Flexibility {
    double base = 0.0;
    std::unordered_map<EntityId, double> overrides;

    static Flexibility homogeneous(double phi) { return Flexibility{phi, {}}; }
    double at(EntityId id) const {
        auto it = overrides.find(id);
        return it == overrides.end() ? base : it->second;
    }
    void validate() const;
};

/// Row-stochastic order transition tensor (per orderer i). Rows of entities
/// with no observed sub-paths are synthesized from the pair margin against
/// the reserved production source and flagged in `degenerate_orderers`.
struct OrderTransitionTensor {
    std::vector<Triple> entries;  // sorted by (i, j, k); sum over (j,k) per i == 1
    std::vector<EntityId> degenerate_orderers;

    /// [first, last) range of row i in `entries`.
    std::pair<std::size_t, std::size_t> row(EntityId i) const;
};

struct FirstOrderMatrix {
    std::vector<PairEntry> entries;  // S_ij sorted by (i, j); rows sum to 1
};

OrderTransitionTensor build_two_step(const CountTensor& counts);
OrderTransitionTensor build_one_step(const CountTensor& counts);

/// S_ij = sum_k T2_ijk.
FirstOrderMatrix first_order_matrix(const OrderTransitionTensor& two_step);

/// T(phi)_ijk = (1 - phi_i) T2_ijk + phi_i T1_ijk. Rows with phi_i == 0 or 1
/// reproduce the corresponding input row exactly (including support).
OrderTransitionTensor mix(const OrderTransitionTensor& two_step,
                          const OrderTransitionTensor& one_step, const Flexibility& phi);

/// Total order volume per entity (sum of its A row; degenerate orderers fall
/// back to their margin total).
std::unordered_map<EntityId, double> order_volumes(const CountTensor& counts);

/// Shipment transition tensor B_ijk: probability of a shipment from i to k
/// via j, i.e. the volume-weighted transpose of T renormalized per shipment
/// origin i.
struct ShipmentTensor {
    std::vector<Triple> entries;  // sorted by (i, j, k); sum over (j,k) per i == 1
    int window_days = 0;
};

ShipmentTensor build_shipment_tensor(const OrderTransitionTensor& tensor,
                                     const std::unordered_map<EntityId, double>& volumes,
                                     int window_days);

/// Convenience: v == 1 for every orderer (the slow-down construction).
ShipmentTensor build_shipment_tensor_unit(const OrderTransitionTensor& tensor, int window_days);

/// Absorbing second-order chain over shipment meta-nodes (i, j) plus the
/// end-node. States are ordered lexicographically by pair; the end-node is
/// the last state and carries a unit self-loop.
struct SecondOrderChain {
    std::vector<std::pair<EntityId, EntityId>> meta;  // state s -> pair, s < meta.size()
    std::vector<std::size_t> row_ptr;                 // CSR over all states (meta + end-node)
    std::vector<std::uint32_t> col;
    std::vector<double> val;

    std::size_t end_state() const { return meta.size(); }
    std::size_t n_states() const { return meta.size() + 1; }
};

/// omega_fractions: final distributors mapped to the fraction of their
/// outflow that terminates at final buyers (see
/// pathrec::final_shipment_fractions). Throws if empty or if a non-absorbing
/// meta-node dangles.
SecondOrderChain to_second_order(const ShipmentTensor& shipments,
                                 const std::unordered_map<EntityId, double>& omega_fractions);

/// Support classification of 2-step routes: observed (in T2) versus
/// alternative (in T1 only). Entries carry the order triple and the source
/// tensor's probability.
struct ClassifiedEdge {
    EntityId i, j, k;
    double weight;
    bool alternative;
};
std::vector<ClassifiedEdge> alternative_edges(const OrderTransitionTensor& two_step,
                                              const OrderTransitionTensor& one_step);

void write_tensor(std::ostream& out, const std::vector<Triple>& entries,
                  const EntityCatalog& catalog);
void write_second_order_edges(std::ostream& out, const std::vector<ClassifiedEdge>& edges,
                              const EntityCatalog& catalog);

}  // namespace distflex::tensors
