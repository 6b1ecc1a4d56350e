#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "distflex/tensors.hpp"

namespace distflex::estimate {

struct EstimationWindow {
    int train_days = 365;  // b: preferences estimated over [t-b, t]
    int horizon_days = 365;  // h: shipments observed over [t, t+h]
    Day split_day = 0;       // t
    int year_label = 0;      // y
};

/// Observed shipment counts over the prediction window: entry (i, j, k) is
/// the number of packages shipped from i to k via j.
struct ObservedShipmentCounts {
    std::vector<tensors::Triple> entries;  // sorted by (i, j, k), counts >= 0
};

/// Shipment 3-windows of a path multiset, in flow direction.
ObservedShipmentCounts observed_shipments(const pathrec::PathMultiset& paths);

/// The likelihood model: T2/T1 over the training window plus order volumes.
/// Evaluation builds B(b, phi) lazily per call.
class LikelihoodModel {
  public:
    LikelihoodModel(const tensors::OrderTransitionTensor& two_step,
                    const tensors::OrderTransitionTensor& one_step,
                    const std::unordered_map<EntityId, double>& volumes,
                    const ObservedShipmentCounts& observed);

    /// log L(phi) = sum_ijk A~_ijk log B_ijk(b, phi). Observations with zero
    /// model probability yield -infinity; the offending order triples are
    /// appended to `mismatches` if provided.
    double log_likelihood(const tensors::Flexibility& phi,
                          std::vector<tensors::Triple>* mismatches = nullptr) const;

    /// Orderers whose phi coordinate influences the likelihood.
    const std::vector<EntityId>& fit_coordinates() const { return coordinates_; }

    /// Splits observations into (supported, unsupported-by-any-phi) subsets.
    static std::pair<ObservedShipmentCounts, ObservedShipmentCounts> split_by_support(
        const ObservedShipmentCounts& observed, const tensors::OrderTransitionTensor& two_step,
        const tensors::OrderTransitionTensor& one_step);

  private:
    struct SupportEntry {
        EntityId orderer;   // k in B_ijk, the row whose phi applies
        EntityId via;       // j
        EntityId origin;    // i, the shipment origin (normalization slice)
        double t2, t1, volume;
        double observed_count;  // 0 when not observed
    };
    std::vector<SupportEntry> support_;
    std::vector<EntityId> origins_;      // distinct normalization slices
    std::vector<std::uint32_t> origin_slot_;  // per support entry
    std::vector<double> slice_mass_;     // observed mass per normalization slice
    std::vector<EntityId> coordinates_;
    double unsupported_observed_ = 0;  // observation mass outside the mixed support
    std::vector<tensors::Triple> unsupported_triples_;
};

struct FlexibilityEstimate {
    tensors::Flexibility phi;
    double log_likelihood = 0;
    int iterations = 0;       // likelihood evaluations
    bool converged = false;
    bool flat = false;        // likelihood constant in phi (reported as phi = 0)
    std::vector<EntityId> flat_coordinates;
};

/// Single shared phi for every distributor: grid scan (>= 11 points) then
/// golden-section refinement to 1e-4.
FlexibilityEstimate fit_phi_homogeneous(const LikelihoodModel& model, int grid_points = 21);

/// Coordinate ascent over per-entity phi, each coordinate solved by
/// golden-section; stops when a sweep gains < 1e-6 or after max_sweeps.
FlexibilityEstimate fit_phi_per_distributor(const LikelihoodModel& model, int max_sweeps = 20);

struct YearEstimate {
    EntityId entity;
    int year;
    double phi_hat;
    double log_likelihood;
    bool flat;
    double mean_position;  // over the training-year paths
};

struct YearToYearResult {
    std::vector<YearEstimate> estimates;
    std::vector<std::pair<EntityId, int>> skipped;      // absent from the training year
    std::map<int, double> unsupported_mass;             // per year: observation mass off-support
    std::vector<EstimationWindow> windows;              // one per fitted year pair
};

/// Per-distributor phi_hat(y) with training counts from year y-1 and observed
/// shipments from year y (b = h = 1 year).
YearToYearResult year_to_year_flexibility(const std::map<int, pathrec::PathMultiset>& paths_by_year,
                                          const EntityCatalog& catalog, int max_sweeps = 20);

void write_year_estimates(std::ostream& out, const YearToYearResult& result,
                          const EntityCatalog& catalog);

}  // namespace distflex::estimate
