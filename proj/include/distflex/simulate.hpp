#pragma once

#include <cstdint>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "distflex/ingest.hpp"
#include "distflex/tensors.hpp"

namespace distflex::simulate {

struct SimConfig {
    int tau = 5;            // inventory restoration time, days
    int horizon = 180;      // measured simulation days
    int lead_time = 1;      // order-to-arrival delay (fixed at 1 day)
    int warmup = 10;        // unmeasured days before the measured window
    tensors::Flexibility phi;
    std::uint64_t seed = 0;           // recorded in outputs; the engine itself is deterministic
    bool audit = false;               // per-step conservation checks
    bool record_flows = false;        // keep per-day per-substock ship-in (needed for Gamma)

    void validate() const;
};

struct ShockSpec {
    double shock_fraction = 0.0;  // manufacturer stocks scaled by (1 - shock_fraction)
    int t_star = 1;               // measured day the shock hits (1-based); <= 0 disables
    bool production_halt = true;

    void validate() const;
};

/// Annual flows extracted from a transaction log: per-source inflow,
/// total outflow and final-buyer outflow per entity.
struct AnnualFlows {
    std::unordered_map<std::uint64_t, double> in_by_source;  // (holder<<32|source) -> W_in
    std::unordered_map<EntityId, double> out_total;          // W_out incl. final buyers
    std::unordered_map<EntityId, double> final_out;          // omega
    int days = 365;
};

AnnualFlows annual_flows(const std::vector<ingest::Transaction>& txs, const EntityCatalog& catalog);

/// Target-stock computation mode. Annual adds the yearly final-buyer
/// volume back onto the leftover, W_in - (W_out - omega); Buffer is the
/// end-of-year leftover W_in - W_out, which is what stress scenarios should
/// use (see README).
enum class TargetMode { Annual, Buffer };

namespace detail {
struct Engine;
}

/// Static simulation structure compiled from the tensor support union and
/// the annual flows. Order-routing shares are bound later, per phi.
class SimSystem {
  public:
    SimSystem(const tensors::OrderTransitionTensor& two_step,
              const tensors::OrderTransitionTensor& one_step, const AnnualFlows& flows,
              const EntityCatalog& catalog, double manufacturer_stock_days,
              TargetMode target_mode = TargetMode::Annual);

    std::size_t substock_count() const { return holder_.size(); }
    double total_final_demand() const { return total_final_demand_; }

    /// Index of the (holder, source) sub-stock in flow/stock arrays;
    /// SIZE_MAX when the pair does not exist.
    std::size_t substock_index(EntityId holder, EntityId source) const {
        auto it = index_.find((static_cast<std::uint64_t>(holder) << 32) | source);
        return it == index_.end() ? static_cast<std::size_t>(-1) : it->second;
    }
    const std::vector<EntityId>& flagged_outflow_only() const { return flagged_outflow_only_; }
    const std::vector<EntityId>& min_buffer_entities() const { return min_buffer_entities_; }

  private:
    friend struct detail::Engine;
    friend struct SystemProbe;  // test-only inspection

    // Sub-stocks, sorted by (holder, source). Production stocks use the
    // reserved source id.
    std::vector<EntityId> holder_, source_;
    std::vector<double> target_;         // s^T_(i|j)
    std::vector<double> final_demand_;   // c_(i|j)
    std::vector<double> production_rate_;  // nonzero only for production stocks
    std::vector<char> is_production_;
    std::unordered_map<std::uint64_t, std::uint32_t> index_;  // (holder,source) -> substock

    // Order-routing edges: claimant substock (i|j) -> supplier substock (j|k),
    // grouped contiguously per claimant. The share of each edge is bound per
    // phi from the mixed tensor (union support; absent entries get share 0).
    struct Edge {
        std::uint32_t from;    // claimant substock
        std::uint32_t to;      // supplier substock
        EntityId orderer, via, origin;  // order triple for share lookup
    };
    std::vector<Edge> edges_;
    std::vector<std::size_t> claimant_ptr_;  // per substock: [begin,end) into edges_

    double total_final_demand_ = 0;
    std::vector<EntityId> flagged_outflow_only_;
    std::vector<EntityId> min_buffer_entities_;
};

struct MetricsSeries {
    std::vector<double> deficit;        // delta(t), t = 1..horizon
    std::vector<double> shipped_total;  // all shipments arriving per day
    std::vector<double> final_shipped;  // omega_total(t)
    // Per-day ship-in per substock; filled only when record_flows is set.
    std::vector<std::vector<double>> inflow;
};

struct RunResult {
    MetricsSeries series;
    double total_final_demand = 0;
    bool order_conservation_ok = true;
    double worst_mass_error = 0;  // relative, when audit is on
    double min_stock_seen = 0;
    std::vector<double> final_stocks;  // per substock, filled when audit is on
};

/// One deterministic simulation run: warm-up, optional shock, `horizon`
/// measured days. Flexibility is a response to the shock: orders follow
/// `base` (normally the two-step tensor) before t_star and `flexed` (the
/// phi-mixture) from the shock day on. With the shock disabled, `flexed`
/// applies from the first day.
RunResult run_simulation(const SimSystem& system, const tensors::OrderTransitionTensor& base,
                         const tensors::OrderTransitionTensor& flexed, const SimConfig& config,
                         const ShockSpec& shock);

/// Cumulative unfulfilled fraction of final-buyer demand per day,
/// clamped to [0,1].
std::vector<double> deficit_curve(const std::vector<double>& final_shipped,
                                  double total_final_demand);

/// Gamma(t) = sum |W(phi,t) - W(0,t)| / sum |W(1,t) - W(0,t)|. Returns the
/// degenerate flag (zero denominator everywhere) via the second member.
std::pair<std::vector<double>, bool> path_usage(const MetricsSeries& at_phi,
                                                const MetricsSeries& at_zero,
                                                const MetricsSeries& at_one);

/// Largest measured day t with delta(t) <= asd; 0 if breached on day 1, the
/// horizon itself when never breached.
int resupply_window(const std::vector<double>& deficit, double asd);

struct SweepRow {
    double phi;
    int t;
    double deficit;
    double gamma;
    double delta_reduction;
    double shipped_total;
    bool efficient;
};

struct SweepResult {
    std::vector<SweepRow> rows;                  // phi-major, then t
    std::vector<std::pair<int, double>> phi_star;  // per requested time
    std::vector<double> grid;
    bool gamma_degenerate = false;
};

/// Runs the grid (phi = 0 and 1 are added internally when absent, for the
/// Gamma normalization), tabulates deficit/Gamma/Delta per (phi, t in times)
/// and labels efficiency per the deficit-reduction frontier.
SweepResult sweep_phi(const SimSystem& system, const tensors::OrderTransitionTensor& two_step,
                      const tensors::OrderTransitionTensor& one_step, const SimConfig& config,
                      const ShockSpec& shock, std::vector<double> grid,
                      const std::vector<int>& times, unsigned workers = 1);

void write_sweep(std::ostream& out, const SweepResult& sweep);

}  // namespace distflex::simulate
