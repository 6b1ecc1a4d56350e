// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// fails. Tolerances are fixed here, not configurable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "distflex/estimate.hpp"
#include "distflex/ingest.hpp"
#include "distflex/pathrec.hpp"
#include "distflex/rng.hpp"
#include "distflex/simulate.hpp"
#include "distflex/spectral.hpp"
#include "distflex/tensors.hpp"
#include "oracles.hpp"

using namespace distflex;

namespace {

struct Criterion {
    int id;
    std::string title;
    bool passed = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && passed) {
            passed = false;
            detail = what;
        }
    }
};

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

long peak_rss_mb() {
    std::ifstream status("/proc/self/status");
    std::string line;
    while (std::getline(status, line)) {
        if (line.rfind("VmHWM:", 0) == 0) {
            long kb = 0;
            std::sscanf(line.c_str(), "VmHWM: %ld kB", &kb);
            return kb / 1024;
        }
    }
    return -1;
}

double tensor_value(const std::vector<tensors::Triple>& entries, EntityId i, EntityId j,
                    EntityId k) {
    for (const auto& e : entries)
        if (e.i == i && e.j == j && e.k == k) return e.value;
    return 0.0;
}

// ---------------------------------------------------------------------------
// 1. Substitution micro-scenario exactness
// ---------------------------------------------------------------------------

Criterion criterion_micro_scenario() {
    Criterion c{1, "micro-scenario exactness (2 units at phi=0, 3 at phi=0.5; mixture 1/0 and 0.75/0.25)"};

    EntityCatalog catalog;
    const EntityId A = catalog.add("A", Role::Manufacturer);
    const EntityId C = catalog.add("C", Role::Manufacturer);
    const EntityId D = catalog.add("D", Role::Distributor);
    const EntityId E = catalog.add("E", Role::Distributor);

    pathrec::PathMultiset paths;
    auto p1 = paths.table.extend(pathrec::PathTable::kRoot, A);
    p1 = paths.table.extend(p1, D);
    p1 = paths.table.extend(p1, E);
    paths.add(p1, 1, 100);
    auto p2 = paths.table.extend(pathrec::PathTable::kRoot, C);
    p2 = paths.table.extend(p2, D);
    paths.add(p2, 1, 100);
    auto counts = tensors::path_counts(paths);
    auto t2 = tensors::build_two_step(counts);
    auto t1 = tensors::build_one_step(counts);

    c.require(tensor_value(t2.entries, E, D, A) == 1.0, "T2 Pr(E->D->A) != 1");
    c.require(tensor_value(t2.entries, E, D, C) == 0.0, "T2 Pr(E->D->C) != 0");
    tensors::Flexibility half;
    half.overrides[E] = 0.5;
    auto mixed = tensors::mix(t2, t1, half);
    c.require(tensor_value(mixed.entries, E, D, A) == 0.75, "mixture Pr(E->D->A|0.5) != 0.75");
    c.require(tensor_value(mixed.entries, E, D, C) == 0.25, "mixture Pr(E->D->C|0.5) != 0.25");

    simulate::AnnualFlows flows;
    auto key = [](EntityId h, EntityId s) { return (static_cast<std::uint64_t>(h) << 32) | s; };
    flows.days = 365;
    flows.in_by_source[key(D, A)] = 100;
    flows.in_by_source[key(D, C)] = 100;
    flows.in_by_source[key(E, D)] = 1460;
    flows.out_total[D] = 196;  // target 200 - 196 + 0 = 4, split {A:2, C:2}
    flows.out_total[E] = 1460;
    flows.final_out[E] = 1460;  // E's order each day is 4
    flows.out_total[A] = 100;
    flows.out_total[C] = 100;
    simulate::SimSystem system(t2, t1, flows, catalog, 30.0);

    simulate::ShockSpec no_shock;
    no_shock.t_star = 0;
    for (double phi_e : {0.0, 0.5}) {
        simulate::SimConfig config;
        config.horizon = 1;
        config.warmup = 0;
        config.record_flows = true;
        config.phi.overrides[E] = phi_e;
        auto flexed = tensors::mix(t2, t1, config.phi);
        auto run = simulate::run_simulation(system, t2, flexed, config, no_shock);
        const double shipped = run.series.inflow[0][system.substock_index(E, D)];
        const double expected = phi_e == 0.0 ? 2.0 : 3.0;
        if (shipped != expected) {
            std::ostringstream msg;
            msg << "engine shipped " << shipped << " at phi_E=" << phi_e << " (expected "
                << expected << ")";
            c.require(false, msg.str());
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// 2. Tensor correctness on random synthetic systems
// ---------------------------------------------------------------------------

Criterion criterion_tensor_stochasticity() {
    Criterion c{2, "tensor rows stochastic within 1e-12 and mix affine in phi (100 random systems)"};
    Rng rng(20120801);
    int systems = 0;
    while (systems < 100) {
        ingest::SynthSpec spec;
        spec.n_manufacturers = static_cast<std::uint32_t>(rng.range(1, 4));
        spec.n_distributors = static_cast<std::uint32_t>(rng.range(4, 16));
        spec.n_final_buyers = static_cast<std::uint32_t>(rng.range(8, 25));
        spec.tiers = static_cast<std::uint32_t>(rng.range(1, 3));
        spec.overlap = rng.uniform();
        spec.volume_scale = 80 + rng.uniform() * 300;
        spec.batches_per_year = static_cast<std::uint32_t>(rng.range(6, 12));
        spec.seed = rng.next();
        auto sys = ingest::generate_synthetic_system(spec);
        pathrec::ReconstructReport report;
        auto paths = pathrec::reconstruct_paths(sys.transactions, sys.catalog, report);
        if (paths.counts.empty()) continue;
        auto counts = tensors::path_counts(paths);
        if (counts.entries.empty() && counts.margin.empty()) continue;
        ++systems;

        auto t2 = tensors::build_two_step(counts);
        auto t1 = tensors::build_one_step(counts);
        auto check_rows = [&](const std::vector<tensors::Triple>& entries, const char* what) {
            std::map<EntityId, double> sums;
            for (const auto& e : entries) sums[e.i] += e.value;
            for (const auto& [i, s] : sums)
                if (std::abs(s - 1.0) > 1e-12)
                    c.require(false, std::string(what) + " row sum off by " +
                                         std::to_string(std::abs(s - 1.0)));
        };
        check_rows(t2.entries, "T2");
        check_rows(t1.entries, "T1");
        for (int k = 0; k < 5; ++k) {
            const double phi = rng.uniform();
            auto mixed = tensors::mix(t2, t1, tensors::Flexibility::homogeneous(phi));
            check_rows(mixed.entries, "T(phi)");
            std::map<std::array<EntityId, 3>, double> a, b;
            for (const auto& e : t2.entries) a[{e.i, e.j, e.k}] = e.value;
            for (const auto& e : t1.entries) b[{e.i, e.j, e.k}] = e.value;
            for (const auto& e : mixed.entries) {
                auto ia = a.find({e.i, e.j, e.k});
                auto ib = b.find({e.i, e.j, e.k});
                const double va = ia == a.end() ? 0.0 : ia->second;
                const double vb = ib == b.end() ? 0.0 : ib->second;
                if (std::abs(e.value - (va + phi * (vb - va))) > 1e-12)
                    c.require(false, "mix affinity violated");
            }
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// 3. FIFO oracle equivalence
// ---------------------------------------------------------------------------

Criterion criterion_fifo_oracle() {
    Criterion c{3, "FIFO reconstruction matches the unit-level token tracer on 200 random logs"};
    Rng rng(40770);
    for (int trial = 0; trial < 200 && c.passed; ++trial) {
        EntityCatalog catalog;
        auto txs = oracles::random_log(catalog, 10000, rng);
        pathrec::ReconstructReport report;
        auto paths = pathrec::reconstruct_paths(txs, catalog, report);
        auto expected = oracles::TokenTracer::trace(txs, catalog);

        std::map<std::pair<ProductId, std::vector<EntityId>>, long long> got;
        for (const auto& p : paths.materialized(catalog)) got[{p.product, p.nodes}] += p.count;
        std::map<std::pair<ProductId, std::vector<EntityId>>, long long> want(
            expected.paths.begin(), expected.paths.end());
        c.require(got == want, "path multiset mismatch on trial " + std::to_string(trial));
        c.require(report.delivered_units == expected.delivered,
                  "delivered count mismatch on trial " + std::to_string(trial));
        std::map<std::pair<EntityId, ProductId>, long long> phantom;
        for (const auto& u : report.underflows) phantom[{u.entity, u.product}] = u.phantom_units;
        c.require(phantom == expected.phantom,
                  "underflow report mismatch on trial " + std::to_string(trial));
    }
    return c;
}

// ---------------------------------------------------------------------------
// 4. MLE recovery
// ---------------------------------------------------------------------------

estimate::ObservedShipmentCounts sample_shipments(const tensors::OrderTransitionTensor& t2,
                                                  const tensors::OrderTransitionTensor& t1,
                                                  const std::unordered_map<EntityId, double>& vols,
                                                  const tensors::Flexibility& phi, int n,
                                                  Rng& rng) {
    auto mixed = tensors::mix(t2, t1, phi);
    std::vector<EntityId> orderers;
    std::vector<double> cumulative;
    double total = 0;
    for (const auto& [k, v] : std::map<EntityId, double>(vols.begin(), vols.end())) {
        if (v <= 0) continue;
        total += v;
        orderers.push_back(k);
        cumulative.push_back(total);
    }
    std::map<std::array<EntityId, 3>, double> acc;
    for (int s = 0; s < n; ++s) {
        const double u = rng.uniform() * total;
        const std::size_t pick = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        const EntityId orderer = orderers[std::min(pick, orderers.size() - 1)];
        auto [lo, hi] = mixed.row(orderer);
        if (lo == hi) continue;
        double r = rng.uniform();
        for (std::size_t e = lo; e < hi; ++e) {
            r -= mixed.entries[e].value;
            if (r <= 0 || e + 1 == hi) {
                acc[{mixed.entries[e].k, mixed.entries[e].j, orderer}] += 1.0;
                break;
            }
        }
    }
    estimate::ObservedShipmentCounts out;
    for (const auto& [key, v] : acc)
        out.entries.push_back(tensors::Triple{key[0], key[1], key[2], v});
    return out;
}

Criterion criterion_mle_recovery() {
    Criterion c{4, "MLE recovery: homogeneous phi within 0.05, per-distributor within 0.1"};
    ingest::SynthSpec spec;
    spec.n_manufacturers = 3;
    spec.n_distributors = 10;
    spec.n_final_buyers = 30;
    spec.tiers = 2;
    spec.overlap = 0.6;
    spec.volume_scale = 300;
    spec.batches_per_year = 20;
    spec.seed = 777;
    auto sys = ingest::generate_synthetic_system(spec);
    pathrec::ReconstructReport report;
    auto paths = pathrec::reconstruct_paths(sys.transactions, sys.catalog, report);
    auto counts = tensors::path_counts(paths);
    auto t2 = tensors::build_two_step(counts);
    auto t1 = tensors::build_one_step(counts);
    auto volumes = tensors::order_volumes(counts);

    Rng rng(321321);
    for (double truth : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        auto obs = sample_shipments(t2, t1, volumes, tensors::Flexibility::homogeneous(truth),
                                    100000, rng);
        estimate::LikelihoodModel model(t2, t1, volumes, obs);
        auto fit = estimate::fit_phi_homogeneous(model);
        const double err = std::abs(fit.phi.base - truth);
        if (err > 0.05) {
            std::ostringstream msg;
            msg << "homogeneous truth " << truth << " recovered as " << fit.phi.base;
            c.require(false, msg.str());
        }
    }

    {
        estimate::LikelihoodModel probe(
            t2, t1, volumes,
            sample_shipments(t2, t1, volumes, tensors::Flexibility::homogeneous(0.5), 2000, rng));
        const auto coords = probe.fit_coordinates();
        tensors::Flexibility truth;
        const double levels[] = {0.1, 0.9, 0.3, 0.7, 0.5};
        for (std::size_t k = 0; k < coords.size(); ++k)
            truth.overrides[coords[k]] = levels[k % 5];
        auto obs = sample_shipments(t2, t1, volumes, truth, 100000, rng);
        estimate::LikelihoodModel model(t2, t1, volumes, obs);
        auto fit = estimate::fit_phi_per_distributor(model);
        std::set<EntityId> flat(fit.flat_coordinates.begin(), fit.flat_coordinates.end());
        for (EntityId e : model.fit_coordinates()) {
            if (flat.count(e)) continue;  // no usable evidence for this coordinate
            const double err = std::abs(fit.phi.at(e) - truth.at(e));
            if (err > 0.1) {
                std::ostringstream msg;
                msg << "coordinate " << e << " truth " << truth.at(e) << " recovered as "
                    << fit.phi.at(e);
                c.require(false, msg.str());
            }
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// 5. Spectral oracle
// ---------------------------------------------------------------------------

spectral::SparseMatrix random_absorbing_chain(std::size_t n, Rng& rng) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
    for (std::size_t r = 0; r + 1 < n; ++r) {
        const int fanout = static_cast<int>(rng.range(1, 5));
        double total = 0;
        for (int f = 0; f < fanout; ++f) {
            const std::size_t col = rng.below(n);
            const double w = 0.05 + rng.uniform();
            rows[r][col] += w;
            total += w;
        }
        const double leak = 0.02 + 0.25 * rng.uniform();
        rows[r][n - 1] += leak;
        total += leak;
        for (auto& x : rows[r]) x /= total;
    }
    rows[n - 1][n - 1] = 1.0;
    return spectral::SparseMatrix::from_dense(rows);
}

Criterion criterion_spectral_oracle() {
    Criterion c{5, "second eigenvalue: iterative matches dense full spectrum within 1e-9; sigma(0) = 1"};
    Rng rng(5150);
    for (int trial = 0; trial < 50 && c.passed; ++trial) {
        const std::size_t n = 20 + rng.below(481);  // up to 500 states
        auto m = random_absorbing_chain(n, rng);
        spectral::EigOptions dense;
        dense.method = spectral::EigOptions::Method::Dense;
        spectral::EigOptions iterative;
        iterative.method = spectral::EigOptions::Method::Iterative;
        iterative.tol = 1e-13;
        const auto a = spectral::second_eigenvalue(m, 1e-13, dense);
        const auto b = spectral::second_eigenvalue(m, 1e-13, iterative);
        if (std::abs(a.modulus - b.modulus) > 1e-9) {
            std::ostringstream msg;
            msg << "n=" << n << " dense " << a.modulus << " vs iterative " << b.modulus;
            c.require(false, msg.str());
        }
    }

    ingest::SynthSpec spec;
    spec.n_distributors = 20;
    spec.n_final_buyers = 40;
    spec.tiers = 3;
    spec.seed = 9;
    spec.batches_per_year = 15;
    auto sys = ingest::generate_synthetic_system(spec);
    pathrec::ReconstructReport report;
    auto paths = pathrec::reconstruct_paths(sys.transactions, sys.catalog, report);
    auto counts = tensors::path_counts(paths);
    auto t2 = tensors::build_two_step(counts);
    auto t1 = tensors::build_one_step(counts);
    auto omega = pathrec::final_shipment_fractions(paths);
    auto r = spectral::slowdown_factor(t2, t1, omega, tensors::Flexibility::homogeneous(0.0), 0);
    c.require(r.sigma == 1.0, "sigma(0) != 1 exactly");
    return c;
}

// ---------------------------------------------------------------------------
// 6 & 7. Stress-test conservation and qualitative shapes, bundled system
// ---------------------------------------------------------------------------

struct BundledSystem {
    EntityCatalog catalog;
    tensors::OrderTransitionTensor t2, t1;
    simulate::AnnualFlows flows;
    simulate::SimSystem system;

    static BundledSystem build() {
        ingest::SynthSpec spec;
        spec.n_manufacturers = 12;
        spec.n_distributors = 1000;
        spec.n_final_buyers = 4000;
        spec.tiers = 3;
        spec.overlap = 0.5;
        spec.volume_scale = 600;
        spec.batches_per_year = 100;
        spec.seed = 1234;
        auto sys = ingest::generate_synthetic_system(spec);
        pathrec::ReconstructReport report;
        auto paths = pathrec::reconstruct_paths(sys.transactions, sys.catalog, report);
        auto counts = tensors::path_counts(paths);
        auto two = tensors::build_two_step(counts);
        auto one = tensors::build_one_step(counts);
        auto flows = simulate::annual_flows(sys.transactions, sys.catalog);
        simulate::SimSystem system(two, one, flows, sys.catalog, 10.0,
                                   simulate::TargetMode::Buffer);
        return BundledSystem{std::move(sys.catalog), std::move(two), std::move(one),
                             std::move(flows), std::move(system)};
    }

    simulate::SimConfig config() const {
        simulate::SimConfig config;
        config.tau = 5;
        config.horizon = 180;
        config.warmup = 10;
        config.audit = true;
        return config;
    }
    simulate::ShockSpec shock() const {
        simulate::ShockSpec shock;
        shock.shock_fraction = 0.3;
        shock.t_star = 1;
        shock.production_halt = true;
        return shock;
    }
};

Criterion criterion_conservation(const BundledSystem& bundled,
                                 const std::vector<simulate::RunResult>& runs) {
    Criterion c{6, "conservation: mass within 1e-9, no negative stocks, exact order split, byte-exact rerun"};
    for (const auto& run : runs) {
        c.require(run.worst_mass_error <= 1e-9,
                  "mass error " + std::to_string(run.worst_mass_error));
        c.require(run.min_stock_seen >= 0.0, "negative stock observed");
        c.require(run.order_conservation_ok, "order split identity violated");
    }
    auto config = bundled.config();
    config.record_flows = true;
    auto mixed = tensors::mix(bundled.t2, bundled.t1, tensors::Flexibility::homogeneous(0.5));
    auto again =
        simulate::run_simulation(bundled.system, bundled.t2, mixed, config, bundled.shock());
    const auto& reference = runs[1];  // phi = 0.5
    c.require(again.series.deficit == reference.series.deficit &&
                  again.series.final_shipped == reference.series.final_shipped &&
                  again.series.shipped_total == reference.series.shipped_total,
              "rerun at phi=0.5 not byte-identical");
    return c;
}

Criterion criterion_qualitative(const simulate::SweepResult& sweep) {
    Criterion c{7, "bundled 1000-distributor stress: deficit/Gamma/window/frontier shapes"};

    std::map<double, std::vector<double>> deficit, gamma;
    for (const auto& row : sweep.rows) {
        deficit[row.phi].push_back(row.deficit);
        gamma[row.phi].push_back(row.gamma);
    }
    for (const auto& [phi, curve] : deficit)
        for (std::size_t t = 1; t < curve.size(); ++t)
            if (curve[t] < curve[t - 1] - 1e-12)
                c.require(false, "deficit not non-decreasing at phi " + std::to_string(phi));

    const auto& base = deficit.at(0.0);
    double best_delta = 0;
    for (const auto& [phi, curve] : deficit)
        best_delta = std::max(best_delta, base[39] - curve[39]);
    c.require(best_delta > 0.0, "no deficit reduction at t=40");

    for (int t : {40, 90, 140}) {
        double prev = -1;
        for (const auto& [phi, curve] : gamma) {
            if (curve[t - 1] < prev - 1e-9)
                c.require(false, "Gamma not monotone in phi at t=" + std::to_string(t));
            prev = curve[t - 1];
        }
    }

    const double asd = 0.05;
    const int w0 = simulate::resupply_window(base, asd);
    int best_w = w0;
    for (const auto& [phi, curve] : deficit)
        best_w = std::max(best_w, simulate::resupply_window(curve, asd));
    c.require(best_w > w0,
              "resupply window not extended at ASD 0.05 (w0 = " + std::to_string(w0) + ")");

    bool inefficient_seen = false;
    for (const auto& row : sweep.rows)
        if ((row.t == 40 || row.t == 90 || row.t == 140) && !row.efficient)
            inefficient_seen = true;
    c.require(inefficient_seen, "no inefficient (phi, t) row found");

    std::ostringstream detail;
    detail << "deficit0(40)=" << base[39] << " best Delta(40)=" << best_delta << " window(0)=" << w0
           << " window(best)=" << best_w;
    c.detail = detail.str();
    return c;
}

// ---------------------------------------------------------------------------
// 8. Scale check
// ---------------------------------------------------------------------------

Criterion criterion_scale() {
    Criterion c{8, "scale: >= 1e7 transactions reconstructed in < 2 min and < 4 GB peak memory"};
    ingest::SynthSpec spec;
    spec.n_manufacturers = 40;
    spec.n_distributors = 1500;
    spec.n_final_buyers = 16000;
    spec.tiers = 3;
    spec.overlap = 0.5;
    spec.volume_scale = 600;
    spec.batches_per_year = 30;
    spec.seed = 99;
    auto sys = ingest::generate_synthetic_system(spec);
    if (sys.transactions.size() < 10000000) {
        c.require(false,
                  "generator produced only " + std::to_string(sys.transactions.size()) + " rows");
        return c;
    }
    const auto start = std::chrono::steady_clock::now();
    pathrec::ReconstructReport report;
    auto paths = pathrec::reconstruct_paths(sys.transactions, sys.catalog, report);
    const double seconds = elapsed_s(start);
    const long rss = peak_rss_mb();
    std::ostringstream detail;
    detail << sys.transactions.size() << " transactions in " << seconds << " s, peak RSS " << rss
           << " MB, " << paths.counts.size() << " distinct paths";
    c.detail = detail.str();
    c.require(seconds < 120.0, "reconstruction took " + std::to_string(seconds) + " s");
    c.require(rss > 0 && rss < 4096, "peak RSS " + std::to_string(rss) + " MB");
    c.require(report.delivered_units > 0, "nothing delivered");
    return c;
}

void report(const Criterion& c, double seconds) {
    std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", c.passed ? "PASS" : "FAIL", c.id,
                c.title.c_str(), seconds, c.detail.empty() ? "" : " -- ", c.detail.c_str());
    std::fflush(stdout);
}

}  // namespace

int main() {
    std::vector<Criterion> results;
    auto run = [&](Criterion (*fn)()) {
        const auto start = std::chrono::steady_clock::now();
        Criterion c = fn();
        report(c, elapsed_s(start));
        results.push_back(c);
    };

    run(criterion_micro_scenario);
    run(criterion_tensor_stochasticity);
    run(criterion_fifo_oracle);
    run(criterion_mle_recovery);
    run(criterion_spectral_oracle);

    // Criteria 6 and 7 share the bundled stress sweep (11-point grid over a
    // 180-day horizon).
    {
        const auto start = std::chrono::steady_clock::now();
        auto bundled = BundledSystem::build();
        auto config = bundled.config();
        std::vector<double> grid;
        for (int g = 0; g <= 10; ++g) grid.push_back(g / 10.0);
        auto sweep = simulate::sweep_phi(bundled.system, bundled.t2, bundled.t1, config,
                                         bundled.shock(), grid, {40, 90, 140}, 1);
        std::vector<simulate::RunResult> runs;
        for (double phi : {0.0, 0.5, 1.0}) {
            auto audit_config = config;
            audit_config.record_flows = true;
            auto mixed =
                tensors::mix(bundled.t2, bundled.t1, tensors::Flexibility::homogeneous(phi));
            runs.push_back(simulate::run_simulation(bundled.system, bundled.t2, mixed,
                                                    audit_config, bundled.shock()));
        }
        const double setup_s = elapsed_s(start);

        auto start6 = std::chrono::steady_clock::now();
        Criterion c6 = criterion_conservation(bundled, runs);
        report(c6, setup_s + elapsed_s(start6));
        results.push_back(c6);

        auto start7 = std::chrono::steady_clock::now();
        Criterion c7 = criterion_qualitative(sweep);
        report(c7, setup_s + elapsed_s(start7));
        results.push_back(c7);
    }

    run(criterion_scale);

    int failures = 0;
    for (const auto& c : results) failures += c.passed ? 0 : 1;
    std::printf("%d of %zu acceptance criteria passed\n",
                static_cast<int>(results.size()) - failures, results.size());
    return failures == 0 ? 0 : 1;
}
