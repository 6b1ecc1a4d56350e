#include <doctest.h>

#include <cmath>

#include "distflex/pathrec.hpp"
#include "distflex/rng.hpp"
#include "distflex/spectral.hpp"
#include "oracles.hpp"

using namespace distflex;
using namespace distflex::spectral;

namespace {

/// Random absorbing chain: transient states feed forward (plus some noise
/// edges) and leak into the absorbing last state.
SparseMatrix random_absorbing_chain(std::size_t n, Rng& rng) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
    for (std::size_t r = 0; r + 1 < n; ++r) {
        const int fanout = static_cast<int>(rng.range(1, 4));
        double total = 0;
        for (int f = 0; f < fanout; ++f) {
            const std::size_t c = rng.below(n);
            const double w = 0.05 + rng.uniform();
            rows[r][c] += w;
            total += w;
        }
        const double leak = 0.02 + 0.3 * rng.uniform();  // path to the absorber
        rows[r][n - 1] += leak;
        total += leak;
        for (auto& x : rows[r]) x /= total;
    }
    rows[n - 1][n - 1] = 1.0;
    return SparseMatrix::from_dense(rows);
}

/// Two-hub system whose X <-> Y loop deepens under flexibility: orderers'
/// 2-step preferences exit the loop toward manufacturers, while each hub's
/// own 1-step mix feeds the other hub. Observed paths also ship through a
/// peripheral distributor W, giving competing continuations.
struct CyclicHub {
    EntityCatalog catalog;
    tensors::OrderTransitionTensor t2, t1;
    std::unordered_map<EntityId, double> omega;

    CyclicHub() {
        const EntityId M1 = catalog.add("M1", Role::Manufacturer);
        const EntityId M2 = catalog.add("M2", Role::Manufacturer);
        const EntityId X = catalog.add("X", Role::Distributor);
        const EntityId Y = catalog.add("Y", Role::Distributor);
        const EntityId W = catalog.add("W", Role::Distributor);
        const EntityId V = catalog.add("V", Role::Distributor);
        pathrec::PathMultiset paths;
        auto add = [&](std::initializer_list<EntityId> nodes, std::int64_t count) {
            std::uint32_t p = pathrec::PathTable::kRoot;
            for (EntityId n : nodes) p = paths.table.extend(p, n);
            paths.add(p, 1, count);
        };
        add({M1, X, Y, X}, 1);
        add({M1, Y, X, Y}, 1);
        add({M1, X, Y}, 9);
        add({M1, Y, X}, 9);
        add({M1, X, Y, W}, 3);
        add({M2, V, W}, 30);
        auto counts = tensors::path_counts(paths);
        t2 = tensors::build_two_step(counts);
        t1 = tensors::build_one_step(counts);
        omega = pathrec::final_shipment_fractions(paths);
    }
};

tensors::SecondOrderChain two_route_chain(double phi) {
    EntityCatalog catalog;
    const EntityId A = catalog.add("A", Role::Manufacturer);
    const EntityId C = catalog.add("C", Role::Manufacturer);
    const EntityId D = catalog.add("D", Role::Distributor);
    const EntityId E = catalog.add("E", Role::Distributor);
    pathrec::PathMultiset paths;
    auto p1 = paths.table.extend(pathrec::PathTable::kRoot, A);
    p1 = paths.table.extend(p1, D);
    p1 = paths.table.extend(p1, E);
    paths.add(p1, 1, 2);
    auto p2 = paths.table.extend(pathrec::PathTable::kRoot, C);
    p2 = paths.table.extend(p2, D);
    paths.add(p2, 1, 2);
    auto counts = tensors::path_counts(paths);
    auto t2 = tensors::build_two_step(counts);
    auto t1 = tensors::build_one_step(counts);
    auto omega = pathrec::final_shipment_fractions(paths);
    auto mixed = tensors::mix(t2, t1, tensors::Flexibility::homogeneous(phi));
    return tensors::to_second_order(tensors::build_shipment_tensor_unit(mixed, 0), omega);
}

}  // namespace

TEST_CASE("second_eigenvalue: triangular 2x2") {
    auto m = SparseMatrix::from_dense({{0.5, 0.5}, {0.0, 1.0}});
    for (auto method : {EigOptions::Method::Dense, EigOptions::Method::Iterative}) {
        EigOptions opts;
        opts.method = method;
        auto r = second_eigenvalue(m, 1e-12, opts);
        CHECK(r.modulus == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(!r.degenerate);
    }
}

TEST_CASE("second_eigenvalue: identity is degenerate") {
    auto m = SparseMatrix::from_dense({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
    auto r = second_eigenvalue(m, 1e-12);
    CHECK(r.modulus == doctest::Approx(1.0));
    CHECK(r.degenerate);
}

TEST_CASE("second_eigenvalue: rejects non-stochastic input") {
    auto m = SparseMatrix::from_dense({{0.5, 0.4}, {0.0, 1.0}});
    CHECK_THROWS_AS(second_eigenvalue(m, 1e-12), ValidationError);
}

TEST_CASE("second_eigenvalue: iterative route matches the dense full spectrum") {
    Rng rng(1234);
    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t n = 20 + rng.below(60);
        auto m = random_absorbing_chain(n, rng);
        EigOptions dense;
        dense.method = EigOptions::Method::Dense;
        EigOptions iterative;
        iterative.method = EigOptions::Method::Iterative;
        iterative.tol = 1e-13;
        const auto a = second_eigenvalue(m, 1e-13, dense);
        const auto b = second_eigenvalue(m, 1e-13, iterative);
        INFO("n = ", n);
        CHECK(std::abs(a.modulus - b.modulus) <= 1e-9);
    }
}

TEST_CASE("second_eigenvalue: complex-pair spectrum (rotational chain)") {
    // Transient part is a weighted 3-cycle: its eigenvalues are complex cube
    // roots scaled by the survival probability, so the dominant transient
    // pair is strictly complex.
    const double p = 0.9;
    auto m = SparseMatrix::from_dense({
        {0.0, p, 0.0, 1 - p},
        {0.0, 0.0, p, 1 - p},
        {p, 0.0, 0.0, 1 - p},
        {0.0, 0.0, 0.0, 1.0},
    });
    EigOptions dense;
    dense.method = EigOptions::Method::Dense;
    EigOptions iterative;
    iterative.method = EigOptions::Method::Iterative;
    const auto a = second_eigenvalue(m, 1e-13, dense);
    const auto b = second_eigenvalue(m, 1e-13, iterative);
    CHECK(a.modulus == doctest::Approx(p).epsilon(1e-12));  // |p * exp(2 pi i/3)| = p
    CHECK(std::abs(a.modulus - b.modulus) <= 1e-9);
}

TEST_CASE("slowdown_factor") {
    CyclicHub hub;
    SUBCASE("sigma(0) = 1 exactly") {
        auto r = slowdown_factor(hub.t2, hub.t1, hub.omega, tensors::Flexibility::homogeneous(0.0),
                                 0);
        CHECK(r.sigma == 1.0);
        CHECK(r.lambda2_base == r.lambda2_flex);
    }
    SUBCASE("flexibility adds a detour: sigma(1) > 1") {
        auto r = slowdown_factor(hub.t2, hub.t1, hub.omega, tensors::Flexibility::homogeneous(1.0),
                                 0);
        CHECK(r.sigma > 1.0);
        CHECK(r.lambda2_flex > r.lambda2_base);
    }
    SUBCASE("identical tensors give sigma = 1 for every phi") {
        for (double phi : {0.0, 0.25, 0.7, 1.0}) {
            auto r = slowdown_factor(hub.t2, hub.t2, hub.omega,
                                     tensors::Flexibility::homogeneous(phi), 0);
            CHECK(r.sigma == 1.0);
        }
    }
    SUBCASE("sigma is continuous in phi") {
        auto a =
            slowdown_factor(hub.t2, hub.t1, hub.omega, tensors::Flexibility::homogeneous(0.5), 0);
        auto b = slowdown_factor(hub.t2, hub.t1, hub.omega,
                                 tensors::Flexibility::homogeneous(0.501), 0);
        CHECK(std::abs(a.sigma - b.sigma) <= 0.02);
    }
    SUBCASE("hub-periphery slow-down grows monotonously with phi") {
        double prev = 1.0;
        for (double phi : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
            auto r = slowdown_factor(hub.t2, hub.t1, hub.omega,
                                     tensors::Flexibility::homogeneous(phi), 0);
            CHECK(r.lambda2_base > 0.0);
            CHECK(r.lambda2_base < 1.0);
            CHECK(r.lambda2_flex > 0.0);
            CHECK(r.lambda2_flex < 1.0);
            CHECK(r.sigma >= prev - 1e-9);
            prev = r.sigma;
        }
    }
}

TEST_CASE("slowdown on generated systems: valid absorbing spectrum") {
    ingest::SynthSpec spec;
    spec.n_manufacturers = 3;
    spec.n_distributors = 12;
    spec.n_final_buyers = 30;
    spec.tiers = 3;
    spec.overlap = 0.6;
    spec.seed = 21;
    spec.batches_per_year = 10;
    auto sys = ingest::generate_synthetic_system(spec);
    pathrec::ReconstructReport report;
    auto paths = pathrec::reconstruct_paths(sys.transactions, sys.catalog, report);
    auto counts = tensors::path_counts(paths);
    auto t2 = tensors::build_two_step(counts);
    auto t1 = tensors::build_one_step(counts);
    auto omega = pathrec::final_shipment_fractions(paths);

    for (double phi : {0.0, 0.5, 1.0}) {
        auto r = slowdown_factor(t2, t1, omega, tensors::Flexibility::homogeneous(phi), 0);
        // Triangle routes keep the transient part non-nilpotent.
        CHECK(r.lambda2_base > 0.0);
        CHECK(r.lambda2_base < 1.0);
        CHECK(r.lambda2_flex > 0.0);
        CHECK(r.lambda2_flex < 1.0);
        CHECK(std::isfinite(r.sigma));
        CHECK(r.sigma > 0.0);
    }
}

TEST_CASE("bootstrap_slowdown produces ordered bands around the point estimate") {
    EntityCatalog catalog;
    (void)catalog;
    // A small two-route system with enough variation for a resample.
    pathrec::PathMultiset paths;
    EntityCatalog cat2;
    const EntityId A = cat2.add("A", Role::Manufacturer);
    const EntityId C = cat2.add("C", Role::Manufacturer);
    const EntityId D = cat2.add("D", Role::Distributor);
    const EntityId E = cat2.add("E", Role::Distributor);
    auto p1 = paths.table.extend(pathrec::PathTable::kRoot, A);
    p1 = paths.table.extend(p1, D);
    p1 = paths.table.extend(p1, E);
    paths.add(p1, 1, 40);
    auto p2 = paths.table.extend(pathrec::PathTable::kRoot, C);
    p2 = paths.table.extend(p2, D);
    paths.add(p2, 1, 40);
    auto p3 = paths.table.extend(pathrec::PathTable::kRoot, C);
    p3 = paths.table.extend(p3, D);
    p3 = paths.table.extend(p3, E);
    paths.add(p3, 1, 10);

    auto curve = bootstrap_slowdown(paths, {0.0, 0.5, 1.0}, 40, 9, 1);
    REQUIRE(curve.size() == 3);
    CHECK(curve[0].sigma == 1.0);
    for (const auto& point : curve) {
        CHECK(point.ci_low95 <= point.ci_low50 + 1e-12);
        CHECK(point.ci_low50 <= point.ci_high50 + 1e-12);
        CHECK(point.ci_high50 <= point.ci_high95 + 1e-12);
    }
}

TEST_CASE("two-route chain is a valid absorbing chain at every phi") {
    for (double phi : {0.0, 0.5, 1.0}) {
        auto chain = two_route_chain(phi);
        auto m = SparseMatrix::from_chain(chain);
        CHECK(m.max_row_sum_error() <= 1e-12);
    }
}
