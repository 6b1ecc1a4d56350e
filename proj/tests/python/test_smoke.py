"""End-to-end smoke test of the python module on a small synthetic system."""

import math
import sys
from collections import defaultdict

import distflex


def check(condition, message):
    if not condition:
        print(f"smoke FAIL: {message}", file=sys.stderr)
        sys.exit(1)


def main():
    system = distflex.generate_synthetic_system(
        n_manufacturers=3,
        n_distributors=20,
        n_final_buyers=60,
        tiers=2,
        overlap=0.6,
        volume_scale=300,
        seed=11,
        batches_per_year=30,
    )
    catalog = system["catalog"]
    check(len(system["transactions"]) > 1000, "too few transactions generated")
    check(set(catalog.values()) == {"manufacturer", "distributor", "final_buyer"},
          "unexpected roles")

    # Determinism of the generator.
    again = distflex.generate_synthetic_system(
        n_manufacturers=3,
        n_distributors=20,
        n_final_buyers=60,
        tiers=2,
        overlap=0.6,
        volume_scale=300,
        seed=11,
        batches_per_year=30,
    )
    check(again["transactions"] == system["transactions"], "generator not deterministic")

    result = distflex.reconstruct_paths(system["transactions"], catalog)
    paths = [(nodes, product, count) for nodes, product, count, phantom in result["paths"]]
    check(result["report"]["phantom_units"] == 0, "synthetic log should have no underflow")
    check(result["report"]["delivered_units"] == sum(c for _, _, c in paths),
          "delivered units do not match the multiset")
    for nodes, _, _, phantom in result["paths"]:
        check(catalog[nodes[0]] == "manufacturer" or phantom, "path head is not a manufacturer")

    tensors = distflex.build_tensors(paths, catalog)
    for name in ("two_step", "one_step"):
        sums = defaultdict(float)
        for i, j, k, value in tensors[name]:
            sums[i] += value
        for i, total in sums.items():
            check(abs(total - 1.0) <= 1e-12, f"{name} row {i} sums to {total}")

    mixed = distflex.mix_tensors(paths, catalog, 0.5)
    sums = defaultdict(float)
    for i, j, k, value in mixed:
        sums[i] += value
    for i, total in sums.items():
        check(abs(total - 1.0) <= 1e-12, f"mixed row {i} sums to {total}")

    positions = distflex.distributor_positions(paths, catalog)
    check(all(p >= 1.0 for p in positions.values()), "positions must be >= 1")

    fit = distflex.fit_flexibility(paths, paths, catalog, mode="homogeneous")
    check(fit["phi"] <= 0.05, f"self-fit should sit at low phi, got {fit['phi']}")

    curve = distflex.slowdown_curve(paths, catalog, [0.0, 0.5, 1.0], samples=10, seed=4)
    check(curve[0]["sigma"] == 1.0, "sigma(0) != 1")
    for row in curve:
        check(0.0 < row["lambda2_base"] < 1.0, "lambda2 outside (0,1)")

    sweep = distflex.stress_sweep(
        system["transactions"],
        catalog,
        grid=[0.0, 0.5, 1.0],
        shock_fraction=0.3,
        production_halt=True,
        horizon=60,
        manufacturer_stock_days=10.0,
        times=[40],
    )
    by_phi = defaultdict(list)
    for t, phi, deficit, gamma, delta, efficient in sweep["rows"]:
        by_phi[phi].append(deficit)
        check(0.0 <= gamma <= 1.0, "gamma outside [0,1]")
    for phi, curve in by_phi.items():
        check(all(b >= a - 1e-12 for a, b in zip(curve, curve[1:])),
              f"deficit not monotone at phi={phi}")
    window = distflex.resupply_window(by_phi[0.0], 0.05)
    check(0 <= window <= 60, "resupply window out of range")

    print("python smoke OK")


if __name__ == "__main__":
    main()
