// Python bindings: the main operations of the pipeline with plain python
// types at the boundary (entity and product ids travel as strings).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>

#include "distflex/estimate.hpp"
#include "distflex/ingest.hpp"
#include "distflex/pathrec.hpp"
#include "distflex/simulate.hpp"
#include "distflex/spectral.hpp"
#include "distflex/tensors.hpp"

namespace py = pybind11;
using namespace distflex;

namespace {

using PyTransaction = std::tuple<std::string, std::string, std::string, std::string, std::int64_t>;
using PyPath = std::tuple<std::vector<std::string>, std::string, std::int64_t>;
using PyTriple = std::tuple<std::string, std::string, std::string, double>;

EntityCatalog catalog_from_dict(const std::map<std::string, std::string>& roles) {
    EntityCatalog catalog;
    for (const auto& [name, role] : roles) catalog.add(name, parse_role(role));
    return catalog;
}

std::vector<ingest::Transaction> transactions_from_list(const std::vector<PyTransaction>& rows,
                                                        const EntityCatalog& catalog,
                                                        Interner& products) {
    std::ostringstream csv;
    csv << "date,seller_id,buyer_id,product_code,quantity\n";
    for (const auto& [date, seller, buyer, product, qty] : rows)
        csv << date << ',' << seller << ',' << buyer << ',' << product << ',' << qty << '\n';
    std::istringstream in(csv.str());
    return ingest::parse_transactions(in, catalog, products);
}

pathrec::PathMultiset paths_from_list(const std::vector<PyPath>& rows,
                                      const EntityCatalog& catalog, Interner& products) {
    pathrec::PathMultiset out;
    for (const auto& [nodes, product, count] : rows) {
        std::uint32_t prefix = pathrec::PathTable::kRoot;
        for (const auto& name : nodes) {
            const EntityId id = catalog.ids.find(name);
            if (id == kNoEntity) throw ValidationError("unknown entity '" + name + "'");
            prefix = out.table.extend(prefix, id);
        }
        if (prefix == pathrec::PathTable::kRoot) throw ValidationError("empty path");
        out.add(prefix, products.intern(product), count);
    }
    return out;
}

std::vector<PyTriple> triples_to_list(const std::vector<tensors::Triple>& entries,
                                      const EntityCatalog& catalog) {
    std::vector<PyTriple> out;
    out.reserve(entries.size());
    for (const auto& e : entries)
        out.emplace_back(catalog.ids.name(e.i), catalog.ids.name(e.j), catalog.ids.name(e.k),
                         e.value);
    return out;
}

tensors::Flexibility flexibility_from_py(const py::object& phi, const EntityCatalog& catalog) {
    tensors::Flexibility out;
    if (py::isinstance<py::dict>(phi)) {
        for (auto item : phi.cast<py::dict>()) {
            const auto name = item.first.cast<std::string>();
            const EntityId id = catalog.ids.find(name);
            if (id == kNoEntity) throw ValidationError("unknown entity '" + name + "'");
            out.overrides[id] = item.second.cast<double>();
        }
    } else {
        out.base = phi.cast<double>();
    }
    return out;
}

struct TensorPair {
    EntityCatalog catalog;
    Interner products;
    tensors::OrderTransitionTensor two_step, one_step;
    std::unordered_map<EntityId, double> volumes;
    std::unordered_map<EntityId, double> omega;
};

TensorPair tensors_of(const std::vector<PyPath>& paths,
                      const std::map<std::string, std::string>& roles) {
    TensorPair pair;
    pair.catalog = catalog_from_dict(roles);
    auto multiset = paths_from_list(paths, pair.catalog, pair.products);
    auto counts = tensors::path_counts(multiset);
    pair.two_step = tensors::build_two_step(counts);
    pair.one_step = tensors::build_one_step(counts);
    pair.volumes = tensors::order_volumes(counts);
    pair.omega = pathrec::final_shipment_fractions(multiset);
    return pair;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "distribution-path reconstruction, flexibility estimation and stress testing";

    py::register_exception<ValidationError>(m, "ValidationError");
    py::register_exception<NumericalError>(m, "NumericalError");

    m.def(
        "generate_synthetic_system",
        [](std::uint32_t n_manufacturers, std::uint32_t n_distributors,
           std::uint32_t n_final_buyers, std::uint32_t tiers, double overlap, double volume_scale,
           std::uint64_t seed, std::uint32_t years, std::uint32_t batches_per_year,
           int start_year) {
            ingest::SynthSpec spec;
            spec.n_manufacturers = n_manufacturers;
            spec.n_distributors = n_distributors;
            spec.n_final_buyers = n_final_buyers;
            spec.tiers = tiers;
            spec.overlap = overlap;
            spec.volume_scale = volume_scale;
            spec.seed = seed;
            spec.years = years;
            spec.batches_per_year = batches_per_year;
            spec.start_year = start_year;
            auto sys = ingest::generate_synthetic_system(spec);

            py::dict out;
            py::dict catalog;
            for (EntityId id = 1; id < sys.catalog.ids.size(); ++id)
                catalog[py::str(sys.catalog.ids.name(id))] =
                    std::string(role_name(sys.catalog.role(id)));
            std::vector<PyTransaction> txs;
            txs.reserve(sys.transactions.size());
            for (const auto& tx : sys.transactions)
                txs.emplace_back(format_iso_date(tx.date), sys.catalog.ids.name(tx.seller),
                                 sys.catalog.ids.name(tx.buyer), sys.products.name(tx.product),
                                 tx.quantity);
            py::dict rules;
            for (const auto& [code, rule] : sys.rules)
                rules[py::str(code)] = py::make_tuple(rule.ingredient, rule.form, rule.strength);
            out["catalog"] = catalog;
            out["transactions"] = txs;
            out["rules"] = rules;
            out["product_codes"] = sys.product_codes;
            return out;
        },
        py::arg("n_manufacturers") = 4, py::arg("n_distributors") = 30,
        py::arg("n_final_buyers") = 120, py::arg("tiers") = 2, py::arg("overlap") = 0.5,
        py::arg("volume_scale") = 400.0, py::arg("seed") = 1, py::arg("years") = 1,
        py::arg("batches_per_year") = 50, py::arg("start_year") = 2012,
        "Deterministic tiered synthetic distribution system.");

    m.def(
        "reconstruct_paths",
        [](const std::vector<PyTransaction>& rows, const std::map<std::string, std::string>& roles,
           unsigned workers) {
            EntityCatalog catalog = catalog_from_dict(roles);
            Interner products;
            auto txs = transactions_from_list(rows, catalog, products);
            pathrec::ReconstructReport report;
            auto multiset = pathrec::reconstruct_paths(txs, catalog, report, workers);

            py::dict out;
            std::vector<py::tuple> paths;
            for (const auto& p : multiset.materialized(catalog)) {
                std::vector<std::string> nodes;
                for (EntityId id : p.nodes) nodes.push_back(catalog.ids.name(id));
                paths.push_back(
                    py::make_tuple(nodes, products.name(p.product), p.count, p.phantom));
            }
            py::dict rep;
            rep["delivered_units"] = report.delivered_units;
            rep["phantom_units"] = report.phantom_units_total;
            rep["final_buyer_sales_skipped"] = report.final_buyer_sales_skipped;
            rep["manufacturer_purchases_skipped"] = report.manufacturer_purchases_skipped;
            py::list underflows;
            for (const auto& u : report.underflows)
                underflows.append(py::make_tuple(catalog.ids.name(u.entity),
                                                 products.name(u.product), u.phantom_units));
            rep["underflows"] = underflows;
            out["paths"] = paths;
            out["report"] = rep;
            return out;
        },
        py::arg("transactions"), py::arg("catalog"), py::arg("workers") = 1,
        "FIFO path reconstruction over a transaction list.");

    m.def(
        "build_tensors",
        [](const std::vector<PyPath>& paths, const std::map<std::string, std::string>& roles) {
            auto pair = tensors_of(paths, roles);
            py::dict out;
            out["two_step"] = triples_to_list(pair.two_step.entries, pair.catalog);
            out["one_step"] = triples_to_list(pair.one_step.entries, pair.catalog);
            std::vector<std::string> degenerate;
            for (EntityId e : pair.two_step.degenerate_orderers)
                degenerate.push_back(pair.catalog.ids.name(e));
            out["degenerate_orderers"] = degenerate;
            return out;
        },
        py::arg("paths"), py::arg("catalog"),
        "Two-step and one-step order transition tensors from a path multiset.");

    m.def(
        "mix_tensors",
        [](const std::vector<PyPath>& paths, const std::map<std::string, std::string>& roles,
           const py::object& phi) {
            auto pair = tensors_of(paths, roles);
            auto mixed =
                tensors::mix(pair.two_step, pair.one_step, flexibility_from_py(phi, pair.catalog));
            return triples_to_list(mixed.entries, pair.catalog);
        },
        py::arg("paths"), py::arg("catalog"), py::arg("phi"),
        "Flexibility mixture T(phi) over the tensors of a path multiset.");

    m.def(
        "distributor_positions",
        [](const std::vector<PyPath>& paths, const std::map<std::string, std::string>& roles) {
            EntityCatalog catalog = catalog_from_dict(roles);
            Interner products;
            auto multiset = paths_from_list(paths, catalog, products);
            std::map<std::string, double> out;
            for (const auto& [id, pos] : pathrec::distributor_positions(multiset))
                out[catalog.ids.name(id)] = pos;
            return out;
        },
        py::arg("paths"), py::arg("catalog"),
        "Count-weighted mean path position per distributor.");

    m.def(
        "fit_flexibility",
        [](const std::vector<PyPath>& train, const std::vector<PyPath>& observe,
           const std::map<std::string, std::string>& roles, const std::string& mode) {
            auto pair = tensors_of(train, roles);
            Interner observe_products;
            auto observed_paths = paths_from_list(observe, pair.catalog, observe_products);
            auto observed = estimate::observed_shipments(observed_paths);
            auto [supported, unsupported] = estimate::LikelihoodModel::split_by_support(
                observed, pair.two_step, pair.one_step);
            estimate::LikelihoodModel model(pair.two_step, pair.one_step, pair.volumes, supported);
            py::dict out;
            double off = 0;
            for (const auto& o : unsupported.entries) off += o.value;
            out["unsupported_observation_mass"] = off;
            if (mode == "homogeneous") {
                auto fit = estimate::fit_phi_homogeneous(model);
                out["phi"] = fit.phi.base;
                out["log_likelihood"] = fit.log_likelihood;
                out["flat"] = fit.flat;
            } else if (mode == "per-distributor") {
                auto fit = estimate::fit_phi_per_distributor(model);
                std::map<std::string, double> phi;
                for (EntityId e : model.fit_coordinates())
                    phi[pair.catalog.ids.name(e)] = fit.phi.at(e);
                std::vector<std::string> flat;
                for (EntityId e : fit.flat_coordinates) flat.push_back(pair.catalog.ids.name(e));
                out["phi"] = phi;
                out["log_likelihood"] = fit.log_likelihood;
                out["flat"] = flat;
            } else {
                throw ValidationError("mode must be 'homogeneous' or 'per-distributor'");
            }
            return out;
        },
        py::arg("train"), py::arg("observe"), py::arg("catalog"),
        py::arg("mode") = "homogeneous",
        "Maximum-likelihood flexibility from training paths and observed shipments.");

    m.def(
        "slowdown_curve",
        [](const std::vector<PyPath>& paths, const std::map<std::string, std::string>& roles,
           const std::vector<double>& phis, int samples, std::uint64_t seed, unsigned workers) {
            EntityCatalog catalog = catalog_from_dict(roles);
            Interner products;
            auto multiset = paths_from_list(paths, catalog, products);
            auto curve = spectral::bootstrap_slowdown(multiset, phis, samples, seed, workers);
            std::vector<py::dict> out;
            for (const auto& p : curve) {
                py::dict row;
                row["phi"] = p.phi;
                row["lambda2_base"] = p.lambda2_base;
                row["lambda2_flex"] = p.lambda2_flex;
                row["sigma"] = p.sigma;
                row["ci50"] = py::make_tuple(p.ci_low50, p.ci_high50);
                row["ci95"] = py::make_tuple(p.ci_low95, p.ci_high95);
                out.push_back(row);
            }
            return out;
        },
        py::arg("paths"), py::arg("catalog"), py::arg("phis"), py::arg("samples") = 0,
        py::arg("seed") = 1, py::arg("workers") = 1,
        "Slow-down factor per flexibility value, with optional bootstrap bands.");

    m.def(
        "stress_sweep",
        [](const std::vector<PyTransaction>& rows, const std::map<std::string, std::string>& roles,
           const std::vector<double>& grid, double shock_fraction, bool production_halt,
           int t_star, int tau, int horizon, int warmup, double manufacturer_stock_days,
           const std::string& target_mode, const std::vector<int>& times, unsigned workers) {
            EntityCatalog catalog = catalog_from_dict(roles);
            Interner products;
            auto txs = transactions_from_list(rows, catalog, products);
            pathrec::ReconstructReport report;
            auto paths = pathrec::reconstruct_paths(txs, catalog, report, workers);
            auto counts = tensors::path_counts(paths);
            auto two = tensors::build_two_step(counts);
            auto one = tensors::build_one_step(counts);
            auto flows = simulate::annual_flows(txs, catalog);
            simulate::TargetMode mode;
            if (target_mode == "annual")
                mode = simulate::TargetMode::Annual;
            else if (target_mode == "buffer")
                mode = simulate::TargetMode::Buffer;
            else
                throw ValidationError("target_mode must be annual or buffer");
            simulate::SimSystem system(two, one, flows, catalog, manufacturer_stock_days, mode);

            simulate::SimConfig config;
            config.tau = tau;
            config.horizon = horizon;
            config.warmup = warmup;
            simulate::ShockSpec shock;
            shock.shock_fraction = shock_fraction;
            shock.t_star = t_star;
            shock.production_halt = production_halt;
            auto sweep =
                simulate::sweep_phi(system, two, one, config, shock, grid, times, workers);

            py::dict out;
            std::vector<py::tuple> sweep_rows;
            for (const auto& row : sweep.rows)
                sweep_rows.push_back(py::make_tuple(row.t, row.phi, row.deficit, row.gamma,
                                                    row.delta_reduction, row.efficient));
            out["rows"] = sweep_rows;
            out["phi_star"] = sweep.phi_star;
            out["gamma_degenerate"] = sweep.gamma_degenerate;
            return out;
        },
        py::arg("transactions"), py::arg("catalog"), py::arg("grid"),
        py::arg("shock_fraction") = 0.3, py::arg("production_halt") = true, py::arg("t_star") = 1,
        py::arg("tau") = 5, py::arg("horizon") = 180, py::arg("warmup") = 10,
        py::arg("manufacturer_stock_days") = 30.0, py::arg("target_mode") = "buffer",
        py::arg("times") = std::vector<int>{40, 50, 60}, py::arg("workers") = 1,
        "Shock simulation swept over a flexibility grid.");

    m.def("resupply_window", &simulate::resupply_window, py::arg("deficit"), py::arg("asd"),
          "Largest day with deficit <= asd (0 if breached immediately, horizon if never).");
}
