// distflex command-line tool: synthesize or ingest shipment logs, reconstruct
// distribution paths, build transition tensors, fit flexibility, and run
// stress tests / slow-down analyses. Every command writes a run manifest and
// plot-ready CSVs; stages are resumable from each other's outputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "distflex/csv.hpp"
#include "distflex/estimate.hpp"
#include "distflex/ingest.hpp"
#include "distflex/parallel.hpp"
#include "distflex/pathrec.hpp"
#include "distflex/simulate.hpp"
#include "distflex/spectral.hpp"
#include "distflex/tensors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace distflex;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Key-value config files: `key = value` lines, '#' comments.
// ---------------------------------------------------------------------------

class Config {
  public:
    Config() = default;

    static Config load(const std::string& path) {
        Config config;
        if (path.empty()) return config;
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file '" + path + "'");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                if (line.find_first_not_of(" \t\r\n") != std::string::npos)
                    throw ValidationError("config line " + std::to_string(line_no) +
                                          ": expected key = value");
                continue;
            }
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r\n");
                const auto b = s.find_last_not_of(" \t\r\n");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            config.values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
        return config;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string str(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    double num(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : csv::parse_double(it->second, "config", 0);
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : csv::parse_int(it->second, "config", 0);
    }
    std::vector<double> num_list(const std::string& key, std::vector<double> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(csv::parse_double(item, "config", 0));
        return out;
    }
    std::vector<int> int_list(const std::string& key, std::vector<int> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<int> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(static_cast<int>(csv::parse_int(item, "config", 0)));
        return out;
    }

    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
        return out;
    }

  private:
    std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

class Manifest {
  public:
    Manifest(std::string command, const Config& config, std::uint64_t seed, std::string out_dir)
        : command_(std::move(command)),
          out_dir_(std::move(out_dir)),
          seed_(seed),
          digest_(fnv1a(config.canonical() + "#seed=" + std::to_string(seed))),
          start_(std::chrono::steady_clock::now()) {
        fs::create_directories(out_dir_);
    }

    void input(const std::string& path) { inputs_.push_back(path); }
    void stat(const std::string& key, const json& value) { stats_[key] = value; }

    fs::path path(const std::string& name) const { return fs::path(out_dir_) / name; }

    /// Registers the file as an output and opens it for writing.
    std::ofstream open(const std::string& name) {
        const fs::path p = path(name);
        outputs_.push_back(p.string());
        std::ofstream out(p);
        if (!out) throw IoError("cannot write '" + p.string() + "'");
        return out;
    }

    void write() {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start_)
                                 .count();
        json doc;
        doc["command"] = command_;
        doc["tool_version"] = kVersion;
        doc["seed"] = seed_;
        doc["config_digest"] = digest_;
        doc["inputs"] = inputs_;
        doc["outputs"] = outputs_;
        doc["duration_ms"] = elapsed;
        doc["stats"] = stats_;
        std::ofstream out(path("manifest.json"));
        out << doc.dump(2) << "\n";
    }

  private:
    std::string command_, out_dir_;
    std::uint64_t seed_, digest_;
    std::vector<std::string> inputs_, outputs_;
    json stats_ = json::object();
    std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// Shared pipeline pieces
// ---------------------------------------------------------------------------

EntityCatalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open catalog '" + path + "'");
    return ingest::parse_catalog(in);
}

std::vector<ingest::Transaction> load_transactions(const std::string& path,
                                                   const EntityCatalog& catalog,
                                                   Interner& products) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open transactions '" + path + "'");
    return ingest::parse_transactions(in, catalog, products);
}

pathrec::PathMultiset load_paths(const std::string& path, const EntityCatalog& catalog,
                                 Interner& products) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open paths '" + path + "'");
    return pathrec::parse_paths(in, catalog, products);
}

/// Restrict transactions to the products of one substitutability class.
std::vector<ingest::Transaction> filter_class(std::vector<ingest::Transaction> txs,
                                              const Interner& products,
                                              const std::string& rules_path,
                                              const std::string& class_id) {
    if (class_id.empty()) return txs;
    if (rules_path.empty())
        throw ValidationError("--class requires --rules to resolve product classes");
    std::ifstream in(rules_path);
    if (!in) throw IoError("cannot open rules '" + rules_path + "'");
    auto rules = ingest::parse_rules(in);
    std::vector<std::string> codes;
    for (const auto& [code, rule] : rules) codes.push_back(code);
    std::set<ProductId> keep;
    for (const auto& cls : ingest::group_substitutables(codes, rules)) {
        if (cls.class_id != class_id) continue;
        for (const auto& code : cls.members) {
            const ProductId id = products.find(code);
            if (id != kNoEntity) keep.insert(id);
        }
    }
    if (keep.empty())
        throw ValidationError("class '" + class_id + "' matches no product in the data");
    std::erase_if(txs, [&](const ingest::Transaction& tx) { return !keep.count(tx.product); });
    return txs;
}

struct TensorBundle {
    tensors::CountTensor counts;
    tensors::OrderTransitionTensor two_step, one_step;
    std::unordered_map<EntityId, double> volumes;
    std::unordered_map<EntityId, double> omega;
};

TensorBundle build_tensor_bundle(const pathrec::PathMultiset& paths) {
    TensorBundle bundle;
    bundle.counts = tensors::path_counts(paths);
    bundle.two_step = tensors::build_two_step(bundle.counts);
    bundle.one_step = tensors::build_one_step(bundle.counts);
    bundle.volumes = tensors::order_volumes(bundle.counts);
    bundle.omega = pathrec::final_shipment_fractions(paths);
    return bundle;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    unsigned workers = 0;  // 0: config value, else hardware default

    unsigned resolved_workers(const Config& config) const {
        if (workers > 0) return workers;
        const auto from_config = config.integer("workers", 0);
        return from_config > 0 ? static_cast<unsigned>(from_config) : default_workers();
    }
};

int cmd_synth(const CommonArgs& args) {
    const Config config = Config::load(args.config_path);
    Manifest manifest("synth", config, args.seed, args.out_dir);

    ingest::SynthSpec spec;
    spec.n_manufacturers = static_cast<std::uint32_t>(config.integer("n_manufacturers", 4));
    spec.n_distributors = static_cast<std::uint32_t>(config.integer("n_distributors", 30));
    spec.n_final_buyers = static_cast<std::uint32_t>(config.integer("n_final_buyers", 120));
    spec.tiers = static_cast<std::uint32_t>(config.integer("tiers", 2));
    spec.overlap = config.num("overlap", 0.5);
    spec.volume_scale = config.num("volume_scale", 400.0);
    spec.years = static_cast<std::uint32_t>(config.integer("years", 1));
    spec.batches_per_year = static_cast<std::uint32_t>(config.integer("batches_per_year", 50));
    spec.start_year = static_cast<int>(config.integer("start_year", 2012));
    spec.seed = args.seed;

    auto system = ingest::generate_synthetic_system(spec);
    {
        auto out = manifest.open("transactions.csv");
        ingest::write_transactions(out, system.transactions, system.catalog, system.products);
    }
    {
        auto out = manifest.open("catalog.csv");
        ingest::write_catalog(out, system.catalog);
    }
    {
        auto out = manifest.open("rules.csv");
        ingest::write_rules(out, system.rules);
    }
    manifest.stat("transactions", system.transactions.size());
    manifest.stat("entities", system.catalog.entity_count());
    manifest.write();
    return 0;
}

int cmd_ingest(const CommonArgs& args, const std::string& tx_path, const std::string& cat_path) {
    const Config config = Config::load(args.config_path);
    Manifest manifest("ingest", config, args.seed, args.out_dir);
    manifest.input(tx_path);
    manifest.input(cat_path);

    auto report = manifest.open("validation_report.txt");
    try {
        EntityCatalog catalog = load_catalog(cat_path);
        Interner products;
        auto txs = load_transactions(tx_path, catalog, products);
        {
            auto out = manifest.open("transactions.csv");
            ingest::write_transactions(out, txs, catalog, products);
        }
        {
            auto out = manifest.open("catalog.csv");
            ingest::write_catalog(out, catalog);
        }
        report << "errors: 0\nrows: " << txs.size() << "\n";
        if (!txs.empty())
            report << "date_range: " << format_iso_date(txs.front().date) << ".."
                   << format_iso_date(txs.back().date) << "\n";
        manifest.stat("rows", txs.size());
        manifest.stat("errors", 0);
        manifest.write();
        return 0;
    } catch (const ValidationError& e) {
        report << "errors: 1\nerror: " << e.what() << "\n";
        manifest.stat("errors", 1);
        manifest.stat("first_error", e.what());
        manifest.write();
        std::cerr << "validation failed: " << e.what() << "\n";
        return 1;
    }
}

int cmd_reconstruct(const CommonArgs& args, const std::string& tx_path,
                    const std::string& cat_path, const std::string& rules_path,
                    const std::string& class_id) {
    const Config config = Config::load(args.config_path);
    Manifest manifest("reconstruct", config, args.seed, args.out_dir);
    manifest.input(tx_path);
    manifest.input(cat_path);

    EntityCatalog catalog = load_catalog(cat_path);
    Interner products;
    auto txs = load_transactions(tx_path, catalog, products);
    txs = filter_class(std::move(txs), products, rules_path, class_id);

    pathrec::ReconstructReport report;
    auto paths = pathrec::reconstruct_paths(txs, catalog, report, args.resolved_workers(config));
    {
        auto out = manifest.open("paths.csv");
        pathrec::write_paths(out, paths, catalog, products);
    }
    {
        auto out = manifest.open("underflow.csv");
        pathrec::write_underflow_report(out, report, catalog, products);
    }
    manifest.stat("transactions", txs.size());
    manifest.stat("distinct_paths", paths.counts.size());
    manifest.stat("delivered_units", report.delivered_units);
    manifest.stat("phantom_units", report.phantom_units_total);
    manifest.stat("final_buyer_sales_skipped", report.final_buyer_sales_skipped);
    manifest.stat("manufacturer_purchases_skipped", report.manufacturer_purchases_skipped);
    manifest.write();
    return 0;
}

int cmd_tensors(const CommonArgs& args, const std::string& paths_path,
                const std::string& cat_path, double phi) {
    const Config config = Config::load(args.config_path);
    Manifest manifest("tensors", config, args.seed, args.out_dir);
    manifest.input(paths_path);
    manifest.input(cat_path);

    EntityCatalog catalog = load_catalog(cat_path);
    Interner products;
    auto paths = load_paths(paths_path, catalog, products);
    auto bundle = build_tensor_bundle(paths);
    {
        auto out = manifest.open("tensor_two_step.csv");
        tensors::write_tensor(out, bundle.two_step.entries, catalog);
    }
    {
        auto out = manifest.open("tensor_one_step.csv");
        tensors::write_tensor(out, bundle.one_step.entries, catalog);
    }
    if (phi >= 0.0) {
        auto mixed =
            tensors::mix(bundle.two_step, bundle.one_step, tensors::Flexibility::homogeneous(phi));
        auto out = manifest.open("tensor_mixed.csv");
        tensors::write_tensor(out, mixed.entries, catalog);
    }
    manifest.stat("two_step_entries", bundle.two_step.entries.size());
    manifest.stat("one_step_entries", bundle.one_step.entries.size());
    manifest.stat("degenerate_orderers", bundle.two_step.degenerate_orderers.size());
    manifest.write();
    return 0;
}

int cmd_export_graph(const CommonArgs& args, const std::string& paths_path,
                     const std::string& cat_path) {
    const Config config = Config::load(args.config_path);
    Manifest manifest("export-graph", config, args.seed, args.out_dir);
    manifest.input(paths_path);
    manifest.input(cat_path);

    EntityCatalog catalog = load_catalog(cat_path);
    Interner products;
    auto paths = load_paths(paths_path, catalog, products);
    auto bundle = build_tensor_bundle(paths);
    auto edges = tensors::alternative_edges(bundle.two_step, bundle.one_step);
    {
        auto out = manifest.open("second_order_graph.csv");
        tensors::write_second_order_edges(out, edges, catalog);
    }
    std::size_t alternative = 0;
    for (const auto& e : edges) alternative += e.alternative ? 1 : 0;
    manifest.stat("edges", edges.size());
    manifest.stat("alternative_edges", alternative);
    manifest.write();
    return 0;
}

int cmd_fit(const CommonArgs& args, const std::string& cat_path, const std::string& train_path,
            const std::string& observe_path, const std::vector<std::string>& year_specs,
            const std::string& mode) {
    const Config config = Config::load(args.config_path);
    Manifest manifest("fit", config, args.seed, args.out_dir);
    manifest.input(cat_path);

    EntityCatalog catalog = load_catalog(cat_path);
    Interner products;
    estimate::YearToYearResult result;

    if (!year_specs.empty()) {
        std::map<int, pathrec::PathMultiset> by_year;
        for (const auto& spec : year_specs) {
            const auto eq = spec.find('=');
            if (eq == std::string::npos)
                throw ValidationError("--paths-by-year expects YEAR=FILE, got '" + spec + "'");
            const int year = static_cast<int>(csv::parse_int(spec.substr(0, eq), "year", 0));
            manifest.input(spec.substr(eq + 1));
            by_year[year] = load_paths(spec.substr(eq + 1), catalog, products);
        }
        result = estimate::year_to_year_flexibility(
            by_year, catalog, static_cast<int>(config.integer("max_sweeps", 20)));
    } else {
        if (train_path.empty() || observe_path.empty())
            throw ValidationError("fit needs either --paths-by-year or --train and --observe");
        manifest.input(train_path);
        manifest.input(observe_path);
        auto train = load_paths(train_path, catalog, products);
        auto observe = load_paths(observe_path, catalog, products);
        auto bundle = build_tensor_bundle(train);
        auto observed = estimate::observed_shipments(observe);
        auto [supported, unsupported] =
            estimate::LikelihoodModel::split_by_support(observed, bundle.two_step, bundle.one_step);
        double off = 0;
        for (const auto& o : unsupported.entries) off += o.value;
        estimate::LikelihoodModel model(bundle.two_step, bundle.one_step, bundle.volumes,
                                        supported);
        const int year = observe.counts.empty() ? 0 : year_of_day(observe.window_start);
        const auto positions = pathrec::distributor_positions(train);
        if (mode == "homogeneous") {
            auto fit = estimate::fit_phi_homogeneous(
                model, static_cast<int>(config.integer("grid_points", 21)));
            // Single shared value: reported under the reserved source label.
            result.estimates.push_back(
                estimate::YearEstimate{kSourceEntity, year, fit.phi.base, fit.log_likelihood,
                                       fit.flat, std::numeric_limits<double>::quiet_NaN()});
        } else {
            auto fit = estimate::fit_phi_per_distributor(
                model, static_cast<int>(config.integer("max_sweeps", 20)));
            std::set<EntityId> flat(fit.flat_coordinates.begin(), fit.flat_coordinates.end());
            for (EntityId e : model.fit_coordinates()) {
                auto pos = positions.find(e);
                result.estimates.push_back(estimate::YearEstimate{
                    e, year, fit.phi.at(e), fit.log_likelihood, flat.count(e) > 0,
                    pos == positions.end() ? std::numeric_limits<double>::quiet_NaN()
                                           : pos->second});
            }
        }
        if (off > 0) result.unsupported_mass[year] = off;
    }

    {
        auto out = manifest.open("fit.csv");
        estimate::write_year_estimates(out, result, catalog);
    }
    if (!result.skipped.empty()) {
        auto out = manifest.open("skipped.csv");
        out << "entity_id,year\n";
        for (const auto& [e, y] : result.skipped) out << catalog.ids.name(e) << ',' << y << '\n';
    }
    double off_total = 0;
    for (const auto& [y, v] : result.unsupported_mass) off_total += v;
    manifest.stat("estimates", result.estimates.size());
    manifest.stat("skipped", result.skipped.size());
    manifest.stat("unsupported_observation_mass", off_total);
    manifest.write();
    return 0;
}

int cmd_slowdown(const CommonArgs& args, const std::string& paths_path,
                 const std::string& cat_path) {
    const Config config = Config::load(args.config_path);
    Manifest manifest("slowdown", config, args.seed, args.out_dir);
    manifest.input(paths_path);
    manifest.input(cat_path);

    EntityCatalog catalog = load_catalog(cat_path);
    Interner products;
    auto paths = load_paths(paths_path, catalog, products);
    const auto grid = config.num_list("phi_grid", {0.0, 0.25, 0.5, 0.75, 1.0});
    const int samples = static_cast<int>(config.integer("samples", 0));
    auto curve = spectral::bootstrap_slowdown(paths, grid, samples, args.seed,
                                              args.resolved_workers(config));
    {
        auto out = manifest.open("slowdown.csv");
        spectral::write_slowdown_curve(out, curve);
    }
    manifest.stat("phi_points", grid.size());
    manifest.stat("bootstrap_samples", samples);
    manifest.write();
    return 0;
}

int cmd_stress(const CommonArgs& args, const std::string& tx_path, const std::string& cat_path,
               const std::string& paths_path, const std::string& rules_path,
               const std::string& class_id) {
    const Config config = Config::load(args.config_path);
    Manifest manifest("stress", config, args.seed, args.out_dir);
    manifest.input(tx_path);
    manifest.input(cat_path);

    EntityCatalog catalog = load_catalog(cat_path);
    Interner products;
    auto txs = load_transactions(tx_path, catalog, products);
    txs = filter_class(std::move(txs), products, rules_path, class_id);

    pathrec::PathMultiset paths;
    if (!paths_path.empty()) {
        manifest.input(paths_path);
        paths = load_paths(paths_path, catalog, products);
    } else {
        pathrec::ReconstructReport report;
        paths = pathrec::reconstruct_paths(txs, catalog, report, args.resolved_workers(config));
    }
    auto bundle = build_tensor_bundle(paths);
    auto flows = simulate::annual_flows(txs, catalog);

    simulate::SimConfig sim;
    sim.tau = static_cast<int>(config.integer("tau", 5));
    sim.horizon = static_cast<int>(config.integer("horizon", 180));
    sim.warmup = static_cast<int>(config.integer("warmup", 2 * sim.tau));
    sim.seed = args.seed;
    sim.audit = config.integer("audit", 1) != 0;
    const double stock_days = config.num("manufacturer_stock_days", 30.0);

    simulate::ShockSpec shock;
    shock.shock_fraction = config.num("shock_fraction", 0.3);
    shock.t_star = static_cast<int>(config.integer("t_star", 1));
    shock.production_halt = config.integer("production_halt", 1) != 0;

    const std::string mode_name = config.str("target_mode", "buffer");
    simulate::TargetMode target_mode;
    if (mode_name == "annual")
        target_mode = simulate::TargetMode::Annual;
    else if (mode_name == "buffer")
        target_mode = simulate::TargetMode::Buffer;
    else
        throw ValidationError("target_mode must be annual or buffer");
    simulate::SimSystem system(bundle.two_step, bundle.one_step, flows, catalog, stock_days,
                               target_mode);

    auto grid =
        config.num_list("phi_grid", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
    auto times = config.int_list("times", {40, 50, 60});
    for (int& t : times) t = std::min(t, sim.horizon);
    auto sweep = simulate::sweep_phi(system, bundle.two_step, bundle.one_step, sim, shock, grid,
                                     times, args.resolved_workers(config));
    {
        auto out = manifest.open("metrics.csv");
        simulate::write_sweep(out, sweep);
    }

    // Frontier rows (deficit reduction vs alternative-path usage) at the
    // report times, plus resupply windows per acceptable supply deficit.
    std::map<std::pair<double, int>, const simulate::SweepRow*> by_key;
    for (const auto& row : sweep.rows) by_key[{row.phi, row.t}] = &row;
    std::map<int, double> phi_star(sweep.phi_star.begin(), sweep.phi_star.end());
    {
        auto out = manifest.open("frontier.csv");
        out << "t,phi,delta_reduction,gamma,efficient,phi_star\n";
        for (int t : times)
            for (double phi : sweep.grid) {
                const auto* row = by_key.at({phi, t});
                out << t << ',' << csv::format_double(phi) << ','
                    << csv::format_double(row->delta_reduction) << ','
                    << csv::format_double(row->gamma) << ',' << (row->efficient ? 1 : 0) << ','
                    << csv::format_double(phi_star.at(t)) << '\n';
            }
    }
    {
        const auto asds = config.num_list("asd", {0.02, 0.05, 0.10});
        std::map<double, std::vector<double>> deficits;  // phi -> curve over t
        for (const auto& row : sweep.rows) deficits[row.phi].push_back(row.deficit);
        auto out = manifest.open("resupply.csv");
        out << "asd,window_phi0,window_best,best_phi,window_phi1,gain_days,gain_pct\n";
        for (double asd : asds) {
            const int w0 = simulate::resupply_window(deficits.at(0.0), asd);
            const int w1 = simulate::resupply_window(deficits.at(1.0), asd);
            int best = w0;
            double best_phi = 0.0;
            for (const auto& [phi, curve] : deficits) {
                const int w = simulate::resupply_window(curve, asd);
                if (w > best) {
                    best = w;
                    best_phi = phi;
                }
            }
            const double gain_pct = w0 > 0 ? 100.0 * (best - w0) / w0 : 0.0;
            out << csv::format_double(asd) << ',' << w0 << ',' << best << ','
                << csv::format_double(best_phi) << ',' << w1 << ',' << (best - w0) << ','
                << csv::format_double(gain_pct) << '\n';
        }
    }
    manifest.stat("phi_grid", sweep.grid.size());
    manifest.stat("gamma_degenerate", sweep.gamma_degenerate);
    manifest.stat("total_final_demand", system.total_final_demand());
    manifest.write();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distribution-path reconstruction, flexibility estimation and stress testing"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string tx_path, cat_path, paths_path, rules_path, class_id;
    std::string train_path, observe_path, fit_mode = "per-distributor";
    std::vector<std::string> year_specs;
    double phi = -1.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "key = value config file");
        cmd->add_option("--out", args.out_dir, "output directory")->required();
        cmd->add_option("--seed", args.seed, "random seed recorded in the manifest");
        cmd->add_option("--workers", args.workers, "worker threads (default: cores)");
    };

    auto* synth = app.add_subcommand("synth", "generate a synthetic distribution system");
    add_common(synth);

    auto* ing = app.add_subcommand("ingest", "validate and normalize a transaction log");
    add_common(ing);
    ing->add_option("--transactions", tx_path)->required();
    ing->add_option("--catalog", cat_path)->required();

    auto* rec = app.add_subcommand("reconstruct", "FIFO path reconstruction");
    add_common(rec);
    rec->add_option("--transactions", tx_path)->required();
    rec->add_option("--catalog", cat_path)->required();
    rec->add_option("--rules", rules_path);
    rec->add_option("--class", class_id, "restrict to one substitutability class");

    auto* ten = app.add_subcommand("tensors", "build order transition tensors");
    add_common(ten);
    ten->add_option("--paths", paths_path)->required();
    ten->add_option("--catalog", cat_path)->required();
    ten->add_option("--phi", phi, "also export the mixed tensor at this flexibility");

    auto* fit = app.add_subcommand("fit", "maximum-likelihood flexibility estimation");
    add_common(fit);
    fit->add_option("--catalog", cat_path)->required();
    fit->add_option("--train", train_path, "training-window paths");
    fit->add_option("--observe", observe_path, "prediction-window paths");
    fit->add_option("--paths-by-year", year_specs, "YEAR=FILE, repeatable");
    fit->add_option("--mode", fit_mode)->check(CLI::IsMember({"homogeneous", "per-distributor"}));

    auto* slow = app.add_subcommand("slowdown", "spectral slow-down curve");
    add_common(slow);
    slow->add_option("--paths", paths_path)->required();
    slow->add_option("--catalog", cat_path)->required();

    auto* stress = app.add_subcommand("stress", "shock simulation and phi sweep");
    add_common(stress);
    stress->add_option("--transactions", tx_path)->required();
    stress->add_option("--catalog", cat_path)->required();
    stress->add_option("--paths", paths_path, "reuse a reconstruction");
    stress->add_option("--rules", rules_path);
    stress->add_option("--class", class_id);

    auto* graph = app.add_subcommand("export-graph", "second-order edge list with route classes");
    add_common(graph);
    graph->add_option("--paths", paths_path)->required();
    graph->add_option("--catalog", cat_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(args);
        if (ing->parsed()) return cmd_ingest(args, tx_path, cat_path);
        if (rec->parsed()) return cmd_reconstruct(args, tx_path, cat_path, rules_path, class_id);
        if (ten->parsed()) return cmd_tensors(args, paths_path, cat_path, phi);
        if (fit->parsed())
            return cmd_fit(args, cat_path, train_path, observe_path, year_specs, fit_mode);
        if (slow->parsed()) return cmd_slowdown(args, paths_path, cat_path);
        if (stress->parsed())
            return cmd_stress(args, tx_path, cat_path, paths_path, rules_path, class_id);
        if (graph->parsed()) return cmd_export_graph(args, paths_path, cat_path);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
