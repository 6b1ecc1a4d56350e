#include "distflex/estimate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

#include "distflex/csv.hpp"

namespace distflex::estimate {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool triple_less(const tensors::Triple& a, const tensors::Triple& b) {
    if (a.i != b.i) return a.i < b.i;
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
}

/// Golden-section maximization of f over [lo, hi]; returns the best point
/// seen. f may return -inf.
std::pair<double, double> golden_max(double lo, double hi,
                                     const std::function<double(double)>& f, double xtol,
                                     int& evals) {
    constexpr double inv_phi = 0.6180339887498948482;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    evals += 2;
    std::pair<double, double> best = f1 >= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
    while (b - a > xtol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2, f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
            if (f2 > best.second) best = {x2, f2};
        } else {
            b = x2;
            x2 = x1, f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
            if (f1 > best.second) best = {x1, f1};
        }
        ++evals;
    }
    return best;
}

struct GridScan {
    double best_x = 0, best_f = kNegInf;
    double finite_min = std::numeric_limits<double>::infinity();
    double smallest_max_x = 0;  // smallest x attaining ~best (flat tie-break)
    bool any_finite = false;
};

GridScan scan_grid(const std::function<double(double)>& f, int points, int& evals) {
    GridScan scan;
    std::vector<std::pair<double, double>> vals;
    for (int g = 0; g < points; ++g) {
        const double x = static_cast<double>(g) / (points - 1);
        const double v = f(x);
        ++evals;
        vals.emplace_back(x, v);
        if (std::isfinite(v)) {
            scan.any_finite = true;
            scan.finite_min = std::min(scan.finite_min, v);
            if (v > scan.best_f) {
                scan.best_f = v;
                scan.best_x = x;
            }
        }
    }
    if (scan.any_finite) {
        const double tol = 1e-9 * (1.0 + std::abs(scan.best_f));
        for (const auto& [x, v] : vals) {
            if (std::isfinite(v) && v >= scan.best_f - tol) {
                scan.smallest_max_x = x;
                break;
            }
        }
    }
    return scan;
}

}  // namespace

ObservedShipmentCounts observed_shipments(const pathrec::PathMultiset& paths) {
    ObservedShipmentCounts out;
    for (const auto& [key, count] : paths.counts) {
        const auto prefix = static_cast<std::uint32_t>(key >> 32);
        const std::vector<EntityId> nodes = paths.table.materialize(prefix);
        for (std::size_t t = 2; t < nodes.size(); ++t)
            out.entries.push_back(tensors::Triple{nodes[t - 2], nodes[t - 1], nodes[t],
                                                  static_cast<double>(count)});
    }
    std::sort(out.entries.begin(), out.entries.end(), triple_less);
    std::size_t w = 0;
    for (std::size_t r = 0; r < out.entries.size(); ++r) {
        if (w > 0 && out.entries[w - 1].i == out.entries[r].i &&
            out.entries[w - 1].j == out.entries[r].j && out.entries[w - 1].k == out.entries[r].k)
            out.entries[w - 1].value += out.entries[r].value;
        else
            out.entries[w++] = out.entries[r];
    }
    out.entries.resize(w);
    return out;
}

LikelihoodModel::LikelihoodModel(const tensors::OrderTransitionTensor& two_step,
                                 const tensors::OrderTransitionTensor& one_step,
                                 const std::unordered_map<EntityId, double>& volumes,
                                 const ObservedShipmentCounts& observed) {
    // Union of the order-triple supports; each entry carries both mixture
    // endpoints so one B(phi) evaluation is a single pass over the support.
    struct Acc {
        double t2 = 0, t1 = 0;
    };
    std::map<std::array<EntityId, 3>, Acc> merged;  // (orderer, intermediary, source)
    for (const auto& e : two_step.entries) merged[{e.i, e.j, e.k}].t2 = e.value;
    for (const auto& e : one_step.entries) merged[{e.i, e.j, e.k}].t1 = e.value;

    // Observed shipment (i, j, k) corresponds to the order triple (k, j, i).
    std::map<std::array<EntityId, 3>, double> obs;
    for (const auto& o : observed.entries)
        if (o.value > 0) obs[{o.k, o.j, o.i}] += o.value;

    std::unordered_map<EntityId, std::uint32_t> origin_index;
    for (const auto& [key, acc] : merged) {
        SupportEntry e;
        e.orderer = key[0];
        e.via = key[1];
        e.origin = key[2];
        e.t2 = acc.t2;
        e.t1 = acc.t1;
        auto vit = volumes.find(e.orderer);
        e.volume = vit == volumes.end() ? 0.0 : vit->second;
        auto oit = obs.find(key);
        e.observed_count = oit == obs.end() ? 0.0 : oit->second;
        if (oit != obs.end()) obs.erase(oit);
        auto [slot, fresh] =
            origin_index.emplace(e.origin, static_cast<std::uint32_t>(origins_.size()));
        if (fresh) origins_.push_back(e.origin);
        origin_slot_.push_back(slot->second);
        support_.push_back(e);
    }
    for (const auto& [key, count] : obs) {  // observations with no support at any phi
        unsupported_observed_ += count;
        unsupported_triples_.push_back(tensors::Triple{key[2], key[1], key[0], count});
    }
    slice_mass_.assign(origins_.size(), 0.0);
    for (std::size_t n = 0; n < support_.size(); ++n)
        slice_mass_[origin_slot_[n]] += support_[n].observed_count;

    // A coordinate matters when the orderer's mixture actually moves the
    // likelihood: some entry of its row has t1 != t2 and sits in a
    // normalization slice carrying observed mass.
    std::set<EntityId> coord_set;
    for (std::size_t n = 0; n < support_.size(); ++n)
        if (slice_mass_[origin_slot_[n]] > 0 && support_[n].t1 != support_[n].t2)
            coord_set.insert(support_[n].orderer);
    coordinates_.assign(coord_set.begin(), coord_set.end());
}

double LikelihoodModel::log_likelihood(const tensors::Flexibility& phi,
                                       std::vector<tensors::Triple>* mismatches) const {
    phi.validate();
    if (unsupported_observed_ > 0) {
        if (mismatches)
            mismatches->insert(mismatches->end(), unsupported_triples_.begin(),
                               unsupported_triples_.end());
        return kNegInf;
    }
    std::vector<double> denom(origins_.size(), 0.0);
    double ll = 0;
    bool infinite = false;
    for (std::size_t n = 0; n < support_.size(); ++n) {
        const SupportEntry& e = support_[n];
        const double p = phi.at(e.orderer);
        const double t = p == 0.0 ? e.t2 : p == 1.0 ? e.t1 : (1.0 - p) * e.t2 + p * e.t1;
        const double w = t * e.volume;
        denom[origin_slot_[n]] += w;
        if (e.observed_count > 0) {
            if (w <= 0.0) {
                infinite = true;
                if (mismatches)
                    mismatches->push_back(
                        tensors::Triple{e.origin, e.via, e.orderer, e.observed_count});
                continue;
            }
            ll += e.observed_count * std::log(w);
        }
    }
    if (infinite) return kNegInf;
    for (std::size_t s = 0; s < origins_.size(); ++s) {
        if (slice_mass_[s] <= 0) continue;
        if (denom[s] <= 0) return kNegInf;
        ll -= slice_mass_[s] * std::log(denom[s]);
    }
    return ll;
}

std::pair<ObservedShipmentCounts, ObservedShipmentCounts> LikelihoodModel::split_by_support(
    const ObservedShipmentCounts& observed, const tensors::OrderTransitionTensor& two_step,
    const tensors::OrderTransitionTensor& one_step) {
    std::set<std::array<EntityId, 3>> support;
    for (const auto& e : two_step.entries) support.insert({e.i, e.j, e.k});
    for (const auto& e : one_step.entries) support.insert({e.i, e.j, e.k});
    ObservedShipmentCounts in, out;
    for (const auto& o : observed.entries) {
        if (support.count({o.k, o.j, o.i}))
            in.entries.push_back(o);
        else
            out.entries.push_back(o);
    }
    return {in, out};
}

FlexibilityEstimate fit_phi_homogeneous(const LikelihoodModel& model, int grid_points) {
    if (grid_points < 11) throw ValidationError("fit_phi_homogeneous: grid must have >= 11 points");
    FlexibilityEstimate result;
    int evals = 0;
    auto f = [&](double x) { return model.log_likelihood(tensors::Flexibility::homogeneous(x)); };
    GridScan scan = scan_grid(f, grid_points, evals);
    if (!scan.any_finite)
        throw NumericalError("fit_phi_homogeneous: likelihood is -inf everywhere");
    if (scan.best_f - scan.finite_min < 1e-9 * (1.0 + std::abs(scan.best_f))) {
        result.phi = tensors::Flexibility::homogeneous(scan.smallest_max_x);
        result.log_likelihood = scan.best_f;
        result.flat = true;
        result.converged = true;
        result.iterations = evals;
        return result;
    }
    const double step = 1.0 / (grid_points - 1);
    auto wrapped = [&](double x) {
        ++evals;
        return f(x);
    };
    auto [x, fx] = golden_max(std::max(0.0, scan.best_x - step), std::min(1.0, scan.best_x + step),
                              wrapped, 1e-4, evals);
    if (fx < scan.best_f) {
        x = scan.best_x;
        fx = scan.best_f;
    }
    result.phi = tensors::Flexibility::homogeneous(x);
    result.log_likelihood = fx;
    result.iterations = evals;
    result.converged = true;
    return result;
}

FlexibilityEstimate fit_phi_per_distributor(const LikelihoodModel& model, int max_sweeps) {
    if (max_sweeps < 1) throw ValidationError("fit_phi_per_distributor: max_sweeps must be >= 1");
    const std::vector<EntityId>& coords = model.fit_coordinates();
    FlexibilityEstimate result;
    int evals = 0;

    tensors::Flexibility phi;
    for (EntityId c : coords) phi.overrides[c] = 0.0;
    double current = model.log_likelihood(phi);
    ++evals;
    if (!std::isfinite(current)) {
        // Interior start: the mixed support covers both endpoints.
        for (EntityId c : coords) phi.overrides[c] = 0.5;
        current = model.log_likelihood(phi);
        ++evals;
        if (!std::isfinite(current))
            throw NumericalError("fit_phi_per_distributor: likelihood is -inf everywhere");
    }

    std::set<EntityId> flat;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const double before = current;
        for (EntityId c : coords) {
            auto f = [&](double x) {
                tensors::Flexibility trial = phi;
                trial.overrides[c] = x;
                return model.log_likelihood(trial);
            };
            GridScan scan = scan_grid(f, 5, evals);
            if (!scan.any_finite) continue;
            if (scan.best_f - scan.finite_min < 1e-9 * (1.0 + std::abs(scan.best_f))) {
                flat.insert(c);
                phi.overrides[c] = scan.smallest_max_x;
                current = scan.best_f;
                continue;
            }
            flat.erase(c);
            auto wrapped = [&](double x) {
                ++evals;
                return f(x);
            };
            auto [x, fx] = golden_max(std::max(0.0, scan.best_x - 0.25),
                                      std::min(1.0, scan.best_x + 0.25), wrapped, 1e-4, evals);
            if (fx >= scan.best_f) {
                phi.overrides[c] = x;
                current = fx;
            } else {
                phi.overrides[c] = scan.best_x;
                current = scan.best_f;
            }
        }
        if (current < before - 1e-9 * (1.0 + std::abs(before)))
            throw NumericalError("fit_phi_per_distributor: coordinate ascent decreased likelihood");
        if (current - before < 1e-6) {
            result.converged = true;
            break;
        }
    }
    result.phi = phi;
    result.log_likelihood = current;
    result.iterations = evals;
    result.flat_coordinates.assign(flat.begin(), flat.end());
    result.flat = !coords.empty() && flat.size() == coords.size();
    return result;
}

YearToYearResult year_to_year_flexibility(const std::map<int, pathrec::PathMultiset>& paths_by_year,
                                          const EntityCatalog& catalog, int max_sweeps) {
    if (paths_by_year.size() < 2)
        throw ValidationError("year_to_year_flexibility: need at least two consecutive years");
    YearToYearResult result;
    for (auto it = std::next(paths_by_year.begin()); it != paths_by_year.end(); ++it) {
        auto prev = std::prev(it);
        if (prev->first + 1 != it->first) continue;  // gap between observation years
        result.windows.push_back(EstimationWindow{365, 365, day_from_ymd(it->first, 1, 1),
                                                  it->first});
        const tensors::CountTensor counts = tensors::path_counts(prev->second);
        const auto two_step = tensors::build_two_step(counts);
        const auto one_step = tensors::build_one_step(counts);
        const auto volumes = tensors::order_volumes(counts);
        const ObservedShipmentCounts observed = observed_shipments(it->second);
        auto [supported, unsupported] =
            LikelihoodModel::split_by_support(observed, two_step, one_step);
        double off = 0;
        for (const auto& o : unsupported.entries) off += o.value;
        if (off > 0) result.unsupported_mass[it->first] = off;

        LikelihoodModel model(two_step, one_step, volumes, supported);
        FlexibilityEstimate fit = fit_phi_per_distributor(model, max_sweeps);
        const auto positions = pathrec::distributor_positions(prev->second);

        // Every training-year orderer gets a row; non-coordinates carry no
        // evidence either way and resolve flat to 0.
        std::set<EntityId> training;
        for (const auto& e : two_step.entries) training.insert(e.i);
        const std::set<EntityId> coords(model.fit_coordinates().begin(),
                                        model.fit_coordinates().end());
        const std::set<EntityId> flat(fit.flat_coordinates.begin(), fit.flat_coordinates.end());
        for (EntityId e : training) {
            const bool fitted = coords.count(e) > 0;
            auto pos = positions.find(e);
            result.estimates.push_back(YearEstimate{
                e, it->first, fitted ? fit.phi.at(e) : 0.0, fit.log_likelihood,
                !fitted || flat.count(e) > 0,
                pos == positions.end() ? std::numeric_limits<double>::quiet_NaN() : pos->second});
        }
        // Orderers observed this year but absent from the training year.
        std::set<EntityId> seen;
        for (const auto& o : observed.entries)
            if (!catalog.is_final_buyer(o.k) && !catalog.is_manufacturer(o.k)) seen.insert(o.k);
        for (EntityId e : seen)
            if (!training.count(e)) result.skipped.emplace_back(e, it->first);
    }
    return result;
}

void write_year_estimates(std::ostream& out, const YearToYearResult& result,
                          const EntityCatalog& catalog) {
    out << "entity_id,year,phi_hat,loglik,flat_flag,mean_position\n";
    for (const auto& e : result.estimates)
        out << catalog.ids.name(e.entity) << ',' << e.year << ',' << csv::format_double(e.phi_hat)
            << ',' << csv::format_double(e.log_likelihood) << ',' << (e.flat ? 1 : 0) << ','
            << csv::format_double(e.mean_position) << '\n';
}

}  // namespace distflex::estimate
