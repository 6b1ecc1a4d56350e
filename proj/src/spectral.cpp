#include "distflex/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "distflex/csv.hpp"
#include "distflex/parallel.hpp"
#include "distflex/pathrec.hpp"
#include "distflex/rng.hpp"

namespace distflex::spectral {

SparseMatrix SparseMatrix::from_chain(const tensors::SecondOrderChain& chain) {
    SparseMatrix m;
    m.n = chain.n_states();
    m.row_ptr = chain.row_ptr;
    m.col = chain.col;
    m.val = chain.val;
    return m;
}

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<double>>& rows) {
    SparseMatrix m;
    m.n = rows.size();
    m.row_ptr.assign(m.n + 1, 0);
    for (std::size_t r = 0; r < m.n; ++r) {
        if (rows[r].size() != m.n) throw ValidationError("from_dense: ragged matrix");
        m.row_ptr[r] = m.col.size();
        for (std::size_t c = 0; c < m.n; ++c) {
            if (rows[r][c] != 0.0) {
                m.col.push_back(static_cast<std::uint32_t>(c));
                m.val.push_back(rows[r][c]);
            }
        }
    }
    m.row_ptr[m.n] = m.col.size();
    return m;
}

void SparseMatrix::multiply(const double* x, double* y) const {
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0;
        for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) acc += val[e] * x[col[e]];
        y[r] = acc;
    }
}

double SparseMatrix::max_row_sum_error() const {
    double worst = 0;
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0;
        for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) sum += val[e];
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

namespace {

EigResult dense_second_eigenvalue(const SparseMatrix& m) {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.n),
                                                  static_cast<Eigen::Index>(m.n));
    for (std::size_t r = 0; r < m.n; ++r)
        for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e)
            dense(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m.col[e])) += m.val[e];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(dense, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw NumericalError("second_eigenvalue: dense eigensolver failed");
    std::vector<double> moduli(m.n);
    for (std::size_t k = 0; k < m.n; ++k) moduli[k] = std::abs(solver.eigenvalues()[static_cast<Eigen::Index>(k)]);
    std::sort(moduli.begin(), moduli.end(), std::greater<>());
    EigResult result;
    result.modulus = m.n >= 2 ? moduli[1] : 0.0;
    result.degenerate = m.n >= 2 && moduli[0] - moduli[1] < 1e-9;
    return result;
}

/// Subspace iteration on the Wielandt-deflated operator B = M - 1 e_0^T,
/// whose spectrum is {0, lambda_2, ..., lambda_n}. Handles complex pairs via
/// Rayleigh-Ritz on the projected block.
EigResult iterative_second_eigenvalue(const SparseMatrix& m, double tol, const EigOptions& opts) {
    const std::size_t n = m.n;
    EigResult result;
    if (n < 2) return result;
    const int p = std::min<int>(opts.block, static_cast<int>(n));

    std::vector<std::vector<double>> basis(p, std::vector<double>(n));
    Rng rng(opts.seed);
    for (auto& v : basis)
        for (auto& x : v) x = rng.uniform() - 0.5;

    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        m.multiply(x.data(), y.data());
        const double x0 = x[0];
        for (std::size_t r = 0; r < n; ++r) y[r] -= x0;
    };
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0;
        for (std::size_t r = 0; r < n; ++r) acc += a[r] * b[r];
        return acc;
    };

    auto orthonormalize = [&](std::vector<std::vector<double>>& q) {
        for (int c = 0; c < p; ++c) {
            // A residual tiny relative to the incoming column is rounding
            // noise, not a direction: normalizing it would wreck
            // orthogonality. Replace collapsed columns with fresh noise.
            const double before = std::sqrt(dot(q[c], q[c]));
            for (int attempt = 0; attempt < 4; ++attempt) {
                for (int pass = 0; pass < 2; ++pass)
                    for (int prev = 0; prev < c; ++prev) {
                        const double proj = dot(q[c], q[prev]);
                        for (std::size_t r = 0; r < n; ++r) q[c][r] -= proj * q[prev][r];
                    }
                const double norm = std::sqrt(dot(q[c], q[c]));
                if (norm > 1e-8 * std::max(before, 1e-300) && norm > 1e-300) {
                    for (std::size_t r = 0; r < n; ++r) q[c][r] /= norm;
                    break;
                }
                for (auto& x : q[c]) x = rng.uniform() - 0.5;
            }
        }
    };

    orthonormalize(basis);
    std::vector<std::vector<double>> image(p, std::vector<double>(n));
    double prev_estimate = -1;
    int stable = 0;
    for (int it = 1; it <= opts.max_iters; ++it) {
        for (int c = 0; c < p; ++c) apply(basis[c], image[c]);

        // Rayleigh-Ritz every few sweeps: H = Q^T B Q.
        if (it % 4 == 0 || it == opts.max_iters) {
            Eigen::MatrixXd h(p, p);
            for (int rr = 0; rr < p; ++rr)
                for (int cc = 0; cc < p; ++cc) h(rr, cc) = dot(basis[rr], image[cc]);
            Eigen::EigenSolver<Eigen::MatrixXd> ritz(h, false);
            double best = 0;
            for (int k = 0; k < p; ++k) best = std::max(best, std::abs(ritz.eigenvalues()[k]));
            result.iterations = it;
            if (std::abs(best - prev_estimate) <= tol * std::max(1.0, std::abs(best))) {
                if (++stable >= 2) {
                    result.modulus = best;
                    result.degenerate = best >= 1.0 - 1e-9;
                    return result;
                }
            } else {
                stable = 0;
            }
            prev_estimate = best;
            // Fully decayed subspace: spectrum below floating noise.
            double total = 0;
            for (int c = 0; c < p; ++c) total += dot(image[c], image[c]);
            if (total < 1e-280) {
                result.modulus = 0.0;
                return result;
            }
        }
        basis.swap(image);
        orthonormalize(basis);
    }
    throw NumericalError("second_eigenvalue: subspace iteration did not converge in " +
                         std::to_string(opts.max_iters) + " iterations");
}

}  // namespace

EigResult second_eigenvalue(const SparseMatrix& m, double tol, const EigOptions& opts) {
    if (m.n == 0) throw ValidationError("second_eigenvalue: empty matrix");
    const double err = m.max_row_sum_error();
    if (err > 1e-10)
        throw ValidationError("second_eigenvalue: matrix is not row-stochastic (error " +
                              csv::format_double(err) + ")");
    const bool dense = opts.method == EigOptions::Method::Dense ||
                       (opts.method == EigOptions::Method::Auto && m.n <= opts.dense_limit);
    return dense ? dense_second_eigenvalue(m) : iterative_second_eigenvalue(m, tol, opts);
}

namespace {

bool same_chain(const tensors::SecondOrderChain& a, const tensors::SecondOrderChain& b) {
    return a.meta == b.meta && a.row_ptr == b.row_ptr && a.col == b.col && a.val == b.val;
}

}  // namespace

SlowdownResult slowdown_factor(const tensors::OrderTransitionTensor& two_step,
                               const tensors::OrderTransitionTensor& one_step,
                               const std::unordered_map<EntityId, double>& omega_fractions,
                               const tensors::Flexibility& phi, int window_days,
                               const EigOptions& opts) {
    const auto base_chain = tensors::to_second_order(
        tensors::build_shipment_tensor_unit(two_step, window_days), omega_fractions);
    const auto flex_chain = tensors::to_second_order(
        tensors::build_shipment_tensor_unit(tensors::mix(two_step, one_step, phi), window_days),
        omega_fractions);

    SlowdownResult result;
    const EigResult base = second_eigenvalue(SparseMatrix::from_chain(base_chain), opts.tol, opts);
    result.lambda2_base = base.modulus;
    if (same_chain(base_chain, flex_chain)) {
        result.lambda2_flex = base.modulus;
        result.sigma = 1.0;
        result.degenerate = base.degenerate;
        return result;
    }
    const EigResult flex = second_eigenvalue(SparseMatrix::from_chain(flex_chain), opts.tol, opts);
    result.lambda2_flex = flex.modulus;
    result.degenerate = base.degenerate || flex.degenerate;
    if (result.lambda2_base <= 0.0 && result.lambda2_flex <= 0.0) {
        result.sigma = 1.0;  // both chains mix instantly
        result.degenerate = true;
    } else if (result.lambda2_base <= 0.0 || result.lambda2_flex <= 0.0 ||
               result.lambda2_base >= 1.0 || result.lambda2_flex >= 1.0) {
        throw NumericalError("slowdown_factor: eigenvalue modulus outside (0,1); chain is not a "
                             "connected absorbing walk");
    } else {
        result.sigma = std::log(result.lambda2_base) / std::log(result.lambda2_flex);
    }
    return result;
}

namespace {

pathrec::PathMultiset resample_paths(const pathrec::PathMultiset& paths, Rng& rng) {
    // Multinomial resample of the package-level multiset.
    std::vector<std::pair<std::uint64_t, std::int64_t>> items(paths.counts.begin(),
                                                              paths.counts.end());
    std::sort(items.begin(), items.end());
    std::vector<double> cumulative(items.size());
    double total = 0;
    for (std::size_t k = 0; k < items.size(); ++k) {
        total += static_cast<double>(items[k].second);
        cumulative[k] = total;
    }
    std::int64_t draws = 0;
    for (const auto& [key, c] : items) draws += c;

    pathrec::PathMultiset out;
    out.window_start = paths.window_start;
    out.window_end = paths.window_end;
    std::unordered_map<std::uint64_t, std::int64_t> picked;
    for (std::int64_t d = 0; d < draws; ++d) {
        const double u = rng.uniform() * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        const std::size_t idx = std::min<std::size_t>(
            static_cast<std::size_t>(it - cumulative.begin()), items.size() - 1);
        picked[items[idx].first] += 1;
    }
    for (const auto& [key, c] : picked) {
        const auto prefix = static_cast<std::uint32_t>(key >> 32);
        const auto product = static_cast<ProductId>(key & 0xffffffffu);
        std::uint32_t re = pathrec::PathTable::kRoot;
        for (EntityId node : paths.table.materialize(prefix)) re = out.table.extend(re, node);
        out.add(re, product, c);
    }
    return out;
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) return 0;
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] * (1 - frac) + xs[hi] * frac;
}

}  // namespace

std::vector<SlowdownCurvePoint> bootstrap_slowdown(const pathrec::PathMultiset& paths,
                                                   const std::vector<double>& phis, int samples,
                                                   std::uint64_t seed, unsigned workers,
                                                   const EigOptions& opts) {
    const auto counts = tensors::path_counts(paths);
    const auto two_step = tensors::build_two_step(counts);
    const auto one_step = tensors::build_one_step(counts);
    const auto omega = pathrec::final_shipment_fractions(paths);

    std::vector<SlowdownCurvePoint> curve(phis.size());
    for (std::size_t k = 0; k < phis.size(); ++k) {
        const auto point = slowdown_factor(two_step, one_step, omega,
                                           tensors::Flexibility::homogeneous(phis[k]), 0, opts);
        curve[k] = SlowdownCurvePoint{phis[k],          point.lambda2_base, point.lambda2_flex,
                                      point.sigma,      point.sigma,        point.sigma,
                                      point.sigma,      point.sigma};
    }
    if (samples <= 0) return curve;

    // One resampled system per bootstrap draw, all phis evaluated on it.
    std::vector<std::vector<double>> sigma_samples(phis.size(), std::vector<double>(samples));
    Rng root(seed);
    std::vector<Rng> streams;
    for (int s = 0; s < samples; ++s) streams.push_back(root.fork(static_cast<std::uint64_t>(s)));
    parallel_for(static_cast<std::size_t>(samples), workers, [&](std::size_t s) {
        Rng rng = streams[s];
        const auto resampled = resample_paths(paths, rng);
        const auto c = tensors::path_counts(resampled);
        const auto t2 = tensors::build_two_step(c);
        const auto t1 = tensors::build_one_step(c);
        const auto om = pathrec::final_shipment_fractions(resampled);
        for (std::size_t k = 0; k < phis.size(); ++k) {
            const auto r =
                slowdown_factor(t2, t1, om, tensors::Flexibility::homogeneous(phis[k]), 0, opts);
            sigma_samples[k][s] = r.sigma;
        }
    });
    for (std::size_t k = 0; k < phis.size(); ++k) {
        curve[k].ci_low50 = quantile(sigma_samples[k], 0.25);
        curve[k].ci_high50 = quantile(sigma_samples[k], 0.75);
        curve[k].ci_low95 = quantile(sigma_samples[k], 0.025);
        curve[k].ci_high95 = quantile(sigma_samples[k], 0.975);
    }
    return curve;
}

void write_slowdown_curve(std::ostream& out, const std::vector<SlowdownCurvePoint>& curve) {
    out << "phi,lambda2_base,lambda2_flex,sigma,ci_low50,ci_high50,ci_low95,ci_high95\n";
    for (const auto& p : curve)
        out << csv::format_double(p.phi) << ',' << csv::format_double(p.lambda2_base) << ','
            << csv::format_double(p.lambda2_flex) << ',' << csv::format_double(p.sigma) << ','
            << csv::format_double(p.ci_low50) << ',' << csv::format_double(p.ci_high50) << ','
            << csv::format_double(p.ci_low95) << ',' << csv::format_double(p.ci_high95) << '\n';
}

}  // namespace distflex::spectral
