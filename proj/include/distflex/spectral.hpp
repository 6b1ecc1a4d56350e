#pragma once

#include <cstdint>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "distflex/tensors.hpp"

namespace distflex::spectral {

/// Row-major CSR matrix; rows are expected to be stochastic.
struct SparseMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::uint32_t> col;
    std::vector<double> val;

    static SparseMatrix from_chain(const tensors::SecondOrderChain& chain);
    static SparseMatrix from_dense(const std::vector<std::vector<double>>& rows);

    void multiply(const double* x, double* y) const;  // y = M x
    double max_row_sum_error() const;                 // max |row sum - 1|
};

struct EigOptions {
    double tol = 1e-12;
    int max_iters = 200000;
    int block = 4;
    std::size_t dense_limit = 500;
    enum class Method { Auto, Dense, Iterative } method = Method::Auto;
    std::uint64_t seed = 0x5eed5eedULL;
};

struct EigResult {
    double modulus = 0;     // |lambda_2|
    bool degenerate = false;  // |lambda_2| within 1e-9 of |lambda_1| = 1
    int iterations = 0;
};

/// Modulus of the second-largest-magnitude eigenvalue of a row-stochastic
/// matrix. Dense full-spectrum solve up to dense_limit states; above that a
/// Wielandt-deflated subspace iteration (the leading pair lambda_1 = 1 with
/// right eigenvector 1 is deflated exactly).
EigResult second_eigenvalue(const SparseMatrix& m, double tol, const EigOptions& opts = {});

struct SlowdownResult {
    double lambda2_base = 0;
    double lambda2_flex = 0;
    double sigma = 1;
    bool degenerate = false;
};

/// sigma(phi) = log|lambda2[B~(b,0)]| / log|lambda2[B~(b,phi)]| with the
/// second-order chain built at unit volumes. sigma(0) == 1 exactly.
SlowdownResult slowdown_factor(const tensors::OrderTransitionTensor& two_step,
                               const tensors::OrderTransitionTensor& one_step,
                               const std::unordered_map<EntityId, double>& omega_fractions,
                               const tensors::Flexibility& phi, int window_days,
                               const EigOptions& opts = {});

struct SlowdownCurvePoint {
    double phi;
    double lambda2_base, lambda2_flex, sigma;
    double ci_low50, ci_high50, ci_low95, ci_high95;  // bootstrap bands over sigma
};

/// Path-resampling bootstrap of the slow-down curve: resample the multiset,
/// rebuild tensors and chain, recompute sigma. samples == 0 skips the bands
/// (they repeat the point estimate).
std::vector<SlowdownCurvePoint> bootstrap_slowdown(const pathrec::PathMultiset& paths,
                                                   const std::vector<double>& phis, int samples,
                                                   std::uint64_t seed, unsigned workers,
                                                   const EigOptions& opts = {});

void write_slowdown_curve(std::ostream& out, const std::vector<SlowdownCurvePoint>& curve);

}  // namespace distflex::spectral
