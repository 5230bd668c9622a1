// spectral_loss.hpp — the data-dependent Hermitian matrix C(alpha, beta), its
// smallest eigenpair (the loss), and the analytic loss gradient
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "koopman/dictionary.hpp"
#include "koopman/simulation.hpp"

namespace koopman {

// Dictionary evaluations at every transition pair, kept as columns so the
// gradient inner products are single mat-vecs.
struct EvalCache {
    Eigen::MatrixXcd g_before;  // M x N, column n = G(x_n)
    Eigen::MatrixXcd g_after;   // M x N, column n = G(x_{n+1})
    Eigen::VectorXd dts;        // N per-pair intervals, all > 0

    int dict_size() const { return static_cast<int>(g_before.rows()); }
    int pair_count() const { return static_cast<int>(g_before.cols()); }
};

// Gram blocks grouped by unique interval value, enabling O(|U| M^2) assembly
// of C(alpha, beta):
//   A     = (1/N) sum_n G(x_{n+1}) G(x_{n+1})^H
//   B_u   = (1/N) sum_{n : dt_n = u} G(x_n) G(x_n)^H
//   D_u   = (1/N) sum_{n : dt_n = u} G(x_n) G(x_{n+1})^H
// Intervals are grouped by exact floating-point equality, so regular schedules
// collapse to a single group and fully irregular ones degrade to per-pair terms.
struct GramBlocks {
    int dict_size = 0;
    int pair_count = 0;
    Eigen::MatrixXcd A;
    std::vector<double> unique_intervals;  // ascending
    std::vector<int> multiplicities;       // sums to pair_count
    std::vector<Eigen::MatrixXcd> B;
    std::vector<Eigen::MatrixXcd> D;

    double max_interval() const { return unique_intervals.empty() ? 0.0 : unique_intervals.back(); }
};

EvalCache build_eval_cache(const TransitionDataset& dataset, const Dictionary& dict);

// OpenMP kernel: deterministic chunked reduction (result does not depend on
// the number of threads).
GramBlocks precompute_gram(const EvalCache& cache);
// Serial reference implementation, kept for testing and benchmarking.
GramBlocks precompute_gram_serial(const EvalCache& cache);
// Convenience: evaluate the dictionary and reduce in one call.
GramBlocks precompute_gram(const TransitionDataset& dataset, const Dictionary& dict);

// C(alpha, beta) = A + sum_u e^{2 alpha u} B_u
//                    - sum_u ( e^{(alpha+i beta) u} D_u + (e^{(alpha+i beta) u} D_u)^H ),
// Hermitian positive semi-definite by construction. Throws NumericError when
// e^{2 alpha u} leaves the floating range.
Eigen::MatrixXcd assemble_C(const GramBlocks& blocks, double alpha, double beta);

// Candidate eigenpair: lambda = alpha + i*beta with unit coefficient vector a.
// Phase convention: the largest-magnitude entry of a is real and non-negative.
struct EigenCandidate {
    double alpha = 0.0;
    double beta = 0.0;
    Eigen::VectorXcd a;

    std::complex<double> lambda() const { return {alpha, beta}; }
};

struct SmallestEigenpair {
    double value;
    Eigen::VectorXcd vector;  // unit, phase-fixed
    double gap;               // second smallest minus smallest; +inf for 1x1
};

// Full Hermitian eigendecomposition (M is small); rejects inputs that are not
// Hermitian within 1e-12 * ||H||_F.
SmallestEigenpair smallest_eigenpair(const Eigen::MatrixXcd& H);

struct LossEvaluation {
    double loss = 0.0;
    Eigen::VectorXcd eigvec;
    double gap = 0.0;
    double grad_alpha = 0.0;
    double grad_beta = 0.0;
    // Spectral gap at or below tau_gap: the smallest eigenvalue may be
    // non-simple and the gradient fields are unreliable.
    bool degenerate = false;
};

// Gap threshold under which the spectrum is treated as non-simple.
double tau_gap(const Eigen::MatrixXcd& C);

// Loss lambda_min(C(alpha, beta)) plus the analytic gradient
//   d/d alpha = (2/N) sum_n dt_n e^{alpha dt_n} ( e^{alpha dt_n} |phi_n|^2
//                                                 - Re(e^{i beta dt_n} phi_n conj(phi_{n+1})) )
//   d/d beta  = (2/N) sum_n Im( dt_n psi_n e^{i beta dt_n} ),   psi_n = e^{alpha dt_n} phi_n conj(phi_{n+1})
// with phi_n = a^H G(x_n) evaluated at the smallest eigenvector a.
LossEvaluation loss_and_gradient(const GramBlocks& blocks, const EvalCache& cache, double alpha,
                                 double beta);

// Quadratic form a^H C(alpha, beta) a for a fixed unit coefficient vector.
double fixed_coefficient_loss(const GramBlocks& blocks, double alpha, double beta,
                              const Eigen::VectorXcd& a);

}  // namespace koopman
