#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "koopman/spectral_loss.hpp"

namespace koopman {

// ---------------------------------------------------------------------------
// Hybrid minimizer for lambda_M(C(alpha, beta)): Armijo-backtracked gradient
// descent with the beta displacement capped per iteration, falling back to a
// derivative-free golden-section search along each coordinate axis whenever a
// descent step is rejected or the smallest eigenvalue is degenerate.
// ---------------------------------------------------------------------------

struct OptimConfig {
    int max_iters = 5000;
    double grad_tol = 1e-8;    // stop when ||grad|| <= grad_tol
    double loss_tol = 1e-10;   // stop when loss <= loss_tol
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    double init_step = 1.0;
    double max_step_beta = 0.0;  // cap on per-iteration beta motion; 0 = auto (pi / largest interval)
    double line_search_tol = 1e-10;
    int line_search_max_evals = 160;
};

// Fills in the automatic beta step cap and checks ranges. Throws InputError on
// an invalid configuration.
OptimConfig resolve_config(const OptimConfig& config, const GramBlocks& blocks);

enum class OptimStatus {
    ConvergedByLoss,
    ConvergedByGradient,
    MaxIters,
    StalledDegenerate,
    Diverged,
};

std::string to_string(OptimStatus status);

struct TracePoint {
    int iter;
    double alpha;
    double beta;
    double loss;
    double grad_norm;
};

struct OptimResult {
    EigenCandidate candidate;
    double loss = 0.0;
    OptimStatus status = OptimStatus::MaxIters;
    std::vector<TracePoint> trace;  // initial point plus one entry per accepted step
};

OptimResult optimize_from(const GramBlocks& blocks, const EvalCache& cache,
                          std::pair<double, double> init, const OptimConfig& config);

// One result per initial guess, order-preserving. multi_start runs the starts
// concurrently; multi_start_serial is the reference used by tests/benchmarks.
std::vector<OptimResult> multi_start(const GramBlocks& blocks, const EvalCache& cache,
                                     const std::vector<std::pair<double, double>>& init_grid,
                                     const OptimConfig& config);
std::vector<OptimResult> multi_start_serial(const GramBlocks& blocks, const EvalCache& cache,
                                            const std::vector<std::pair<double, double>>& init_grid,
                                            const OptimConfig& config);

struct SpectrumCluster {
    std::complex<double> representative;  // member with the lowest loss
    int member_count = 0;
    double best_loss = 0.0;
};

// Greedy clustering of the converged candidates by Euclidean distance in the
// complex plane; clusters are seeded in order of ascending loss.
std::vector<SpectrumCluster> cluster_spectrum(const std::vector<OptimResult>& results,
                                              double radius);

}  // namespace koopman
