// Benchmark: OpenMP kernels vs. their serial reference implementations.
//
//   gram        — transition-pair Gram-block accumulation
//   sweep       — beta landscape sweep (eigenvalue per grid point)
//   multi_start — independent optimizer runs from a grid of initial guesses
//
// Usage: bench_kernels [repeats]   (default 3; best-of-N wall time reported)

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "koopman/config.hpp"
#include "koopman/experiments.hpp"
#include "koopman/landscape.hpp"
#include "koopman/optimizer.hpp"
#include "koopman/spectral_loss.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double best_of(int repeats, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = Clock::now();
        fn();
        const auto t1 = Clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

void report(const char* kernel, double serial_s, double parallel_s) {
    std::printf("%-12s serial %8.4fs   parallel %8.4fs   speedup %5.2fx\n", kernel, serial_s,
                parallel_s, serial_s / parallel_s);
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
    if (repeats < 1) {
        std::fprintf(stderr, "usage: bench_kernels [repeats >= 1]\n");
        return 1;
    }
    std::printf("omp_get_max_threads() = %d, repeats = %d\n", omp_get_max_threads(), repeats);

    // Klus system, degree-4 dictionary (M = 14), 20 trajectories: the largest
    // canonical workload.
    koopman::ExperimentConfig config = koopman::experiment_configs("exp1", std::nullopt).front();
    const koopman::TransitionDataset dataset = koopman::simulate_dataset(config);
    const koopman::Dictionary dict = config.build_dictionary();
    const koopman::EvalCache cache = koopman::build_eval_cache(dataset, dict);
    std::printf("dataset: %zu pairs, dictionary size %d\n\n", dataset.pairs.size(), dict.size());

    volatile double sink = 0.0;

    const double gram_serial = best_of(repeats, [&] {
        const koopman::GramBlocks blocks = koopman::precompute_gram_serial(cache);
        sink = sink + blocks.A(0, 0).real();
    });
    const double gram_parallel = best_of(repeats, [&] {
        const koopman::GramBlocks blocks = koopman::precompute_gram(cache);
        sink = sink + blocks.A(0, 0).real();
    });
    report("gram", gram_serial, gram_parallel);

    const koopman::GramBlocks blocks = koopman::precompute_gram(cache);
    koopman::SweepSpec sweep = config.sweep;
    sweep.resolution = 801;
    const double sweep_serial = best_of(repeats, [&] {
        const koopman::SweepCurve curve = koopman::sweep_beta_serial(blocks, sweep);
        sink = sink + curve.losses.front();
    });
    const double sweep_parallel = best_of(repeats, [&] {
        const koopman::SweepCurve curve = koopman::sweep_beta(blocks, sweep);
        sink = sink + curve.losses.front();
    });
    report("sweep", sweep_serial, sweep_parallel);

    const auto grid = koopman::make_init_grid(config.init_grid);
    const double fit_serial = best_of(repeats, [&] {
        const auto results = koopman::multi_start_serial(blocks, cache, grid, config.optim);
        sink = sink + results.front().loss;
    });
    const double fit_parallel = best_of(repeats, [&] {
        const auto results = koopman::multi_start(blocks, cache, grid, config.optim);
        sink = sink + results.front().loss;
    });
    report("multi_start", fit_serial, fit_parallel);

    (void)sink;
    return 0;
}
