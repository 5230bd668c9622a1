#include "koopman/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>

#include "koopman/errors.hpp"
#include "koopman/log.hpp"

namespace koopman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxBacktracks = 60;  // 0.5^60 ~ 9e-19: below any meaningful step

struct PointEval {
    double alpha = 0.0;
    double beta = 0.0;
    LossEvaluation ev;
};

double grad_norm(const LossEvaluation& ev) { return std::hypot(ev.grad_alpha, ev.grad_beta); }

// Evaluates loss/gradient at (alpha, beta); overflow in the C assembly is
// reported as failure instead of propagating, so trial points merely get
// rejected.
bool try_eval(const GramBlocks& blocks, const EvalCache& cache, double alpha, double beta,
              LossEvaluation& out) {
    if (!std::isfinite(alpha) || !std::isfinite(beta)) return false;
    try {
        out = loss_and_gradient(blocks, cache, alpha, beta);
    } catch (const NumericError&) {
        return false;
    }
    return !std::isnan(out.loss);
}

bool armijo_step(const GramBlocks& blocks, const EvalCache& cache, const OptimConfig& cfg,
                 PointEval& cur) {
    const double ga = cur.ev.grad_alpha;
    const double gb = cur.ev.grad_beta;
    const double gn2 = ga * ga + gb * gb;
    if (gn2 == 0.0) return false;

    double t = cfg.init_step;
    // Scale the whole displacement so the first trial already honors the beta
    // cap; backtracking only shrinks it further.
    if (std::isfinite(cfg.max_step_beta) && std::abs(gb) > 0.0)
        t = std::min(t, cfg.max_step_beta / std::abs(gb));

    for (int k = 0; k < kMaxBacktracks; ++k, t *= cfg.backtrack_factor) {
        LossEvaluation trial;
        if (!try_eval(blocks, cache, cur.alpha - t * ga, cur.beta - t * gb, trial)) continue;
        if (trial.loss < cur.ev.loss && trial.loss <= cur.ev.loss - cfg.armijo_c * t * gn2) {
            cur.alpha -= t * ga;
            cur.beta -= t * gb;
            cur.ev = trial;
            return true;
        }
    }
    return false;
}

// Derivative-free search along one axis: a uniform pre-scan of the bracket
// locates the most promising cell, then golden-section refines inside it.
// Returns true when a strictly lower point was found (cur is moved there).
bool axis_search(const GramBlocks& blocks, const EvalCache& cache, const OptimConfig& cfg,
                 bool beta_axis, double halfwidth, PointEval& cur) {
    const auto eval_offset = [&](double s, LossEvaluation& out) {
        const double a = beta_axis ? cur.alpha : cur.alpha + s;
        const double b = beta_axis ? cur.beta + s : cur.beta;
        return try_eval(blocks, cache, a, b, out);
    };

    int budget = cfg.line_search_max_evals;
    const int scan = std::clamp(cfg.line_search_max_evals / 3, 9, 65);
    const double step = 2.0 * halfwidth / (scan - 1);

    double best_s = 0.0;
    double best_loss = cur.ev.loss;
    LossEvaluation best_ev = cur.ev;
    for (int j = 0; j < scan && budget > 0; ++j, --budget) {
        const double s = (-halfwidth * (scan - 1 - j) + halfwidth * j) / (scan - 1);
        LossEvaluation ev;
        if (!eval_offset(s, ev)) continue;
        if (ev.loss < best_loss) {
            best_s = s;
            best_loss = ev.loss;
            best_ev = ev;
        }
    }

    // Golden-section refinement inside the bracket around the scan minimum.
    double lo = std::max(-halfwidth, best_s - step);
    double hi = std::min(halfwidth, best_s + step);
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    LossEvaluation ev1, ev2;
    double f1 = eval_offset(x1, ev1) ? ev1.loss : kInf;
    double f2 = eval_offset(x2, ev2) ? ev2.loss : kInf;
    budget -= 2;
    const auto consider = [&](double s, double f, const LossEvaluation& ev) {
        if (f < best_loss) {
            best_s = s;
            best_loss = f;
            best_ev = ev;
        }
    };
    consider(x1, f1, ev1);
    consider(x2, f2, ev2);
    while (hi - lo > cfg.line_search_tol && budget > 0) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            ev2 = ev1;
            x1 = hi - ratio * (hi - lo);
            f1 = eval_offset(x1, ev1) ? ev1.loss : kInf;
            consider(x1, f1, ev1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            ev1 = ev2;
            x2 = lo + ratio * (hi - lo);
            f2 = eval_offset(x2, ev2) ? ev2.loss : kInf;
            consider(x2, f2, ev2);
        }
        --budget;
    }

    if (best_loss < cur.ev.loss) {
        if (beta_axis)
            cur.beta += best_s;
        else
            cur.alpha += best_s;
        cur.ev = best_ev;
        return true;
    }
    return false;
}

bool fallback_round(const GramBlocks& blocks, const EvalCache& cache, const OptimConfig& cfg,
                    double halfwidth, PointEval& cur) {
    // Beta axis first: the frequency valley dominates the landscape.
    bool moved = axis_search(blocks, cache, cfg, /*beta_axis=*/true, halfwidth, cur);
    moved = axis_search(blocks, cache, cfg, /*beta_axis=*/false, halfwidth, cur) || moved;
    return moved;
}

}  // namespace

OptimConfig resolve_config(const OptimConfig& config, const GramBlocks& blocks) {
    OptimConfig cfg = config;
    if (cfg.max_step_beta == 0.0) cfg.max_step_beta = M_PI / blocks.max_interval();
    if (cfg.max_iters < 1) throw InputError("OptimConfig: max_iters must be >= 1");
    if (!(cfg.grad_tol >= 0) || !(cfg.loss_tol >= 0))
        throw InputError("OptimConfig: tolerances must be non-negative");
    if (!(cfg.armijo_c > 0) || !(cfg.armijo_c < 1))
        throw InputError("OptimConfig: armijo_c must lie in (0,1)");
    if (!(cfg.backtrack_factor > 0) || !(cfg.backtrack_factor < 1))
        throw InputError("OptimConfig: backtrack_factor must lie in (0,1)");
    if (!(cfg.init_step > 0) || !std::isfinite(cfg.init_step))
        throw InputError("OptimConfig: init_step must be positive and finite");
    if (!(cfg.max_step_beta > 0)) throw InputError("OptimConfig: max_step_beta must be positive");
    if (!(cfg.line_search_tol > 0)) throw InputError("OptimConfig: line_search_tol must be positive");
    if (cfg.line_search_max_evals < 8)
        throw InputError("OptimConfig: line_search_max_evals must be >= 8");
    return cfg;
}

std::string to_string(OptimStatus status) {
    switch (status) {
        case OptimStatus::ConvergedByLoss: return "converged-by-loss";
        case OptimStatus::ConvergedByGradient: return "converged-by-gradient";
        case OptimStatus::MaxIters: return "max-iters";
        case OptimStatus::StalledDegenerate: return "stalled-degenerate";
        case OptimStatus::Diverged: return "diverged";
    }
    return "unknown";
}

OptimResult optimize_from(const GramBlocks& blocks, const EvalCache& cache,
                          std::pair<double, double> init, const OptimConfig& config) {
    const OptimConfig cfg = resolve_config(config, blocks);
    if (!std::isfinite(init.first) || !std::isfinite(init.second))
        throw InputError("optimize_from: initial (alpha, beta) must be finite");

    // The axis-search bracket keeps a finite width even when the user
    // disables the per-step cap.
    const double fallback_halfwidth = std::isfinite(cfg.max_step_beta)
                                          ? cfg.max_step_beta
                                          : M_PI / blocks.max_interval();

    OptimResult out;
    PointEval cur;
    cur.alpha = init.first;
    cur.beta = init.second;
    if (!try_eval(blocks, cache, cur.alpha, cur.beta, cur.ev)) {
        out.trace.push_back({0, cur.alpha, cur.beta, kInf, kInf});
        out.status = OptimStatus::Diverged;
        out.loss = kInf;
        out.candidate.alpha = cur.alpha;
        out.candidate.beta = cur.beta;
        out.candidate.a = Eigen::VectorXcd::Unit(blocks.dict_size, 0);
        return out;
    }
    out.trace.push_back({0, cur.alpha, cur.beta, cur.ev.loss, grad_norm(cur.ev)});

    // The hybrid schedule alternates gradient-descent turns with
    // derivative-free axis-search turns. Gradient descent alone rides shallow
    // decay plateaus indefinitely (Armijo keeps accepting microscopic
    // decreases), while the bracketed axis search ratchets beta from one
    // local valley to a deeper neighbor; alternating the two lets starts far
    // from the frequency valley migrate into it. The axis search additionally
    // runs whenever a descent step is rejected, the eigenvalue gap is
    // degenerate, or the gradient test fires with the loss still high.
    out.status = OptimStatus::MaxIters;
    bool axis_turn = false;
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        if (cur.ev.loss <= cfg.loss_tol) {
            out.status = OptimStatus::ConvergedByLoss;
            break;
        }

        const bool grad_stop = grad_norm(cur.ev) <= cfg.grad_tol;
        bool moved = false;
        bool exhausted = false;
        if (grad_stop || cur.ev.degenerate) {
            // First-order stall or degenerate gap: only the derivative-free
            // search can make progress; failure here is terminal.
            moved = fallback_round(blocks, cache, cfg, fallback_halfwidth, cur);
            exhausted = !moved;
            axis_turn = false;
        } else if (axis_turn) {
            // A fruitless axis turn is not terminal: the next gradient turn
            // may still descend.
            moved = fallback_round(blocks, cache, cfg, fallback_halfwidth, cur);
            axis_turn = false;
        } else {
            moved = armijo_step(blocks, cache, cfg, cur);
            if (moved) {
                axis_turn = true;
            } else {
                moved = fallback_round(blocks, cache, cfg, fallback_halfwidth, cur);
                exhausted = !moved;
            }
        }

        if (exhausted) {
            out.status = grad_stop && cur.ev.loss <= cfg.loss_tol ? OptimStatus::ConvergedByGradient
                                                                  : OptimStatus::StalledDegenerate;
            break;
        }
        if (moved) out.trace.push_back({iter, cur.alpha, cur.beta, cur.ev.loss, grad_norm(cur.ev)});
    }

    out.loss = cur.ev.loss;
    out.candidate.alpha = cur.alpha;
    out.candidate.beta = cur.beta;
    out.candidate.a = cur.ev.eigvec;
    return out;
}

std::vector<OptimResult> multi_start_serial(const GramBlocks& blocks, const EvalCache& cache,
                                            const std::vector<std::pair<double, double>>& init_grid,
                                            const OptimConfig& config) {
    std::vector<OptimResult> out(init_grid.size());
    for (std::size_t i = 0; i < init_grid.size(); ++i)
        out[i] = optimize_from(blocks, cache, init_grid[i], config);
    return out;
}

std::vector<OptimResult> multi_start(const GramBlocks& blocks, const EvalCache& cache,
                                     const std::vector<std::pair<double, double>>& init_grid,
                                     const OptimConfig& config) {
    std::vector<OptimResult> out(init_grid.size());
    std::exception_ptr err = nullptr;
    const int n = static_cast<int>(init_grid.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] =
                optimize_from(blocks, cache, init_grid[static_cast<std::size_t>(i)], config);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return out;
}

std::vector<SpectrumCluster> cluster_spectrum(const std::vector<OptimResult>& results,
                                              double radius) {
    if (!(radius > 0)) throw InputError("cluster_spectrum: radius must be positive");

    std::vector<std::size_t> converged;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const OptimStatus s = results[i].status;
        if (s == OptimStatus::ConvergedByLoss || s == OptimStatus::ConvergedByGradient)
            converged.push_back(i);
    }
    std::stable_sort(converged.begin(), converged.end(), [&](std::size_t a, std::size_t b) {
        return results[a].loss < results[b].loss;
    });

    std::vector<SpectrumCluster> clusters;
    std::vector<bool> assigned(results.size(), false);
    for (const std::size_t seed : converged) {
        if (assigned[seed]) continue;
        SpectrumCluster cluster;
        cluster.representative = results[seed].candidate.lambda();
        cluster.best_loss = results[seed].loss;
        for (const std::size_t j : converged) {
            if (assigned[j]) continue;
            if (std::abs(results[j].candidate.lambda() - cluster.representative) <= radius) {
                assigned[j] = true;
                cluster.member_count += 1;
            }
        }
        clusters.push_back(cluster);
    }
    return clusters;
}

}  // namespace koopman
