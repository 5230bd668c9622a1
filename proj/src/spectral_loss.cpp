#include "koopman/spectral_loss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

constexpr int kChunk = 512;  // pairs per reduction chunk

// Map each pair to the index of its interval value in the ascending unique list.
std::vector<int> group_indices(const Eigen::VectorXd& dts, std::vector<double>& unique_out) {
    unique_out.assign(dts.data(), dts.data() + dts.size());
    std::sort(unique_out.begin(), unique_out.end());
    unique_out.erase(std::unique(unique_out.begin(), unique_out.end()), unique_out.end());
    std::vector<int> idx(static_cast<std::size_t>(dts.size()));
    for (Eigen::Index n = 0; n < dts.size(); ++n) {
        const auto it = std::lower_bound(unique_out.begin(), unique_out.end(), dts[n]);
        idx[static_cast<std::size_t>(n)] = static_cast<int>(it - unique_out.begin());
    }
    return idx;
}

void finalize_blocks(GramBlocks& blocks) {
    // Outer-product sums are Hermitian up to rounding; symmetrize exactly.
    blocks.A = ((blocks.A + blocks.A.adjoint()) / 2.0).eval();
    for (auto& b : blocks.B) b = ((b + b.adjoint()) / 2.0).eval();
}

}  // namespace

EvalCache build_eval_cache(const TransitionDataset& dataset, const Dictionary& dict) {
    if (dataset.pairs.empty()) throw InputError("build_eval_cache: empty dataset");
    if (dataset.state_dim != dict.state_dim)
        throw InputError("build_eval_cache: dataset/dictionary state dimension mismatch");
    const int m = dict.size();
    const int n = dataset.pair_count();
    EvalCache cache;
    cache.g_before.resize(m, n);
    cache.g_after.resize(m, n);
    cache.dts.resize(n);
    for (int k = 0; k < n; ++k) {
        const auto& p = dataset.pairs[static_cast<std::size_t>(k)];
        if (!(p.dt() > 0)) throw InputError("build_eval_cache: non-positive interval");
        cache.g_before.col(k) = dict.evaluate(p.x_before);
        cache.g_after.col(k) = dict.evaluate(p.x_after);
        cache.dts[k] = p.dt();
    }
    return cache;
}

GramBlocks precompute_gram_serial(const EvalCache& cache) {
    const int m = cache.dict_size();
    const int n = cache.pair_count();
    GramBlocks blocks;
    blocks.dict_size = m;
    blocks.pair_count = n;
    const std::vector<int> gidx = group_indices(cache.dts, blocks.unique_intervals);
    const int n_groups = static_cast<int>(blocks.unique_intervals.size());
    blocks.multiplicities.assign(static_cast<std::size_t>(n_groups), 0);
    blocks.A = Eigen::MatrixXcd::Zero(m, m);
    blocks.B.assign(static_cast<std::size_t>(n_groups), Eigen::MatrixXcd::Zero(m, m));
    blocks.D.assign(static_cast<std::size_t>(n_groups), Eigen::MatrixXcd::Zero(m, m));

    const double inv_n = 1.0 / n;
    for (int k = 0; k < n; ++k) {
        const int g = gidx[static_cast<std::size_t>(k)];
        const auto gb = cache.g_before.col(k);
        const auto ga = cache.g_after.col(k);
        blocks.A.noalias() += inv_n * ga * ga.adjoint();
        blocks.B[static_cast<std::size_t>(g)].noalias() += inv_n * gb * gb.adjoint();
        blocks.D[static_cast<std::size_t>(g)].noalias() += inv_n * gb * ga.adjoint();
        blocks.multiplicities[static_cast<std::size_t>(g)] += 1;
    }
    finalize_blocks(blocks);
    return blocks;
}

GramBlocks precompute_gram(const EvalCache& cache) {
    const int m = cache.dict_size();
    const int n = cache.pair_count();
    GramBlocks blocks;
    blocks.dict_size = m;
    blocks.pair_count = n;
    const std::vector<int> gidx = group_indices(cache.dts, blocks.unique_intervals);
    const int n_groups = static_cast<int>(blocks.unique_intervals.size());
    blocks.multiplicities.assign(static_cast<std::size_t>(n_groups), 0);
    blocks.A = Eigen::MatrixXcd::Zero(m, m);
    blocks.B.assign(static_cast<std::size_t>(n_groups), Eigen::MatrixXcd::Zero(m, m));
    blocks.D.assign(static_cast<std::size_t>(n_groups), Eigen::MatrixXcd::Zero(m, m));
    for (int k = 0; k < n; ++k) blocks.multiplicities[static_cast<std::size_t>(gidx[static_cast<std::size_t>(k)])] += 1;

    // Chunked reduction: each chunk accumulates locally in pair order, then
    // chunks merge in chunk order. Summation order is therefore fixed and the
    // result is identical for any thread count.
    const int n_chunks = (n + kChunk - 1) / kChunk;
    struct ChunkSums {
        Eigen::MatrixXcd a;
        std::map<int, std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd>> groups;  // g -> (B, D)
    };
    std::vector<ChunkSums> partial(static_cast<std::size_t>(n_chunks));

    const double inv_n = 1.0 / n;
#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < n_chunks; ++c) {
        ChunkSums& local = partial[static_cast<std::size_t>(c)];
        local.a = Eigen::MatrixXcd::Zero(m, m);
        const int lo = c * kChunk;
        const int hi = std::min(n, lo + kChunk);
        for (int k = lo; k < hi; ++k) {
            const int g = gidx[static_cast<std::size_t>(k)];
            const auto gb = cache.g_before.col(k);
            const auto ga = cache.g_after.col(k);
            local.a.noalias() += inv_n * ga * ga.adjoint();
            auto it = local.groups.find(g);
            if (it == local.groups.end()) {
                it = local.groups
                         .emplace(g, std::make_pair(Eigen::MatrixXcd::Zero(m, m).eval(),
                                                    Eigen::MatrixXcd::Zero(m, m).eval()))
                         .first;
            }
            it->second.first.noalias() += inv_n * gb * gb.adjoint();
            it->second.second.noalias() += inv_n * gb * ga.adjoint();
        }
    }
    for (int c = 0; c < n_chunks; ++c) {
        const ChunkSums& local = partial[static_cast<std::size_t>(c)];
        blocks.A += local.a;
        for (const auto& [g, bd] : local.groups) {
            blocks.B[static_cast<std::size_t>(g)] += bd.first;
            blocks.D[static_cast<std::size_t>(g)] += bd.second;
        }
    }
    finalize_blocks(blocks);
    return blocks;
}

GramBlocks precompute_gram(const TransitionDataset& dataset, const Dictionary& dict) {
    return precompute_gram(build_eval_cache(dataset, dict));
}

Eigen::MatrixXcd assemble_C(const GramBlocks& blocks, double alpha, double beta) {
    if (!std::isfinite(alpha) || !std::isfinite(beta))
        throw InputError("assemble_C: non-finite (alpha, beta)");
    Eigen::MatrixXcd c = blocks.A;
    for (std::size_t u = 0; u < blocks.unique_intervals.size(); ++u) {
        const double dt = blocks.unique_intervals[u];
        const double decay2 = std::exp(2.0 * alpha * dt);
        if (!std::isfinite(decay2))
            throw NumericError("assemble_C: e^{2 alpha dt} overflowed (alpha = " +
                               std::to_string(alpha) + ", dt = " + std::to_string(dt) + ")");
        const std::complex<double> phase =
            std::exp(alpha * dt) * std::complex<double>(std::cos(beta * dt), std::sin(beta * dt));
        c.noalias() += decay2 * blocks.B[u];
        const Eigen::MatrixXcd cross = phase * blocks.D[u];
        c -= cross + cross.adjoint();
    }
    return c;
}

double tau_gap(const Eigen::MatrixXcd& C) {
    return 1e-10 * std::max(1.0, C.trace().real());
}

SmallestEigenpair smallest_eigenpair(const Eigen::MatrixXcd& H) {
    if (H.rows() != H.cols()) throw InputError("smallest_eigenpair: matrix not square");
    const double scale = H.norm();
    if ((H - H.adjoint()).norm() > 1e-12 * scale)
        throw InputError("smallest_eigenpair: matrix is not Hermitian within tolerance");

    const Eigen::MatrixXcd sym = (H + H.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym);
    if (solver.info() != Eigen::Success)
        throw NumericError("smallest_eigenpair: eigensolver failed to converge");

    SmallestEigenpair out;
    out.value = solver.eigenvalues()[0];
    out.vector = solver.eigenvectors().col(0);
    out.gap = H.rows() > 1 ? solver.eigenvalues()[1] - solver.eigenvalues()[0]
                           : std::numeric_limits<double>::infinity();

    // Phase convention: largest-magnitude entry real and non-negative.
    Eigen::Index k = 0;
    out.vector.cwiseAbs().maxCoeff(&k);
    const std::complex<double> pivot = out.vector[k];
    out.vector *= std::conj(pivot) / std::abs(pivot);
    return out;
}

LossEvaluation loss_and_gradient(const GramBlocks& blocks, const EvalCache& cache, double alpha,
                                 double beta) {
    const Eigen::MatrixXcd c = assemble_C(blocks, alpha, beta);
    const SmallestEigenpair pair = smallest_eigenpair(c);

    LossEvaluation ev;
    ev.loss = pair.value;
    ev.eigvec = pair.vector;
    ev.gap = pair.gap;
    ev.degenerate = pair.gap <= tau_gap(c);

    // phi_n = a^H G(x_n); the eigenvector is re-used as the fixed coefficient
    // vector of the envelope-theorem gradient.
    const Eigen::RowVectorXcd phi_before = pair.vector.adjoint() * cache.g_before;
    const Eigen::RowVectorXcd phi_after = pair.vector.adjoint() * cache.g_after;

    const int n = cache.pair_count();
    double ga = 0.0, gb = 0.0;
    for (int k = 0; k < n; ++k) {
        const double dt = cache.dts[k];
        const double decay = std::exp(alpha * dt);
        const std::complex<double> rot(std::cos(beta * dt), std::sin(beta * dt));
        const std::complex<double> cross = phi_before[k] * std::conj(phi_after[k]);
        ga += dt * decay * (decay * std::norm(phi_before[k]) - (rot * cross).real());
        gb += dt * decay * (cross * rot).imag();
    }
    ev.grad_alpha = 2.0 * ga / n;
    ev.grad_beta = 2.0 * gb / n;
    return ev;
}

double fixed_coefficient_loss(const GramBlocks& blocks, double alpha, double beta,
                              const Eigen::VectorXcd& a) {
    if (a.size() != blocks.dict_size)
        throw InputError("fixed_coefficient_loss: coefficient vector has wrong length");
    const Eigen::MatrixXcd c = assemble_C(blocks, alpha, beta);
    return (a.adjoint() * c * a)(0, 0).real();
}

}  // namespace koopman
