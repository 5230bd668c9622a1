#include "koopman/gedmd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "koopman/errors.hpp"
#include "koopman/log.hpp"

namespace koopman {

namespace {

// Solves Psidot ~= L * Psi via the normal equations with a truncated
// pseudo-inverse of the dictionary Gram matrix.
GeneratorModel solve_generator(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& psidot,
                               DerivativeMode mode) {
    const Eigen::Index m = psi.rows();
    const Eigen::Index n = psi.cols();
    if (n < m)
        throw NumericError("fit_gedmd: ill-posed problem: " + std::to_string(n) +
                           " samples for dictionary size " + std::to_string(m));

    const double inv_n = 1.0 / static_cast<double>(n);
    const Eigen::MatrixXd gram = inv_n * psi * psi.transpose();
    const Eigen::MatrixXd cross = inv_n * psidot * psi.transpose();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = 1e-12 * sv(0);
    Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(m);
    int rank = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (sv(i) > cutoff) {
            inv_sv(i) = 1.0 / sv(i);
            ++rank;
        }
    }

    GeneratorModel model;
    model.derivative_mode = mode;
    model.rank = rank;
    model.rank_deficient = rank < m;
    if (model.rank_deficient)
        log::warn("fit_gedmd: dictionary Gram matrix is rank deficient (rank %d of %d)", rank,
                  static_cast<int>(m));
    model.L = cross * (svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose());

    Eigen::EigenSolver<Eigen::MatrixXd> es(model.L);
    if (es.info() != Eigen::Success) throw NumericError("fit_gedmd: eigensolver failed on L");
    model.eigenvalues = es.eigenvalues();
    std::sort(model.eigenvalues.data(), model.eigenvalues.data() + model.eigenvalues.size(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  if (a.real() != b.real()) return a.real() < b.real();
                  return a.imag() < b.imag();
              });
    return model;
}

}  // namespace

std::string to_string(DerivativeMode mode) {
    return mode == DerivativeMode::ExactVectorField ? "exact-vector-field" : "finite-difference";
}

GeneratorModel fit_gedmd(const std::vector<Eigen::VectorXd>& states, const Dictionary& dict,
                         const VectorField& field) {
    if (states.empty()) throw InputError("fit_gedmd: no sample states");
    if (field.state_dim() != dict.state_dim)
        throw InputError("fit_gedmd: field/dictionary state dimension mismatch");

    const int m = dict.size();
    const int n = static_cast<int>(states.size());
    Eigen::MatrixXd psi(m, n);
    Eigen::MatrixXd psidot(m, n);
    Eigen::VectorXd xdot(dict.state_dim);
    for (int k = 0; k < n; ++k) {
        if (states[static_cast<std::size_t>(k)].size() != dict.state_dim)
            throw InputError("fit_gedmd: sample state has wrong dimension");
        const Eigen::VectorXd& x = states[static_cast<std::size_t>(k)];
        psi.col(k) = dict.evaluate(x).real();
        field.eval(x, xdot);
        psidot.col(k) = dict.evaluate_jacobian(x) * xdot;
    }
    return solve_generator(psi, psidot, DerivativeMode::ExactVectorField);
}

GeneratorModel fit_gedmd(const TransitionDataset& dataset, const Dictionary& dict) {
    if (dataset.pairs.empty()) throw InputError("fit_gedmd: empty dataset");
    if (dataset.state_dim != dict.state_dim)
        throw InputError("fit_gedmd: dataset/dictionary state dimension mismatch");

    const int m = dict.size();
    const int n = dataset.pair_count();
    Eigen::MatrixXd psi(m, n);
    Eigen::MatrixXd psidot(m, n);
    for (int k = 0; k < n; ++k) {
        const TransitionPair& p = dataset.pairs[static_cast<std::size_t>(k)];
        psi.col(k) = dict.evaluate(p.x_before).real();
        const Eigen::VectorXd xdot = (p.x_after - p.x_before) / p.dt();
        psidot.col(k) = dict.evaluate_jacobian(p.x_before) * xdot;
    }
    return solve_generator(psi, psidot, DerivativeMode::FiniteDifference);
}

std::vector<Eigen::VectorXd> dataset_states(const TransitionDataset& dataset) {
    std::vector<Eigen::VectorXd> states;
    states.reserve(dataset.pairs.size());
    for (const TransitionPair& p : dataset.pairs) states.push_back(p.x_before);
    return states;
}

std::vector<SpectrumRow> spectrum_report(const GeneratorModel& model,
                                         const std::vector<std::complex<double>>& analytic) {
    if (analytic.empty()) throw InputError("spectrum_report: empty analytic spectrum");
    std::vector<SpectrumRow> rows;
    rows.reserve(static_cast<std::size_t>(model.eigenvalues.size()));
    for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) {
        SpectrumRow row;
        row.eigenvalue = model.eigenvalues(i);
        row.distance = std::numeric_limits<double>::infinity();
        for (const std::complex<double>& a : analytic) {
            const double d = std::abs(row.eigenvalue - a);
            if (d < row.distance) {
                row.distance = d;
                row.nearest_analytic = a;
            }
        }
        rows.push_back(row);
    }
    // eigenvalues are stored sorted by (Re, Im) already; keep rows aligned
    return rows;
}

}  // namespace koopman
