#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "koopman/dictionary.hpp"
#include "koopman/simulation.hpp"

namespace koopman {

// ---------------------------------------------------------------------------
// Generator EDMD baseline: Galerkin least-squares fit of the Koopman
// generator restricted to the dictionary span, from Lie-derivative data
// Jac(G)(x_n) * xdot_n with xdot_n either the exact vector field or a
// forward difference of the transition pairs.
// ---------------------------------------------------------------------------

enum class DerivativeMode { ExactVectorField, FiniteDifference };

std::string to_string(DerivativeMode mode);

struct GeneratorModel {
    Eigen::MatrixXd L;             // generator matrix on dictionary coordinates
    Eigen::VectorXcd eigenvalues;  // spectrum of L, sorted by (Re, Im)
    DerivativeMode derivative_mode = DerivativeMode::ExactVectorField;
    int rank = 0;                  // numerical rank of the dictionary Gram matrix
    bool rank_deficient = false;   // true when rank < M after truncation
};

// Exact mode: Lie derivatives from the vector field at each sample state.
GeneratorModel fit_gedmd(const std::vector<Eigen::VectorXd>& states, const Dictionary& dict,
                         const VectorField& field);

// Finite-difference mode: xdot_n = (x_{n+1} - x_n) / dt_n at each pair's
// left endpoint.
GeneratorModel fit_gedmd(const TransitionDataset& dataset, const Dictionary& dict);

// The left endpoints of every pair, in dataset order: the sample set used by
// exact-mode fits that start from a simulated dataset.
std::vector<Eigen::VectorXd> dataset_states(const TransitionDataset& dataset);

struct SpectrumRow {
    std::complex<double> eigenvalue;
    std::complex<double> nearest_analytic;
    double distance = 0.0;
};

// Per-eigenvalue nearest-match distances against the analytic spectrum the
// experiment supplies; rows sorted by (Re, Im) of the eigenvalue.
std::vector<SpectrumRow> spectrum_report(const GeneratorModel& model,
                                         const std::vector<std::complex<double>>& analytic);

}  // namespace koopman
