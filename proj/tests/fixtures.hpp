// Shared dataset builders for the test suites: the two benchmark systems in
// small configurations, plus the canonical experiment datasets where a test
// needs them.
#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "koopman/config.hpp"
#include "koopman/dictionary.hpp"
#include "koopman/experiments.hpp"
#include "koopman/simulation.hpp"
#include "koopman/spectral_loss.hpp"

namespace fixtures {

inline koopman::VectorField klus_field(double gamma = -0.8, double delta = -0.7) {
    return koopman::VectorField{koopman::KlusSystem{gamma, delta}};
}

inline koopman::VectorField harmonic_field(double omega = 50.0) {
    return koopman::VectorField{koopman::HarmonicOscillator{omega}};
}

inline int substeps_for(double interval, double max_h = 1e-3) {
    return static_cast<int>(std::ceil(interval / max_h));
}

// Klus trajectories from uniform initial states in [-2,2]^2.
inline koopman::TransitionDataset klus_dataset(double interval, int trajectories = 5,
                                               double horizon = 2.0, std::uint64_t seed = 101) {
    const koopman::VectorField field = klus_field();
    Eigen::Vector2d lo(-2.0, -2.0), hi(2.0, 2.0);
    const std::vector<Eigen::VectorXd> inits =
        koopman::sample_initial_states(trajectories, lo, hi, seed);
    std::vector<koopman::Trajectory> trajs;
    for (const Eigen::VectorXd& x0 : inits)
        trajs.push_back(
            koopman::sample_regular(field, x0, interval, horizon, substeps_for(interval)));
    return koopman::build_dataset(trajs);
}

// Single harmonic trajectory from (1, 0), regularly sampled.
inline koopman::TransitionDataset harmonic_regular(double interval, double horizon = 4.0) {
    const koopman::VectorField field = harmonic_field();
    const koopman::Trajectory traj = koopman::sample_regular(
        field, Eigen::Vector2d(1.0, 0.0), interval, horizon, substeps_for(interval));
    return koopman::build_dataset({traj});
}

// Random 20-point subset of the fine 401-point harmonic trajectory.
inline koopman::TransitionDataset harmonic_irregular(std::uint64_t seed = 202) {
    const koopman::VectorField field = harmonic_field();
    const koopman::Trajectory fine = koopman::sample_regular(
        field, Eigen::Vector2d(1.0, 0.0), 0.01, 4.0, substeps_for(0.01));
    return koopman::build_dataset({koopman::subsample_irregular(fine, 20, seed)});
}

inline koopman::Dictionary klus_dict() { return koopman::build_monomial_dictionary(2, 4, false); }

inline koopman::Dictionary harmonic_dict() {
    return koopman::build_monomial_dictionary(2, 2, false);
}

// Analytic Klus eigenfunction ((2g-d)/d) * x2 + x1^2 as a unit coefficient
// vector over the degree-4 dictionary; its eigenvalue is d.
inline Eigen::VectorXcd klus_eigvec(const koopman::Dictionary& dict, double gamma = -0.8,
                                    double delta = -0.7) {
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(dict.size());
    const koopman::MultiIndex x2{{0, 1}};
    const koopman::MultiIndex x1sq{{2, 0}};
    for (int m = 0; m < dict.size(); ++m) {
        if (dict.terms[m] == x2) a(m) = (2.0 * gamma - delta) / delta;
        if (dict.terms[m] == x1sq) a(m) = 1.0;
    }
    return a / a.norm();
}

// Tiny scalar dataset: one transition pair x -> y over interval dt with the
// dictionary {x}.
inline koopman::TransitionDataset scalar_pair(double x, double y, double dt) {
    koopman::TransitionDataset dataset;
    dataset.state_dim = 1;
    koopman::TransitionPair pair;
    pair.traj_id = 0;
    pair.t_before = 0.0;
    pair.t_after = dt;
    pair.x_before = Eigen::VectorXd::Constant(1, x);
    pair.x_after = Eigen::VectorXd::Constant(1, y);
    dataset.pairs.push_back(pair);
    return dataset;
}

inline koopman::Dictionary scalar_dict() {
    return koopman::make_dictionary(1, {koopman::MultiIndex{{1}}});
}

}  // namespace fixtures
