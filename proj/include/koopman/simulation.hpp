// simulation.hpp — benchmark vector fields, RK4 flows, sampling schedules
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace koopman {

// x1' = gamma*x1, x2' = delta*(x2 - x1^2)
struct KlusSystem {
    double gamma;
    double delta;
};

// x1' = -omega*x2, x2' = omega*x1
struct HarmonicOscillator {
    double omega;
};

struct CustomField {
    int state_dim;
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> eval;
};

struct VectorField {
    std::variant<KlusSystem, HarmonicOscillator, CustomField> kind;

    int state_dim() const;
    void eval(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
    std::string name() const;
};

struct Trajectory {
    std::vector<double> times;            // strictly increasing
    std::vector<Eigen::VectorXd> states;  // same length as times

    int state_dim() const { return states.empty() ? 0 : static_cast<int>(states[0].size()); }
    std::size_t size() const { return times.size(); }
};

struct TransitionPair {
    int traj_id;
    double t_before;
    double t_after;
    Eigen::VectorXd x_before;
    Eigen::VectorXd x_after;

    double dt() const { return t_after - t_before; }
};

// Consecutive-sample pairs; never spans two trajectories.
struct TransitionDataset {
    int state_dim = 0;
    std::vector<TransitionPair> pairs;

    int pair_count() const { return static_cast<int>(pairs.size()); }
};

// Classical RK4 over the given time grid with fixed substeps per interval.
Trajectory integrate(const VectorField& field, const Eigen::VectorXd& x0,
                     const std::vector<double>& t_grid, int substeps_per_interval);

// Times 0, delta, 2*delta, ..., floor(horizon/delta)*delta.
Trajectory sample_regular(const VectorField& field, const Eigen::VectorXd& x0, double delta,
                          double horizon, int substeps);

// Uniform-without-replacement subset of the trajectory's sample points,
// re-sorted ascending; deterministic per seed.
Trajectory subsample_irregular(const Trajectory& traj, int keep_count, std::uint64_t seed);

TransitionDataset build_dataset(const std::vector<Trajectory>& trajs);

// i.i.d. uniform points in the box [lo, hi], deterministic per seed.
std::vector<Eigen::VectorXd> sample_initial_states(int count, const Eigen::VectorXd& box_lo,
                                                   const Eigen::VectorXd& box_hi,
                                                   std::uint64_t seed);

// CSV round-trip. Values are written with 17 significant digits so the
// round-trip is bit-exact; '#' comment lines carry seed/generator metadata.
void write_dataset(const TransitionDataset& dataset, const std::string& path,
                   const std::vector<std::string>& metadata = {});
TransitionDataset read_dataset(const std::string& path);

}  // namespace koopman
