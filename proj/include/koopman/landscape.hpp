#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "koopman/spectral_loss.hpp"

namespace koopman {

// ---------------------------------------------------------------------------
// Loss-surface sweeps along beta at fixed alpha, plus the aliasing /
// symmetry diagnostics built on them.
// ---------------------------------------------------------------------------

enum class SweepMode { EigenLoss, FixedCoefficient };

std::string to_string(SweepMode mode);

struct SweepSpec {
    double alpha_fixed = 0.0;
    std::pair<double, double> beta_range{-60.0, 60.0};
    int resolution = 2001;
    SweepMode mode = SweepMode::EigenLoss;
};

struct SweepCurve {
    std::vector<double> betas;
    std::vector<double> losses;
    SweepMode mode = SweepMode::EigenLoss;
    double alpha_fixed = 0.0;

    std::size_t size() const { return betas.size(); }
    double grid_spacing() const;
};

// Loss at each grid beta. Eigen-loss mode takes the smallest eigenvalue of
// C(alpha, beta); fixed-coefficient mode evaluates a^H C a for the supplied
// unit vector. sweep_beta evaluates grid points concurrently;
// sweep_beta_serial is the reference used by tests/benchmarks. A symmetric
// beta range produces an exactly mirror-symmetric grid.
SweepCurve sweep_beta(const GramBlocks& blocks, const SweepSpec& spec,
                      const std::optional<Eigen::VectorXcd>& a_fixed = std::nullopt);
SweepCurve sweep_beta_serial(const GramBlocks& blocks, const SweepSpec& spec,
                             const std::optional<Eigen::VectorXcd>& a_fixed = std::nullopt);

// max over overlapping beta of |L(beta + period) - L(beta)| / max|L|, with the
// shifted value linearly interpolated on the grid. The period must fit at
// least twice inside the sweep range.
double periodicity_defect(const SweepCurve& curve, double period);

// Grid argmin restricted to [beta_true - window, beta_true + window].
std::pair<double, double> minima_near_truth(const SweepCurve& curve, double beta_true,
                                            double window);

// CSV columns: beta, loss, mode, alpha_fixed, dataset_id. Leading '#' comment
// lines carry the provenance metadata (config hash, seed).
void write_curve_csv(const SweepCurve& curve, const std::string& dataset_id,
                     const std::string& path, const std::vector<std::string>& metadata = {});
SweepCurve read_curve_csv(const std::string& path);

// Minimal standalone line plot (log-scale loss) with vertical markers at
// +/- beta_true; presentation only.
void write_curve_svg(const SweepCurve& curve, const std::string& path,
                     std::optional<double> beta_true = std::nullopt,
                     const std::vector<std::string>& metadata = {});

}  // namespace koopman
