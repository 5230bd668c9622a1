#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "koopman/config.hpp"
#include "koopman/gedmd.hpp"
#include "koopman/landscape.hpp"
#include "koopman/optimizer.hpp"
#include "koopman/simulation.hpp"

namespace koopman {

// ---------------------------------------------------------------------------
// Canonical experiment definitions and the simulate -> fit -> gedmd -> sweep
// pipeline shared by the CLI subcommands.
// ---------------------------------------------------------------------------

// Experiment 1: the Klus two-dimensional nonlinear system at three sampling
// intervals. Experiment 2: the harmonic oscillator under fine/coarse regular
// sampling and an irregular 20-of-400 subset.
std::vector<ExperimentConfig> experiment_configs(
    const std::string& which, std::optional<std::uint64_t> seed_override = std::nullopt);

// The analytic eigenvalues the experiment's summary table reports against.
std::vector<std::complex<double>> reporting_eigenvalues(const std::string& which);

// Lattice n*gamma + m*delta for n, m in {0..max_order}, omitting n = m = 0.
std::vector<std::complex<double>> klus_eigenvalue_lattice(double gamma, double delta,
                                                          int max_order);

TransitionDataset simulate_dataset(const ExperimentConfig& config);

struct FitOutcome {
    std::vector<std::pair<double, double>> grid;
    std::vector<OptimResult> results;
    std::vector<SpectrumCluster> clusters;

    bool any_converged() const;
};

FitOutcome run_fit(const ExperimentConfig& config, const TransitionDataset& dataset);

struct GedmdOutcome {
    std::vector<GeneratorModel> models;            // one per enabled mode
    std::vector<std::vector<SpectrumRow>> reports;  // aligned with models
};

GedmdOutcome run_gedmd(const ExperimentConfig& config, const TransitionDataset& dataset);

// Metadata comment lines (config hash, seed, id) embedded in every artifact.
std::vector<std::string> artifact_metadata(const ExperimentConfig& config);

void write_config_json(const ExperimentConfig& config, const std::string& path);
void write_spectrum_csv(const ExperimentConfig& config, const FitOutcome& fit,
                        const std::string& path);
void write_clusters_csv(const ExperimentConfig& config, const FitOutcome& fit,
                        const std::string& path);
void write_traces(const ExperimentConfig& config, const FitOutcome& fit,
                  const std::string& dir);
void write_gedmd_csv(const ExperimentConfig& config, const GedmdOutcome& outcome,
                     const std::string& path);

struct SummaryRow {
    std::string experiment;
    std::string dataset_id;
    std::string method;
    std::complex<double> analytic;
    std::complex<double> learned;
    double abs_error = 0.0;
};

void write_summary_csv(const std::vector<SummaryRow>& rows,
                       const std::vector<std::string>& metadata, const std::string& path);

// Full pipeline for one config; artifacts land in out_dir. Returns the
// summary rows comparing the learned spectra against `reporting`.
std::vector<SummaryRow> run_pipeline(const ExperimentConfig& config, const std::string& out_dir,
                                     const std::string& experiment_name,
                                     const std::vector<std::complex<double>>& reporting);

// Runs all sub-runs of exp1 or exp2 into <out_root>/<which>/.
void reproduce(const std::string& which, const std::string& out_root,
               std::optional<std::uint64_t> seed_override);

}  // namespace koopman
