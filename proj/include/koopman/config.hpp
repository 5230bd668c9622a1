#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "koopman/dictionary.hpp"
#include "koopman/landscape.hpp"
#include "koopman/optimizer.hpp"
#include "koopman/simulation.hpp"

namespace koopman {

// ---------------------------------------------------------------------------
// Single-run experiment description, read from a versioned JSON document.
// Every output artifact embeds the config hash and the seed, so runs are
// re-derivable from the config alone.
// ---------------------------------------------------------------------------

enum class SamplingMode { Regular, IrregularSubset };

std::string to_string(SamplingMode mode);

struct SystemSpec {
    std::string type;  // "klus" | "harmonic"
    double gamma = 0.0;
    double delta = 0.0;
    double omega = 0.0;

    VectorField vector_field() const;
    int state_dim() const;
};

struct DictionarySpec {
    int max_degree = 1;
    bool include_constant = false;
};

struct SamplingSpec {
    SamplingMode mode = SamplingMode::Regular;
    double delta = 0.0;    // fine-grid interval
    double horizon = 0.0;
    int trajectories = 1;
    int keep_count = 0;    // irregular-subset only
    double max_h = 1e-3;   // integrator step bound; substeps = ceil(delta / max_h)
    std::optional<Eigen::VectorXd> x0;  // fixed initial state (single trajectory)
    std::optional<Eigen::VectorXd> box_lo, box_hi;  // or a sampling box
};

struct InitGridSpec {
    double alpha_lo = 0.0, alpha_hi = 0.0;
    int alpha_count = 1;
    double beta_lo = 0.0, beta_hi = 0.0;
    int beta_count = 1;
};

struct GedmdSpec {
    bool run_exact = true;
    bool run_finite_difference = true;
    std::vector<std::complex<double>> analytic;
};

struct ExperimentConfig {
    int schema_version = 1;
    std::string id;
    std::uint64_t seed = 0;
    SystemSpec system;
    DictionarySpec dictionary;
    SamplingSpec sampling;
    InitGridSpec init_grid;
    OptimConfig optim;
    SweepSpec sweep;
    GedmdSpec gedmd;
    std::string output_dir = "out";

    Dictionary build_dictionary() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Canonical re-serialization with every field made explicit; keys are sorted
// by the JSON library, so equal configs serialize identically.
nlohmann::json to_json(const ExperimentConfig& config);

std::uint64_t fnv1a64(const std::string& bytes);

// 16 hex digits of the FNV-1a hash of the canonical serialization.
std::string config_hash(const ExperimentConfig& config);

// Row-major (alpha outer, beta inner) grid of initial guesses.
std::vector<std::pair<double, double>> make_init_grid(const InitGridSpec& spec);

}  // namespace koopman
