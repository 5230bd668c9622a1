// koopman — learn Koopman eigenvalue/eigenfunction pairs from trajectory data
// sampled at arbitrary (possibly irregular) time intervals.
//
// Subcommands: simulate | fit | sweep | gedmd | reproduce.
// Exit codes: 0 success, 1 usage/config error, 2 numeric failure.

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "koopman/config.hpp"
#include "koopman/errors.hpp"
#include "koopman/experiments.hpp"
#include "koopman/landscape.hpp"
#include "koopman/log.hpp"
#include "koopman/simulation.hpp"
#include "koopman/spectral_loss.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;                // overrides config.output_dir when set
    std::optional<std::uint64_t> seed;  // overrides config.seed when set
    int threads = 0;                    // 0 = auto
    std::string data_path;              // reuse an existing dataset CSV
};

void add_common(CLI::App* sub, CommonOpts& opts, bool needs_config) {
    CLI::Option* config = sub->add_option("--config", opts.config_path, "experiment config JSON");
    if (needs_config) config->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "output directory (default: config output_dir)");
    sub->add_option("--seed", opts.seed, "override the config seed");
    sub->add_option("--threads", opts.threads, "worker threads (0 = auto)")
        ->check(CLI::NonNegativeNumber);
}

void apply_threads(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

koopman::ExperimentConfig load_with_overrides(const CommonOpts& opts) {
    koopman::ExperimentConfig config = koopman::load_config(opts.config_path);
    if (opts.seed) config.seed = *opts.seed;
    if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
    koopman::log::debug("config %s: seed %llu, hash %s, output %s", config.id.c_str(),
                        static_cast<unsigned long long>(config.seed),
                        koopman::config_hash(config).c_str(), config.output_dir.c_str());
    return config;
}

koopman::TransitionDataset obtain_dataset(const koopman::ExperimentConfig& config,
                                          const CommonOpts& opts) {
    if (!opts.data_path.empty()) return koopman::read_dataset(opts.data_path);
    return koopman::simulate_dataset(config);
}

int cmd_simulate(const CommonOpts& opts) {
    apply_threads(opts.threads);
    const koopman::ExperimentConfig config = load_with_overrides(opts);
    const koopman::TransitionDataset dataset = koopman::simulate_dataset(config);
    std::filesystem::create_directories(config.output_dir);
    const std::string path = config.output_dir + "/dataset_" + config.id + ".csv";
    koopman::write_dataset(dataset, path, koopman::artifact_metadata(config));
    std::printf("wrote %s (%zu transition pairs)\n", path.c_str(), dataset.pairs.size());
    return 0;
}

int cmd_fit(const CommonOpts& opts) {
    apply_threads(opts.threads);
    const koopman::ExperimentConfig config = load_with_overrides(opts);
    const koopman::TransitionDataset dataset = obtain_dataset(config, opts);
    const koopman::FitOutcome fit = koopman::run_fit(config, dataset);
    std::filesystem::create_directories(config.output_dir);
    const std::string base = config.output_dir + "/";
    koopman::write_spectrum_csv(config, fit, base + "spectrum_" + config.id + ".csv");
    koopman::write_clusters_csv(config, fit, base + "clusters_" + config.id + ".csv");
    koopman::write_traces(config, fit, base + "traces_" + config.id);
    std::printf("wrote %sspectrum_%s.csv (%zu starts, %zu clusters)\n", base.c_str(),
                config.id.c_str(), fit.results.size(), fit.clusters.size());
    if (!fit.any_converged()) {
        std::fprintf(stderr, "fit: no start converged\n");
        return 2;
    }
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    apply_threads(opts.threads);
    const koopman::ExperimentConfig config = load_with_overrides(opts);
    const koopman::TransitionDataset dataset = obtain_dataset(config, opts);
    const koopman::Dictionary dict = config.build_dictionary();
    const koopman::GramBlocks blocks = koopman::precompute_gram(dataset, dict);
    const koopman::SweepCurve curve = koopman::sweep_beta(blocks, config.sweep);
    std::filesystem::create_directories(config.output_dir);
    const std::string base = config.output_dir + "/curve_" + config.id;
    const std::optional<double> marker = config.system.type == "harmonic"
                                             ? std::optional<double>(config.system.omega)
                                             : std::nullopt;
    koopman::write_curve_csv(curve, config.id, base + ".csv", koopman::artifact_metadata(config));
    koopman::write_curve_svg(curve, base + ".svg", marker, koopman::artifact_metadata(config));
    std::printf("wrote %s.csv and %s.svg (%zu points)\n", base.c_str(), base.c_str(),
                curve.size());
    return 0;
}

int cmd_gedmd(const CommonOpts& opts) {
    apply_threads(opts.threads);
    const koopman::ExperimentConfig config = load_with_overrides(opts);
    const koopman::TransitionDataset dataset = obtain_dataset(config, opts);
    const koopman::GedmdOutcome outcome = koopman::run_gedmd(config, dataset);
    std::filesystem::create_directories(config.output_dir);
    const std::string path = config.output_dir + "/gedmd_" + config.id + ".csv";
    koopman::write_gedmd_csv(config, outcome, path);
    std::printf("wrote %s (%zu models)\n", path.c_str(), outcome.models.size());
    return 0;
}

int cmd_reproduce(const std::string& which, const CommonOpts& opts) {
    apply_threads(opts.threads);
    const std::string out_root = opts.out_dir.empty() ? "out" : opts.out_dir;
    koopman::reproduce(which, out_root, opts.seed);
    std::printf("wrote %s/%s/summary.csv\n", out_root.c_str(), which.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Koopman eigenvalue learning from arbitrarily sampled trajectory data"};
    app.require_subcommand(1);

    CommonOpts simulate_opts, fit_opts, sweep_opts, gedmd_opts, reproduce_opts;
    std::string which;

    CLI::App* simulate = app.add_subcommand("simulate", "integrate the system and write a dataset");
    add_common(simulate, simulate_opts, true);

    CLI::App* fit = app.add_subcommand("fit", "multi-start spectral fit");
    add_common(fit, fit_opts, true);
    fit->add_option("--data", fit_opts.data_path, "reuse an existing dataset CSV")
        ->check(CLI::ExistingFile);

    CLI::App* sweep = app.add_subcommand("sweep", "loss landscape over beta");
    add_common(sweep, sweep_opts, true);
    sweep->add_option("--data", sweep_opts.data_path, "reuse an existing dataset CSV")
        ->check(CLI::ExistingFile);

    CLI::App* gedmd = app.add_subcommand("gedmd", "generator-EDMD baseline spectrum");
    add_common(gedmd, gedmd_opts, true);
    gedmd->add_option("--data", gedmd_opts.data_path, "reuse an existing dataset CSV")
        ->check(CLI::ExistingFile);

    CLI::App* reproduce = app.add_subcommand("reproduce", "run a full canonical experiment");
    reproduce->add_option("which", which, "exp1 | exp2")
        ->required()
        ->check(CLI::IsMember({"exp1", "exp2"}));
    add_common(reproduce, reproduce_opts, false);

    int rc = 0;
    try {
        app.parse(argc, argv);
        if (simulate->parsed()) rc = cmd_simulate(simulate_opts);
        else if (fit->parsed()) rc = cmd_fit(fit_opts);
        else if (sweep->parsed()) rc = cmd_sweep(sweep_opts);
        else if (gedmd->parsed()) rc = cmd_gedmd(gedmd_opts);
        else if (reproduce->parsed()) rc = cmd_reproduce(which, reproduce_opts);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const koopman::InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const koopman::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const koopman::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 2;
    }
    return rc;
}
