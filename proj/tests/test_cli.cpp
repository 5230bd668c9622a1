#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "koopman/config.hpp"
#include "koopman/experiments.hpp"

// Black-box tests of the installed binary: every case shells out to the real
// executable and inspects exit codes and artifacts.

namespace fs = std::filesystem;
using namespace koopman;

namespace {

const char* kBinary = KOOPMAN_CLI_PATH;

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    const std::string out_file = "cli_stdout.txt";
    const std::string err_file = "cli_stderr.txt";
    const std::string cmd = env_prefix + std::string(kBinary) + " " + args + " >" + out_file +
                            " 2>" + err_file;
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = (raw == -1) ? -1 : (WIFEXITED(raw) ? WEXITSTATUS(raw) : -1);
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

fs::path scratch() {
    const fs::path root = fs::path("cli_scratch");
    fs::create_directories(root);
    return root;
}

std::string write_config(const ExperimentConfig& config, const std::string& name) {
    const fs::path path = scratch() / (name + ".json");
    std::ofstream out(path);
    out << to_json(config).dump(2) << "\n";
    return path.string();
}

ExperimentConfig tiny_harmonic() {
    ExperimentConfig c = experiment_configs("exp2").at(1);  // regular, interval 0.2
    c.id = "tiny_harmonic";
    c.sampling.horizon = 1.0;
    c.init_grid = InitGridSpec{-0.5, 0.5, 2, 45.0, 55.0, 2};
    c.optim.max_iters = 500;
    c.optim.loss_tol = 1e-6;
    c.sweep.beta_range = {-60.0, 60.0};
    c.sweep.resolution = 51;
    c.output_dir = (scratch() / "out_default").string();
    return c;
}

ExperimentConfig tiny_klus() {
    ExperimentConfig c = experiment_configs("exp1").at(1);  // interval 0.25, box sampling
    c.id = "tiny_klus";
    c.sampling.trajectories = 3;
    c.sampling.horizon = 1.0;
    c.sweep.resolution = 21;
    c.output_dir = (scratch() / "out_default").string();
    return c;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli("").code == 1);
    CHECK(run_cli("frobnicate").code == 1);
    CHECK(run_cli("fit").code == 1);                               // missing --config
    CHECK(run_cli("fit --config /nonexistent/cfg.json").code == 1);
    CHECK(run_cli("reproduce exp3").code == 1);
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("simulate --help").code == 0);
}

TEST_CASE("invalid config JSON exits 1 and points at the config") {
    const fs::path bad = scratch() / "bad.json";
    {
        std::ofstream out(bad);
        out << "{ this is not json";
    }
    const RunResult r = run_cli("simulate --config " + bad.string());
    CHECK(r.code == 1);
    CHECK(r.err.find("config") != std::string::npos);
}

TEST_CASE("config validation failures exit 1") {
    nlohmann::json j = to_json(tiny_harmonic());
    j["sampling"]["delta"] = -1.0;
    const fs::path path = scratch() / "invalid_delta.json";
    {
        std::ofstream out(path);
        out << j.dump(2);
    }
    const RunResult r = run_cli("simulate --config " + path.string());
    CHECK(r.code == 1);
    CHECK(r.err.find("delta") != std::string::npos);
}

TEST_CASE("simulate writes a dataset and reruns are byte-identical") {
    const std::string cfg = write_config(tiny_harmonic(), "sim_harmonic");
    const std::string out1 = (scratch() / "sim1").string();
    const std::string out2 = (scratch() / "sim2").string();
    CHECK(run_cli("simulate --config " + cfg + " --out " + out1).code == 0);
    CHECK(run_cli("simulate --config " + cfg + " --out " + out2).code == 0);
    const std::string d1 = slurp(out1 + "/dataset_tiny_harmonic.csv");
    const std::string d2 = slurp(out2 + "/dataset_tiny_harmonic.csv");
    REQUIRE(!d1.empty());
    CHECK(d1 == d2);
}

TEST_CASE("seed override changes sampled datasets, same seed does not") {
    const std::string cfg = write_config(tiny_klus(), "sim_klus");
    const std::string a = (scratch() / "seed_a").string();
    const std::string b = (scratch() / "seed_b").string();
    const std::string c = (scratch() / "seed_c").string();
    CHECK(run_cli("simulate --config " + cfg + " --seed 1 --out " + a).code == 0);
    CHECK(run_cli("simulate --config " + cfg + " --seed 1 --out " + b).code == 0);
    CHECK(run_cli("simulate --config " + cfg + " --seed 2 --out " + c).code == 0);
    const std::string da = slurp(a + "/dataset_tiny_klus.csv");
    REQUIRE(!da.empty());
    CHECK(da == slurp(b + "/dataset_tiny_klus.csv"));
    CHECK(da != slurp(c + "/dataset_tiny_klus.csv"));
}

TEST_CASE("log level does not leak into artifacts") {
    const std::string cfg = write_config(tiny_harmonic(), "sim_log");
    const std::string quiet = (scratch() / "log_quiet").string();
    const std::string noisy = (scratch() / "log_noisy").string();
    CHECK(run_cli("simulate --config " + cfg + " --out " + quiet).code == 0);
    CHECK(run_cli("simulate --config " + cfg + " --out " + noisy, "KOOPMAN_LOG=debug ").code ==
          0);
    CHECK(slurp(quiet + "/dataset_tiny_harmonic.csv") ==
          slurp(noisy + "/dataset_tiny_harmonic.csv"));
}

TEST_CASE("fit produces spectrum, clusters, and traces; reruns identical") {
    const std::string cfg = write_config(tiny_harmonic(), "fit_harmonic");
    const std::string out1 = (scratch() / "fit1").string();
    const std::string out2 = (scratch() / "fit2").string();
    const RunResult r = run_cli("fit --config " + cfg + " --out " + out1);
    CHECK(r.code == 0);
    CHECK(fs::exists(out1 + "/spectrum_tiny_harmonic.csv"));
    CHECK(fs::exists(out1 + "/clusters_tiny_harmonic.csv"));
    CHECK(fs::exists(out1 + "/traces_tiny_harmonic/start_000.csv"));
    CHECK(fs::exists(out1 + "/traces_tiny_harmonic/start_003.csv"));
    CHECK(run_cli("fit --config " + cfg + " --out " + out2).code == 0);
    CHECK(slurp(out1 + "/spectrum_tiny_harmonic.csv") ==
          slurp(out2 + "/spectrum_tiny_harmonic.csv"));
    CHECK(slurp(out1 + "/clusters_tiny_harmonic.csv") ==
          slurp(out2 + "/clusters_tiny_harmonic.csv"));
    CHECK(slurp(out1 + "/traces_tiny_harmonic/start_001.csv") ==
          slurp(out2 + "/traces_tiny_harmonic/start_001.csv"));
}

TEST_CASE("fit that cannot converge exits 2 but still writes artifacts") {
    ExperimentConfig c = tiny_harmonic();
    c.id = "tiny_stuck";
    c.optim.max_iters = 1;
    c.optim.loss_tol = 1e-18;
    const std::string cfg = write_config(c, "fit_stuck");
    const std::string out = (scratch() / "fit_stuck").string();
    const RunResult r = run_cli("fit --config " + cfg + " --out " + out);
    CHECK(r.code == 2);
    CHECK(r.err.find("no start converged") != std::string::npos);
    CHECK(fs::exists(out + "/spectrum_tiny_stuck.csv"));
}

TEST_CASE("fit accepts a precomputed dataset via --data") {
    const std::string cfg = write_config(tiny_harmonic(), "fit_data");
    const std::string sim_out = (scratch() / "data_sim").string();
    CHECK(run_cli("simulate --config " + cfg + " --out " + sim_out).code == 0);
    const std::string direct = (scratch() / "fit_direct").string();
    const std::string via_data = (scratch() / "fit_via_data").string();
    CHECK(run_cli("fit --config " + cfg + " --out " + direct).code == 0);
    CHECK(run_cli("fit --config " + cfg + " --data " + sim_out +
                  "/dataset_tiny_harmonic.csv --out " + via_data)
              .code == 0);
    CHECK(slurp(direct + "/spectrum_tiny_harmonic.csv") ==
          slurp(via_data + "/spectrum_tiny_harmonic.csv"));
}

TEST_CASE("threads flag preserves results bit for bit") {
    const std::string cfg = write_config(tiny_harmonic(), "fit_threads");
    const std::string t1 = (scratch() / "threads1").string();
    const std::string t2 = (scratch() / "threads2").string();
    CHECK(run_cli("fit --config " + cfg + " --threads 1 --out " + t1).code == 0);
    CHECK(run_cli("fit --config " + cfg + " --threads 2 --out " + t2).code == 0);
    CHECK(slurp(t1 + "/spectrum_tiny_harmonic.csv") == slurp(t2 + "/spectrum_tiny_harmonic.csv"));
    CHECK(slurp(t1 + "/clusters_tiny_harmonic.csv") == slurp(t2 + "/clusters_tiny_harmonic.csv"));
}

TEST_CASE("sweep writes curve CSV and SVG") {
    const std::string cfg = write_config(tiny_harmonic(), "sweep_harmonic");
    const std::string out = (scratch() / "sweep1").string();
    CHECK(run_cli("sweep --config " + cfg + " --out " + out).code == 0);
    const std::string csv = slurp(out + "/curve_tiny_harmonic.csv");
    const std::string svg = slurp(out + "/curve_tiny_harmonic.svg");
    CHECK(!csv.empty());
    CHECK(svg.find("<svg") != std::string::npos);

    ExperimentConfig c = tiny_harmonic();
    c.id = "tiny_sweep2";
    c.sweep.resolution = 2;
    const std::string cfg2 = write_config(c, "sweep_res2");
    CHECK(run_cli("sweep --config " + cfg2 + " --out " + out).code == 0);
}

TEST_CASE("gedmd succeeds on a well-posed problem") {
    const std::string cfg = write_config(tiny_harmonic(), "gedmd_harmonic");
    const std::string out = (scratch() / "gedmd1").string();
    const RunResult r = run_cli("gedmd --config " + cfg + " --out " + out);
    CHECK(r.code == 0);
    const std::string csv = slurp(out + "/gedmd_tiny_harmonic.csv");
    CHECK(csv.find("exact") != std::string::npos);
    CHECK(csv.find("finite-difference") != std::string::npos);
}

TEST_CASE("gedmd on an ill-posed problem exits 2") {
    // 14-term dictionary, 12 transition pairs: fewer samples than terms.
    const std::string cfg = write_config(tiny_klus(), "gedmd_illposed");
    const std::string out = (scratch() / "gedmd2").string();
    const RunResult r = run_cli("gedmd --config " + cfg + " --out " + out);
    CHECK(r.code == 2);
    CHECK(r.err.find("ill-posed") != std::string::npos);
}

}  // TEST_SUITE
