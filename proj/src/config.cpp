#include "koopman/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw InputError("config: '" + where + "' must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key))
            throw InputError("config: unknown field '" + key + "' in " + where);
    }
}

const json& require(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key))
        throw InputError("config: missing field '" + key + "' in " + where);
    return j.at(key);
}

double as_number(const json& v, const std::string& where, const std::string& key) {
    if (!v.is_number()) throw InputError("config: field '" + key + "' in " + where + " must be a number");
    return v.get<double>();
}

double num_field(const json& j, const std::string& where, const std::string& key) {
    return as_number(require(j, where, key), where, key);
}

double num_field_or(const json& j, const std::string& where, const std::string& key, double fallback) {
    return j.contains(key) ? as_number(j.at(key), where, key) : fallback;
}

int int_field(const json& j, const std::string& where, const std::string& key) {
    const json& v = require(j, where, key);
    if (!v.is_number_integer())
        throw InputError("config: field '" + key + "' in " + where + " must be an integer");
    return v.get<int>();
}

int int_field_or(const json& j, const std::string& where, const std::string& key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer())
        throw InputError("config: field '" + key + "' in " + where + " must be an integer");
    return j.at(key).get<int>();
}

std::string str_field(const json& j, const std::string& where, const std::string& key) {
    const json& v = require(j, where, key);
    if (!v.is_string()) throw InputError("config: field '" + key + "' in " + where + " must be a string");
    return v.get<std::string>();
}

Eigen::VectorXd vec_field(const json& v, const std::string& where, const std::string& key) {
    if (!v.is_array() || v.empty())
        throw InputError("config: field '" + key + "' in " + where + " must be a non-empty array");
    Eigen::VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = as_number(v[i], where, key);
    return out;
}

SystemSpec parse_system(const json& j) {
    check_keys(j, "system", {"type", "gamma", "delta", "omega"});
    SystemSpec spec;
    spec.type = str_field(j, "system", "type");
    if (spec.type == "klus") {
        spec.gamma = num_field(j, "system", "gamma");
        spec.delta = num_field(j, "system", "delta");
    } else if (spec.type == "harmonic") {
        spec.omega = num_field(j, "system", "omega");
    } else {
        throw InputError("config: unknown system type '" + spec.type + "'");
    }
    return spec;
}

DictionarySpec parse_dictionary(const json& j) {
    check_keys(j, "dictionary", {"max_degree", "include_constant"});
    DictionarySpec spec;
    spec.max_degree = int_field(j, "dictionary", "max_degree");
    if (spec.max_degree < 1) throw InputError("config: dictionary max_degree must be >= 1");
    if (j.contains("include_constant")) {
        if (!j.at("include_constant").is_boolean())
            throw InputError("config: field 'include_constant' in dictionary must be a boolean");
        spec.include_constant = j.at("include_constant").get<bool>();
    }
    return spec;
}

SamplingSpec parse_sampling(const json& j, int state_dim) {
    check_keys(j, "sampling",
               {"mode", "delta", "horizon", "trajectories", "keep_count", "max_h", "x0", "box_lo",
                "box_hi"});
    SamplingSpec spec;
    const std::string mode = str_field(j, "sampling", "mode");
    if (mode == "regular")
        spec.mode = SamplingMode::Regular;
    else if (mode == "irregular-subset")
        spec.mode = SamplingMode::IrregularSubset;
    else
        throw InputError("config: unknown sampling mode '" + mode + "'");

    spec.delta = num_field(j, "sampling", "delta");
    spec.horizon = num_field(j, "sampling", "horizon");
    if (!(spec.delta > 0)) throw InputError("config: sampling delta must be positive");
    if (!(spec.horizon >= spec.delta))
        throw InputError("config: sampling horizon must be >= delta");
    spec.trajectories = int_field_or(j, "sampling", "trajectories", 1);
    if (spec.trajectories < 1) throw InputError("config: sampling trajectories must be >= 1");
    spec.max_h = num_field_or(j, "sampling", "max_h", 1e-3);
    if (!(spec.max_h > 0)) throw InputError("config: sampling max_h must be positive");

    if (spec.mode == SamplingMode::IrregularSubset) {
        spec.keep_count = int_field(j, "sampling", "keep_count");
        if (spec.keep_count < 2) throw InputError("config: sampling keep_count must be >= 2");
    } else if (j.contains("keep_count")) {
        throw InputError("config: field 'keep_count' in sampling only applies to irregular-subset");
    }

    const bool has_x0 = j.contains("x0");
    const bool has_box = j.contains("box_lo") || j.contains("box_hi");
    if (has_x0 == has_box)
        throw InputError("config: sampling needs exactly one of 'x0' or 'box_lo'/'box_hi'");
    if (has_x0) {
        spec.x0 = vec_field(j.at("x0"), "sampling", "x0");
        if (spec.x0->size() != state_dim)
            throw InputError("config: sampling x0 has wrong dimension");
        if (spec.trajectories != 1)
            throw InputError("config: fixed x0 requires trajectories = 1");
    } else {
        spec.box_lo = vec_field(require(j, "sampling", "box_lo"), "sampling", "box_lo");
        spec.box_hi = vec_field(require(j, "sampling", "box_hi"), "sampling", "box_hi");
        if (spec.box_lo->size() != state_dim || spec.box_hi->size() != state_dim)
            throw InputError("config: sampling box has wrong dimension");
        for (Eigen::Index d = 0; d < spec.box_lo->size(); ++d)
            if (!((*spec.box_lo)[d] < (*spec.box_hi)[d]))
                throw InputError("config: sampling box must satisfy lo < hi componentwise");
    }
    return spec;
}

InitGridSpec parse_init_grid(const json& j) {
    check_keys(j, "init_grid",
               {"alpha_lo", "alpha_hi", "alpha_count", "beta_lo", "beta_hi", "beta_count"});
    InitGridSpec spec;
    spec.alpha_lo = num_field(j, "init_grid", "alpha_lo");
    spec.alpha_hi = num_field(j, "init_grid", "alpha_hi");
    spec.alpha_count = int_field(j, "init_grid", "alpha_count");
    spec.beta_lo = num_field(j, "init_grid", "beta_lo");
    spec.beta_hi = num_field(j, "init_grid", "beta_hi");
    spec.beta_count = int_field(j, "init_grid", "beta_count");
    if (spec.alpha_count < 1 || spec.beta_count < 1)
        throw InputError("config: init_grid counts must be >= 1");
    if (spec.alpha_lo > spec.alpha_hi || spec.beta_lo > spec.beta_hi)
        throw InputError("config: init_grid ranges must satisfy lo <= hi");
    return spec;
}

OptimConfig parse_optim(const json& j) {
    check_keys(j, "optim",
               {"max_iters", "grad_tol", "loss_tol", "armijo_c", "backtrack_factor", "init_step",
                "max_step_beta", "line_search_tol", "line_search_max_evals"});
    OptimConfig cfg;
    cfg.max_iters = int_field_or(j, "optim", "max_iters", cfg.max_iters);
    cfg.grad_tol = num_field_or(j, "optim", "grad_tol", cfg.grad_tol);
    cfg.loss_tol = num_field_or(j, "optim", "loss_tol", cfg.loss_tol);
    cfg.armijo_c = num_field_or(j, "optim", "armijo_c", cfg.armijo_c);
    cfg.backtrack_factor = num_field_or(j, "optim", "backtrack_factor", cfg.backtrack_factor);
    cfg.init_step = num_field_or(j, "optim", "init_step", cfg.init_step);
    cfg.max_step_beta = num_field_or(j, "optim", "max_step_beta", cfg.max_step_beta);
    cfg.line_search_tol = num_field_or(j, "optim", "line_search_tol", cfg.line_search_tol);
    cfg.line_search_max_evals =
        int_field_or(j, "optim", "line_search_max_evals", cfg.line_search_max_evals);
    return cfg;
}

SweepSpec parse_sweep(const json& j) {
    check_keys(j, "sweep", {"alpha_fixed", "beta_lo", "beta_hi", "resolution", "mode"});
    SweepSpec spec;
    spec.alpha_fixed = num_field_or(j, "sweep", "alpha_fixed", 0.0);
    spec.beta_range.first = num_field_or(j, "sweep", "beta_lo", spec.beta_range.first);
    spec.beta_range.second = num_field_or(j, "sweep", "beta_hi", spec.beta_range.second);
    spec.resolution = int_field_or(j, "sweep", "resolution", spec.resolution);
    if (j.contains("mode")) {
        const std::string mode = str_field(j, "sweep", "mode");
        if (mode == "eigen-loss")
            spec.mode = SweepMode::EigenLoss;
        else if (mode == "fixed-coefficient")
            spec.mode = SweepMode::FixedCoefficient;
        else
            throw InputError("config: unknown sweep mode '" + mode + "'");
    }
    if (!(spec.beta_range.first < spec.beta_range.second))
        throw InputError("config: sweep beta range must satisfy lo < hi");
    if (spec.resolution < 2) throw InputError("config: sweep resolution must be >= 2");
    return spec;
}

GedmdSpec parse_gedmd(const json& j) {
    check_keys(j, "gedmd", {"modes", "analytic"});
    GedmdSpec spec;
    if (j.contains("modes")) {
        const json& modes = j.at("modes");
        if (!modes.is_array()) throw InputError("config: field 'modes' in gedmd must be an array");
        spec.run_exact = false;
        spec.run_finite_difference = false;
        for (const json& m : modes) {
            if (!m.is_string()) throw InputError("config: gedmd modes must be strings");
            const std::string name = m.get<std::string>();
            if (name == "exact")
                spec.run_exact = true;
            else if (name == "finite-difference")
                spec.run_finite_difference = true;
            else
                throw InputError("config: unknown gedmd mode '" + name + "'");
        }
    }
    if (j.contains("analytic")) {
        const json& an = j.at("analytic");
        if (!an.is_array()) throw InputError("config: field 'analytic' in gedmd must be an array");
        for (const json& v : an) {
            if (!v.is_array() || v.size() != 2)
                throw InputError("config: gedmd analytic entries must be [re, im] pairs");
            spec.analytic.emplace_back(as_number(v[0], "gedmd", "analytic"),
                                       as_number(v[1], "gedmd", "analytic"));
        }
    }
    return spec;
}

json vec_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

}  // namespace

std::string to_string(SamplingMode mode) {
    return mode == SamplingMode::Regular ? "regular" : "irregular-subset";
}

VectorField SystemSpec::vector_field() const {
    if (type == "klus") return VectorField{KlusSystem{gamma, delta}};
    return VectorField{HarmonicOscillator{omega}};
}

int SystemSpec::state_dim() const { return 2; }

Dictionary ExperimentConfig::build_dictionary() const {
    return build_monomial_dictionary(system.state_dim(), dictionary.max_degree,
                                     dictionary.include_constant);
}

ExperimentConfig parse_config(const json& j) {
    check_keys(j, "config root",
               {"schema_version", "id", "seed", "system", "dictionary", "sampling", "init_grid",
                "optim", "sweep", "gedmd", "output_dir"});
    ExperimentConfig config;
    config.schema_version = int_field(j, "config root", "schema_version");
    if (config.schema_version != 1)
        throw InputError("config: unsupported schema_version " +
                         std::to_string(config.schema_version));
    config.id = str_field(j, "config root", "id");
    if (config.id.empty()) throw InputError("config: id must be non-empty");
    for (const char c : config.id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
            throw InputError("config: id may only contain [A-Za-z0-9_.-]");

    const json& seed = require(j, "config root", "seed");
    if (!seed.is_number_unsigned())
        throw InputError("config: field 'seed' in config root must be a non-negative integer");
    config.seed = seed.get<std::uint64_t>();

    config.system = parse_system(require(j, "config root", "system"));
    config.dictionary = parse_dictionary(require(j, "config root", "dictionary"));
    config.sampling = parse_sampling(require(j, "config root", "sampling"), config.system.state_dim());
    if (j.contains("init_grid")) config.init_grid = parse_init_grid(j.at("init_grid"));
    if (j.contains("optim")) config.optim = parse_optim(j.at("optim"));
    if (j.contains("sweep")) config.sweep = parse_sweep(j.at("sweep"));
    if (j.contains("gedmd")) config.gedmd = parse_gedmd(j.at("gedmd"));
    if (j.contains("output_dir")) config.output_dir = str_field(j, "config root", "output_dir");
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config: JSON parse error: ") + e.what());
    }
    return parse_config(j);
}

nlohmann::json to_json(const ExperimentConfig& config) {
    json j;
    j["schema_version"] = config.schema_version;
    j["id"] = config.id;
    j["seed"] = config.seed;

    json system;
    system["type"] = config.system.type;
    if (config.system.type == "klus") {
        system["gamma"] = config.system.gamma;
        system["delta"] = config.system.delta;
    } else {
        system["omega"] = config.system.omega;
    }
    j["system"] = system;

    j["dictionary"] = {{"max_degree", config.dictionary.max_degree},
                       {"include_constant", config.dictionary.include_constant}};

    json sampling;
    sampling["mode"] = to_string(config.sampling.mode);
    sampling["delta"] = config.sampling.delta;
    sampling["horizon"] = config.sampling.horizon;
    sampling["trajectories"] = config.sampling.trajectories;
    sampling["max_h"] = config.sampling.max_h;
    if (config.sampling.mode == SamplingMode::IrregularSubset)
        sampling["keep_count"] = config.sampling.keep_count;
    if (config.sampling.x0) sampling["x0"] = vec_to_json(*config.sampling.x0);
    if (config.sampling.box_lo) sampling["box_lo"] = vec_to_json(*config.sampling.box_lo);
    if (config.sampling.box_hi) sampling["box_hi"] = vec_to_json(*config.sampling.box_hi);
    j["sampling"] = sampling;

    j["init_grid"] = {{"alpha_lo", config.init_grid.alpha_lo},
                      {"alpha_hi", config.init_grid.alpha_hi},
                      {"alpha_count", config.init_grid.alpha_count},
                      {"beta_lo", config.init_grid.beta_lo},
                      {"beta_hi", config.init_grid.beta_hi},
                      {"beta_count", config.init_grid.beta_count}};

    j["optim"] = {{"max_iters", config.optim.max_iters},
                  {"grad_tol", config.optim.grad_tol},
                  {"loss_tol", config.optim.loss_tol},
                  {"armijo_c", config.optim.armijo_c},
                  {"backtrack_factor", config.optim.backtrack_factor},
                  {"init_step", config.optim.init_step},
                  {"max_step_beta", config.optim.max_step_beta},
                  {"line_search_tol", config.optim.line_search_tol},
                  {"line_search_max_evals", config.optim.line_search_max_evals}};

    j["sweep"] = {{"alpha_fixed", config.sweep.alpha_fixed},
                  {"beta_lo", config.sweep.beta_range.first},
                  {"beta_hi", config.sweep.beta_range.second},
                  {"resolution", config.sweep.resolution},
                  {"mode", to_string(config.sweep.mode)}};

    json modes = json::array();
    if (config.gedmd.run_exact) modes.push_back("exact");
    if (config.gedmd.run_finite_difference) modes.push_back("finite-difference");
    json analytic = json::array();
    for (const std::complex<double>& a : config.gedmd.analytic)
        analytic.push_back(json::array({a.real(), a.imag()}));
    j["gedmd"] = {{"modes", modes}, {"analytic", analytic}};

    j["output_dir"] = config.output_dir;
    return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (const char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string config_hash(const ExperimentConfig& config) {
    // The output directory is presentation plumbing; artifacts must hash the
    // same no matter where they are written.
    nlohmann::json j = to_json(config);
    j.erase("output_dir");
    const std::uint64_t h = fnv1a64(j.dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::pair<double, double>> make_init_grid(const InitGridSpec& spec) {
    const auto line = [](double lo, double hi, int count) {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(count));
        if (count == 1) {
            out.push_back((lo + hi) / 2.0);
            return out;
        }
        const double n = count - 1;
        for (int i = 0; i < count; ++i) out.push_back((lo * (n - i) + hi * i) / n);
        return out;
    };
    const std::vector<double> alphas = line(spec.alpha_lo, spec.alpha_hi, spec.alpha_count);
    const std::vector<double> betas = line(spec.beta_lo, spec.beta_hi, spec.beta_count);
    std::vector<std::pair<double, double>> grid;
    grid.reserve(alphas.size() * betas.size());
    for (const double a : alphas)
        for (const double b : betas) grid.emplace_back(a, b);
    return grid;
}

}  // namespace koopman
