#include "koopman/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "koopman/csv.hpp"
#include "koopman/errors.hpp"
#include "koopman/rng.hpp"

namespace koopman {

int VectorField::state_dim() const {
    if (std::holds_alternative<CustomField>(kind)) return std::get<CustomField>(kind).state_dim;
    return 2;
}

void VectorField::eval(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    if (const auto* klus = std::get_if<KlusSystem>(&kind)) {
        out[0] = klus->gamma * x[0];
        out[1] = klus->delta * (x[1] - x[0] * x[0]);
    } else if (const auto* osc = std::get_if<HarmonicOscillator>(&kind)) {
        out[0] = -osc->omega * x[1];
        out[1] = osc->omega * x[0];
    } else {
        std::get<CustomField>(kind).eval(x, out);
    }
}

std::string VectorField::name() const {
    if (std::holds_alternative<KlusSystem>(kind)) return "klus";
    if (std::holds_alternative<HarmonicOscillator>(kind)) return "harmonic";
    return "custom";
}

namespace {

void check_strictly_increasing(const std::vector<double>& t) {
    for (std::size_t k = 1; k < t.size(); ++k)
        if (!(t[k] > t[k - 1])) throw InputError("time grid must be strictly increasing");
}

// One RK4 step of size h, in place.
void rk4_step(const VectorField& field, double h, Eigen::VectorXd& y, Eigen::VectorXd& k1,
              Eigen::VectorXd& k2, Eigen::VectorXd& k3, Eigen::VectorXd& k4,
              Eigen::VectorXd& tmp) {
    field.eval(y, k1);
    tmp = y + (h / 2) * k1;
    field.eval(tmp, k2);
    tmp = y + (h / 2) * k2;
    field.eval(tmp, k3);
    tmp = y + h * k3;
    field.eval(tmp, k4);
    y += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

}  // namespace

Trajectory integrate(const VectorField& field, const Eigen::VectorXd& x0,
                     const std::vector<double>& t_grid, int substeps_per_interval) {
    if (t_grid.size() < 2) throw InputError("integrate: need at least 2 time points");
    check_strictly_increasing(t_grid);
    if (substeps_per_interval < 1) throw InputError("integrate: substeps must be >= 1");
    const int d = field.state_dim();
    if (x0.size() != d) throw InputError("integrate: x0 has wrong dimension");

    Trajectory traj;
    traj.times = t_grid;
    traj.states.reserve(t_grid.size());
    traj.states.push_back(x0);

    Eigen::VectorXd y = x0, k1(d), k2(d), k3(d), k4(d), tmp(d);
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        const double h = (t_grid[k] - t_grid[k - 1]) / substeps_per_interval;
        for (int s = 0; s < substeps_per_interval; ++s)
            rk4_step(field, h, y, k1, k2, k3, k4, tmp);
        if (!y.allFinite())
            throw NumericError("integration diverged at time step " + std::to_string(k) +
                               " (t = " + csv::fmt(t_grid[k]) + ")");
        traj.states.push_back(y);
    }
    return traj;
}

Trajectory sample_regular(const VectorField& field, const Eigen::VectorXd& x0, double delta,
                          double horizon, int substeps) {
    if (delta <= 0) throw InputError("sample_regular: delta must be positive");
    if (horizon < delta) throw InputError("sample_regular: horizon must be >= delta");
    const int n_intervals = static_cast<int>(std::floor(horizon / delta + 1e-12));
    std::vector<double> t_grid(static_cast<std::size_t>(n_intervals) + 1);
    for (int k = 0; k <= n_intervals; ++k) t_grid[static_cast<std::size_t>(k)] = k * delta;
    return integrate(field, x0, t_grid, substeps);
}

Trajectory subsample_irregular(const Trajectory& traj, int keep_count, std::uint64_t seed) {
    const int n = static_cast<int>(traj.size());
    if (keep_count < 2) throw InputError("subsample_irregular: keep_count must be >= 2");
    if (keep_count > n) throw InputError("subsample_irregular: keep_count exceeds trajectory length");

    // Partial Fisher-Yates: the first keep_count slots are a uniform sample
    // without replacement.
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    for (int i = 0; i < keep_count; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(keep_count));
    std::sort(idx.begin(), idx.end());

    Trajectory out;
    out.times.reserve(idx.size());
    out.states.reserve(idx.size());
    for (int i : idx) {
        out.times.push_back(traj.times[static_cast<std::size_t>(i)]);
        out.states.push_back(traj.states[static_cast<std::size_t>(i)]);
    }
    return out;
}

TransitionDataset build_dataset(const std::vector<Trajectory>& trajs) {
    if (trajs.empty()) throw InputError("build_dataset: no trajectories");
    TransitionDataset ds;
    ds.state_dim = trajs[0].state_dim();
    for (std::size_t t = 0; t < trajs.size(); ++t) {
        const Trajectory& traj = trajs[t];
        if (traj.size() < 2) throw InputError("build_dataset: trajectory has fewer than 2 points");
        if (traj.state_dim() != ds.state_dim)
            throw InputError("build_dataset: mixed state dimensions");
        for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
            ds.pairs.push_back(TransitionPair{static_cast<int>(t), traj.times[k], traj.times[k + 1],
                                              traj.states[k], traj.states[k + 1]});
        }
    }
    return ds;
}

std::vector<Eigen::VectorXd> sample_initial_states(int count, const Eigen::VectorXd& box_lo,
                                                   const Eigen::VectorXd& box_hi,
                                                   std::uint64_t seed) {
    if (count < 0) throw InputError("sample_initial_states: negative count");
    if (box_lo.size() != box_hi.size())
        throw InputError("sample_initial_states: box bounds dimension mismatch");
    for (Eigen::Index j = 0; j < box_lo.size(); ++j)
        if (!(box_lo[j] < box_hi[j]))
            throw InputError("sample_initial_states: degenerate box (lo must be < hi)");

    Rng rng(seed);
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd x(box_lo.size());
        for (Eigen::Index j = 0; j < box_lo.size(); ++j) x[j] = rng.uniform(box_lo[j], box_hi[j]);
        out.push_back(std::move(x));
    }
    return out;
}

void write_dataset(const TransitionDataset& dataset, const std::string& path,
                   const std::vector<std::string>& metadata) {
    std::ofstream out(path, std::ios::binary);  // binary: '\n' endings everywhere
    if (!out) throw InputError("write_dataset: cannot open " + path);
    for (const auto& line : metadata) out << "# " << line << "\n";
    const int d = dataset.state_dim;
    out << "traj_id,t_before,t_after";
    for (int j = 1; j <= d; ++j) out << ",x_before_" << j;
    for (int j = 1; j <= d; ++j) out << ",x_after_" << j;
    out << "\n";
    for (const auto& p : dataset.pairs) {
        out << p.traj_id << ',' << csv::fmt(p.t_before) << ',' << csv::fmt(p.t_after);
        for (int j = 0; j < d; ++j) out << ',' << csv::fmt(p.x_before[j]);
        for (int j = 0; j < d; ++j) out << ',' << csv::fmt(p.x_after[j]);
        out << "\n";
    }
    if (!out) throw NumericError("write_dataset: write failed for " + path);
}

TransitionDataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("read_dataset: cannot open " + path);

    TransitionDataset ds;
    std::string line;
    long line_no = 0;
    bool header_seen = false;
    int d = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = csv::split(line);
        if (!header_seen) {
            if (fields.size() < 5 || fields[0] != "traj_id" || fields[1] != "t_before" ||
                fields[2] != "t_after")
                throw ParseError("read_dataset: bad header", line_no);
            const std::size_t rest = fields.size() - 3;
            if (rest % 2 != 0) throw ParseError("read_dataset: odd state column count", line_no);
            d = static_cast<int>(rest / 2);
            for (int j = 0; j < d; ++j) {
                if (fields[static_cast<std::size_t>(3 + j)] != "x_before_" + std::to_string(j + 1))
                    throw ParseError("read_dataset: missing column x_before_" + std::to_string(j + 1),
                                     line_no);
                if (fields[static_cast<std::size_t>(3 + d + j)] != "x_after_" + std::to_string(j + 1))
                    throw ParseError("read_dataset: missing column x_after_" + std::to_string(j + 1),
                                     line_no);
            }
            ds.state_dim = d;
            header_seen = true;
            continue;
        }
        if (fields.size() != static_cast<std::size_t>(3 + 2 * d))
            throw ParseError("read_dataset: wrong field count", line_no);
        TransitionPair p;
        p.traj_id = static_cast<int>(csv::parse_long(fields[0], line_no));
        p.t_before = csv::parse_double(fields[1], line_no);
        p.t_after = csv::parse_double(fields[2], line_no);
        if (!(p.t_after - p.t_before > 0))
            throw ParseError("read_dataset: non-positive time interval", line_no);
        p.x_before.resize(d);
        p.x_after.resize(d);
        for (int j = 0; j < d; ++j) {
            p.x_before[j] = csv::parse_double(fields[static_cast<std::size_t>(3 + j)], line_no);
            p.x_after[j] = csv::parse_double(fields[static_cast<std::size_t>(3 + d + j)], line_no);
        }
        ds.pairs.push_back(std::move(p));
    }
    if (!header_seen) throw ParseError("read_dataset: no header row", line_no);
    return ds;
}

}  // namespace koopman
