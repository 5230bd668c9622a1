#include "koopman/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>

#include "koopman/csv.hpp"
#include "koopman/errors.hpp"

namespace koopman {

namespace {

// Endpoint-stable grid formula; for lo == -hi the grid mirrors exactly in
// floating point, which the beta-symmetry diagnostics rely on.
double grid_point(double lo, double hi, int resolution, int i) {
    const double n = resolution - 1;
    return (lo * (n - i) + hi * i) / n;
}

void validate_spec(const SweepSpec& spec, const std::optional<Eigen::VectorXcd>& a_fixed,
                   int dict_size) {
    if (!(spec.beta_range.first < spec.beta_range.second))
        throw InputError("sweep_beta: beta range must satisfy lo < hi");
    if (spec.resolution < 2) throw InputError("sweep_beta: resolution must be >= 2");
    if (!std::isfinite(spec.alpha_fixed)) throw InputError("sweep_beta: alpha_fixed must be finite");
    if (spec.mode == SweepMode::FixedCoefficient) {
        if (!a_fixed) throw InputError("sweep_beta: fixed-coefficient mode needs a coefficient vector");
        if (a_fixed->size() != dict_size)
            throw InputError("sweep_beta: coefficient vector has wrong length");
        if (std::abs(a_fixed->norm() - 1.0) > 1e-10)
            throw InputError("sweep_beta: coefficient vector must be unit length");
    }
}

double eval_point(const GramBlocks& blocks, const SweepSpec& spec,
                  const std::optional<Eigen::VectorXcd>& a_fixed, double beta) {
    if (spec.mode == SweepMode::EigenLoss)
        return smallest_eigenpair(assemble_C(blocks, spec.alpha_fixed, beta)).value;
    return fixed_coefficient_loss(blocks, spec.alpha_fixed, beta, *a_fixed);
}

}  // namespace

std::string to_string(SweepMode mode) {
    return mode == SweepMode::EigenLoss ? "eigen-loss" : "fixed-coefficient";
}

double SweepCurve::grid_spacing() const {
    return betas.size() > 1 ? (betas.back() - betas.front()) / (static_cast<double>(betas.size()) - 1)
                            : 0.0;
}

SweepCurve sweep_beta_serial(const GramBlocks& blocks, const SweepSpec& spec,
                             const std::optional<Eigen::VectorXcd>& a_fixed) {
    validate_spec(spec, a_fixed, blocks.dict_size);
    SweepCurve curve;
    curve.mode = spec.mode;
    curve.alpha_fixed = spec.alpha_fixed;
    curve.betas.resize(static_cast<std::size_t>(spec.resolution));
    curve.losses.resize(static_cast<std::size_t>(spec.resolution));
    for (int i = 0; i < spec.resolution; ++i) {
        const double beta = grid_point(spec.beta_range.first, spec.beta_range.second,
                                       spec.resolution, i);
        curve.betas[static_cast<std::size_t>(i)] = beta;
        curve.losses[static_cast<std::size_t>(i)] = eval_point(blocks, spec, a_fixed, beta);
    }
    return curve;
}

SweepCurve sweep_beta(const GramBlocks& blocks, const SweepSpec& spec,
                      const std::optional<Eigen::VectorXcd>& a_fixed) {
    validate_spec(spec, a_fixed, blocks.dict_size);
    SweepCurve curve;
    curve.mode = spec.mode;
    curve.alpha_fixed = spec.alpha_fixed;
    curve.betas.resize(static_cast<std::size_t>(spec.resolution));
    curve.losses.resize(static_cast<std::size_t>(spec.resolution));
    std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < spec.resolution; ++i) {
        try {
            const double beta = grid_point(spec.beta_range.first, spec.beta_range.second,
                                           spec.resolution, i);
            curve.betas[static_cast<std::size_t>(i)] = beta;
            curve.losses[static_cast<std::size_t>(i)] = eval_point(blocks, spec, a_fixed, beta);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return curve;
}

double periodicity_defect(const SweepCurve& curve, double period) {
    if (curve.size() < 2) throw InputError("periodicity_defect: curve too short");
    if (!(period > 0)) throw InputError("periodicity_defect: period must be positive");
    const double lo = curve.betas.front();
    const double hi = curve.betas.back();
    if (hi - lo < 2.0 * period)
        throw InputError("periodicity_defect: period must fit at least twice in the sweep range");

    double max_abs = 0.0;
    for (const double v : curve.losses) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs == 0.0) return 0.0;

    double max_diff = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double shifted = curve.betas[i] + period;
        if (shifted > hi) break;
        // locate the grid cell containing the shifted point
        const auto it = std::upper_bound(curve.betas.begin(), curve.betas.end(), shifted);
        std::size_t j = static_cast<std::size_t>(it - curve.betas.begin());
        if (j == 0) j = 1;
        if (j >= curve.size()) j = curve.size() - 1;
        const double b0 = curve.betas[j - 1];
        const double b1 = curve.betas[j];
        const double w = b1 > b0 ? (shifted - b0) / (b1 - b0) : 0.0;
        const double interp = (1.0 - w) * curve.losses[j - 1] + w * curve.losses[j];
        max_diff = std::max(max_diff, std::abs(interp - curve.losses[i]));
    }
    return max_diff / max_abs;
}

std::pair<double, double> minima_near_truth(const SweepCurve& curve, double beta_true,
                                            double window) {
    if (curve.size() < 2) throw InputError("minima_near_truth: curve too short");
    if (!(window > curve.grid_spacing()))
        throw InputError("minima_near_truth: window must exceed the grid spacing");
    const double lo = beta_true - window;
    const double hi = beta_true + window;
    if (hi < curve.betas.front() || lo > curve.betas.back())
        throw InputError("minima_near_truth: window lies outside the sweep range");

    double best_beta = 0.0;
    double best_loss = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double b = curve.betas[i];
        if (b < lo || b > hi) continue;
        if (curve.losses[i] < best_loss) {
            best_loss = curve.losses[i];
            best_beta = b;
            found = true;
        }
    }
    if (!found) throw InputError("minima_near_truth: no grid point inside the window");
    return {best_beta, best_loss};
}

void write_curve_csv(const SweepCurve& curve, const std::string& dataset_id,
                     const std::string& path, const std::vector<std::string>& metadata) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("write_curve_csv: cannot open " + path);
    for (const std::string& line : metadata) out << "# " << line << '\n';
    out << "beta,loss,mode,alpha_fixed,dataset_id\n";
    const std::string mode = to_string(curve.mode);
    for (std::size_t i = 0; i < curve.size(); ++i)
        out << csv::row(curve.betas[i], curve.losses[i], mode, curve.alpha_fixed, dataset_id)
            << '\n';
    if (!out) throw InputError("write_curve_csv: write failed for " + path);
}

SweepCurve read_curve_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("read_curve_csv: cannot open " + path, 0);
    SweepCurve curve;
    std::string line;
    long line_number = 0;
    bool header_seen = false;
    bool mode_set = false;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (csv::split(line) != std::vector<std::string>{"beta", "loss", "mode", "alpha_fixed",
                                                             "dataset_id"})
                throw ParseError("read_curve_csv: unexpected header", line_number);
            header_seen = true;
            continue;
        }
        const std::vector<std::string> fields = csv::split(line);
        if (fields.size() != 5) throw ParseError("read_curve_csv: expected 5 fields", line_number);
        curve.betas.push_back(csv::parse_double(fields[0], line_number));
        curve.losses.push_back(csv::parse_double(fields[1], line_number));
        if (!mode_set) {
            if (fields[2] == "eigen-loss")
                curve.mode = SweepMode::EigenLoss;
            else if (fields[2] == "fixed-coefficient")
                curve.mode = SweepMode::FixedCoefficient;
            else
                throw ParseError("read_curve_csv: unknown mode '" + fields[2] + "'", line_number);
            curve.alpha_fixed = csv::parse_double(fields[3], line_number);
            mode_set = true;
        }
    }
    if (curve.betas.size() < 2) throw ParseError("read_curve_csv: curve too short", line_number);
    return curve;
}

void write_curve_svg(const SweepCurve& curve, const std::string& path,
                     std::optional<double> beta_true, const std::vector<std::string>& metadata) {
    if (curve.size() < 2) throw InputError("write_curve_svg: curve too short");
    constexpr double width = 840.0, height = 520.0;
    constexpr double ml = 70.0, mr = 20.0, mt = 20.0, mb = 50.0;
    const double plot_w = width - ml - mr;
    const double plot_h = height - mt - mb;

    const double b_lo = curve.betas.front();
    const double b_hi = curve.betas.back();
    constexpr double floor_loss = 1e-16;
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    for (const double v : curve.losses) {
        const double y = std::log10(std::max(v, floor_loss));
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
    }
    if (y_hi - y_lo < 1e-12) y_hi = y_lo + 1.0;

    const auto sx = [&](double b) { return ml + (b - b_lo) / (b_hi - b_lo) * plot_w; };
    const auto sy = [&](double v) {
        const double y = std::log10(std::max(v, floor_loss));
        return mt + (y_hi - y) / (y_hi - y_lo) * plot_h;
    };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("write_curve_svg: cannot open " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    for (const std::string& line : metadata) out << "<!-- " << line << " -->\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w
        << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + plot_h
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml << "\" y=\"" << height - 14 << "\" font-size=\"13\">beta = "
        << csv::fmt(b_lo) << "</text>\n";
    out << "<text x=\"" << ml + plot_w - 120 << "\" y=\"" << height - 14
        << "\" font-size=\"13\">beta = " << csv::fmt(b_hi) << "</text>\n";
    out << "<text x=\"6\" y=\"" << mt + 12 << "\" font-size=\"13\">log10 loss " << csv::fmt(y_hi)
        << "</text>\n";
    out << "<text x=\"6\" y=\"" << mt + plot_h << "\" font-size=\"13\">" << csv::fmt(y_lo)
        << "</text>\n";
    if (beta_true) {
        for (const double marker : {*beta_true, -*beta_true}) {
            if (marker < b_lo || marker > b_hi) continue;
            out << "<line x1=\"" << sx(marker) << "\" y1=\"" << mt << "\" x2=\"" << sx(marker)
                << "\" y2=\"" << mt + plot_h
                << "\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n";
        }
    }
    out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (i) out << ' ';
        out << sx(curve.betas[i]) << ',' << sy(curve.losses[i]);
    }
    out << "\"/>\n</svg>\n";
    if (!out) throw InputError("write_curve_svg: write failed for " + path);
}

}  // namespace koopman
