#include <cmath>
#include <complex>

#include "doctest.h"
#include "fixtures.hpp"
#include "koopman/errors.hpp"
#include "koopman/experiments.hpp"
#include "koopman/gedmd.hpp"

using namespace koopman;

namespace {

Dictionary klus_invariant_dict() {
    return make_dictionary(2, {MultiIndex{{1, 0}}, MultiIndex{{0, 1}}, MultiIndex{{2, 0}}});
}

// Generic sample points (no symmetry, well-conditioned Gram).
std::vector<Eigen::VectorXd> generic_states() {
    std::vector<Eigen::VectorXd> states;
    const double raw[][2] = {{0.3, 1.1},  {-0.7, 0.4}, {1.5, -0.2}, {-1.1, -1.3},
                             {0.9, 0.8},  {0.2, -1.6}, {-1.8, 0.9}, {1.2, 1.4},
                             {-0.4, 0.1}, {0.6, -0.9}};
    for (const auto& p : raw) states.push_back(Eigen::Vector2d(p[0], p[1]));
    return states;
}

double max_distance_to(const Eigen::VectorXcd& eigenvalues,
                       const std::vector<std::complex<double>>& targets) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : targets) best = std::min(best, std::abs(eigenvalues(i) - t));
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

TEST_SUITE("gedmd") {

TEST_CASE("harmonic oscillator, exact mode: spectrum {+-50i}") {
    const Dictionary dict = build_monomial_dictionary(2, 1, false);
    const GeneratorModel model = fit_gedmd(generic_states(), dict, fixtures::harmonic_field());
    REQUIRE(model.eigenvalues.size() == 2);
    // sorted by (Re, Im): -50i first
    CHECK(std::abs(model.eigenvalues(0) - std::complex<double>(0.0, -50.0)) <= 1e-8);
    CHECK(std::abs(model.eigenvalues(1) - std::complex<double>(0.0, 50.0)) <= 1e-8);
    CHECK(model.derivative_mode == DerivativeMode::ExactVectorField);
    CHECK(!model.rank_deficient);

    // L is the analytic generator on {x1, x2}: d/dt (x1, x2) = (-50 x2, 50 x1).
    Eigen::MatrixXd expected(2, 2);
    expected << 0.0, -50.0, 50.0, 0.0;
    CHECK((model.L - expected).norm() <= 1e-8);
}

TEST_CASE("klus system, exact mode: spectrum {gamma, delta, 2 gamma}") {
    const GeneratorModel model =
        fit_gedmd(generic_states(), klus_invariant_dict(), fixtures::klus_field());
    REQUIRE(model.eigenvalues.size() == 3);
    CHECK(std::abs(model.eigenvalues(0) - std::complex<double>(-1.6, 0.0)) <= 1e-8);
    CHECK(std::abs(model.eigenvalues(1) - std::complex<double>(-0.8, 0.0)) <= 1e-8);
    CHECK(std::abs(model.eigenvalues(2) - std::complex<double>(-0.7, 0.0)) <= 1e-8);

    // Rows of L: L x1 = g x1; L x2 = d x2 - d x1^2; L x1^2 = 2 g x1^2.
    Eigen::MatrixXd expected(3, 3);
    expected << -0.8, 0.0, 0.0, 0.0, -0.7, 0.7, 0.0, 0.0, -1.6;
    CHECK((model.L - expected).norm() <= 1e-8);
}

TEST_CASE("eigenpair residuals are tight") {
    const GeneratorModel model =
        fit_gedmd(generic_states(), klus_invariant_dict(), fixtures::klus_field());
    const Eigen::MatrixXcd l = model.L.cast<std::complex<double>>();
    Eigen::EigenSolver<Eigen::MatrixXd> es(model.L);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const Eigen::VectorXcd v = es.eigenvectors().col(i);
        CHECK((l * v - es.eigenvalues()(i) * v).norm() <= 1e-10 * model.L.norm());
    }
}

TEST_CASE("harmonic degree-2 dictionary detects the conserved Hamiltonian") {
    const Dictionary dict = fixtures::harmonic_dict();
    const TransitionDataset dataset = fixtures::harmonic_regular(0.2);
    const GeneratorModel model =
        fit_gedmd(dataset_states(dataset), dict, fixtures::harmonic_field());
    REQUIRE(model.eigenvalues.size() == 5);
    double nearest_zero = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < 5; ++i)
        nearest_zero = std::min(nearest_zero, std::abs(model.eigenvalues(i)));
    CHECK(nearest_zero <= 1e-6);
    // Full analytic spectrum on the degree-2 span: {0, +-50i, +-100i}.
    CHECK(max_distance_to(model.eigenvalues,
                          {{0.0, 0.0}, {0.0, 50.0}, {0.0, -50.0}, {0.0, 100.0}, {0.0, -100.0}}) <=
          1e-6);
}

TEST_CASE("finite-difference mode bias grows with the sampling interval") {
    const Dictionary dict = klus_invariant_dict();
    const std::vector<std::complex<double>> truth = {{-0.8, 0.0}, {-0.7, 0.0}, {-1.6, 0.0}};
    double previous = 0.0;
    for (const double interval : {0.05, 0.25, 0.5}) {
        const TransitionDataset dataset = fixtures::klus_dataset(interval, 20, 4.0);
        const GeneratorModel model = fit_gedmd(dataset, dict);
        const double err = max_distance_to(model.eigenvalues, truth);
        CHECK(err > previous);
        previous = err;
    }
    CHECK(previous > 0.01);  // at interval 0.5 the bias is visible
}

TEST_CASE("finite-difference mode shows spurious eigenvalues at coarse sampling") {
    const TransitionDataset dataset = fixtures::klus_dataset(0.5, 20, 4.0);
    const GeneratorModel model = fit_gedmd(dataset, fixtures::klus_dict());
    const std::vector<std::complex<double>> lattice = klus_eigenvalue_lattice(-0.8, -0.7, 6);
    bool spurious = false;
    for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& l : lattice) best = std::min(best, std::abs(model.eigenvalues(i) - l));
        if (best > 0.05) spurious = true;
    }
    CHECK(spurious);
}

TEST_CASE("fewer samples than dictionary terms is ill-posed") {
    TransitionDataset two_dim;
    two_dim.state_dim = 2;
    TransitionPair p{0, 0.0, 0.5, Eigen::Vector2d(1.0, 0.5), Eigen::Vector2d(0.9, 0.4)};
    two_dim.pairs = {p};
    CHECK_THROWS_AS(fit_gedmd(two_dim, fixtures::klus_dict()), NumericError);
    try {
        fit_gedmd(two_dim, fixtures::klus_dict());
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("ill-posed") != std::string::npos);
    }
}

TEST_CASE("rank-deficient sample sets are flagged") {
    // Five copies of one point: Gram has rank 1 on a 2-term dictionary.
    std::vector<Eigen::VectorXd> states(5, Eigen::Vector2d(1.0, 1.0));
    const Dictionary dict = build_monomial_dictionary(2, 1, false);
    const GeneratorModel model = fit_gedmd(states, dict, fixtures::harmonic_field());
    CHECK(model.rank_deficient);
    CHECK(model.rank == 1);
}

TEST_CASE("input validation") {
    const Dictionary dict = build_monomial_dictionary(2, 1, false);
    CHECK_THROWS_AS(fit_gedmd({}, dict, fixtures::harmonic_field()), InputError);
    CHECK_THROWS_AS(fit_gedmd(TransitionDataset{}, dict), InputError);
    std::vector<Eigen::VectorXd> bad = {Eigen::Vector3d(1, 2, 3)};
    CHECK_THROWS_AS(fit_gedmd(bad, dict, fixtures::harmonic_field()), InputError);
}

TEST_CASE("spectrum_report nearest matches") {
    const Dictionary dict = build_monomial_dictionary(2, 1, false);
    const GeneratorModel model = fit_gedmd(generic_states(), dict, fixtures::harmonic_field());
    const std::vector<std::complex<double>> analytic = {{0.0, 50.0}, {0.0, -50.0}};
    const std::vector<SpectrumRow> rows = spectrum_report(model, analytic);
    REQUIRE(rows.size() == 2);
    for (const SpectrumRow& row : rows) CHECK(row.distance <= 1e-8);
    CHECK(rows[0].nearest_analytic == std::complex<double>(0.0, -50.0));
    CHECK(rows[1].nearest_analytic == std::complex<double>(0.0, 50.0));
    CHECK_THROWS_AS(spectrum_report(model, {}), InputError);
}

TEST_CASE("dataset_states extracts the left endpoints") {
    const TransitionDataset dataset = fixtures::harmonic_regular(0.2);
    const auto states = dataset_states(dataset);
    REQUIRE(states.size() == dataset.pairs.size());
    for (std::size_t i = 0; i < states.size(); ++i) CHECK(states[i] == dataset.pairs[i].x_before);
}

}  // TEST_SUITE
