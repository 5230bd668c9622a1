#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "koopman/errors.hpp"
#include "koopman/simulation.hpp"

using namespace koopman;

namespace {

double klus_endpoint_error(int substeps) {
    const Trajectory traj =
        integrate(fixtures::klus_field(), Eigen::Vector2d(1.0, 0.0), {0.0, 1.0}, substeps);
    return std::abs(traj.states.back()(0) - std::exp(-0.8));
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("klus x1 closed form") {
    CHECK(klus_endpoint_error(100) <= 1e-8);
}

TEST_CASE("klus x2 closed form") {
    // x2(t) = (x2(0) - A) e^{dt} + A e^{2gt},  A = d x1(0)^2 / (d - 2g)
    const double g = -0.8, d = -0.7;
    const Eigen::Vector2d x0(1.3, -0.4);
    const Trajectory traj = integrate(fixtures::klus_field(), x0, {0.0, 0.5, 1.0}, 200);
    const double A = d * x0(0) * x0(0) / (d - 2.0 * g);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double t = traj.times[k];
        const double expect = (x0(1) - A) * std::exp(d * t) + A * std::exp(2.0 * g * t);
        CHECK(std::abs(traj.states[k](1) - expect) <= 1e-8);
    }
}

TEST_CASE("rk4 order: halving the step cuts the error ~16x") {
    const double e1 = klus_endpoint_error(25);
    const double e2 = klus_endpoint_error(50);
    const double ratio = e1 / e2;
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("harmonic oscillator returns after one period") {
    const double period = 2.0 * M_PI / 50.0;
    const Trajectory traj =
        integrate(fixtures::harmonic_field(), Eigen::Vector2d(1.0, 0.0), {0.0, period}, 1000);
    CHECK((traj.states.back() - Eigen::Vector2d(1.0, 0.0)).norm() <= 1e-6);
}

TEST_CASE("harmonic oscillator conserves the Hamiltonian") {
    // h = 2e-4 over horizon 4: RK4's energy drift stays below 1e-8 relative.
    const Trajectory traj = sample_regular(fixtures::harmonic_field(), Eigen::Vector2d(1.0, 0.0),
                                           0.2, 4.0, 1000);
    const double h0 = 0.5 * traj.states.front().squaredNorm();
    for (const Eigen::VectorXd& x : traj.states) {
        const double h = 0.5 * x.squaredNorm();
        CHECK(std::abs(h - h0) / h0 <= 1e-8);
    }
}

TEST_CASE("integrate input validation") {
    const VectorField field = fixtures::klus_field();
    const Eigen::Vector2d x0(1.0, 0.0);
    CHECK_THROWS_AS(integrate(field, x0, {0.0}, 10), InputError);
    CHECK_THROWS_AS(integrate(field, x0, {0.0, 1.0, 0.5}, 10), InputError);
    CHECK_THROWS_AS(integrate(field, x0, {0.0, 1.0}, 0), InputError);
    CHECK_THROWS_AS(integrate(field, Eigen::Vector3d(1, 2, 3), {0.0, 1.0}, 10), InputError);
}

TEST_CASE("integration divergence names the step") {
    // x' = x^2 from a huge start overflows within the first interval.
    CustomField blowup{1, [](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
                           out = x.array().square();
                       }};
    const VectorField field{blowup};
    try {
        integrate(field, Eigen::VectorXd::Constant(1, 1e200), {0.0, 1.0}, 4);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("sample_regular grid sizes") {
    const VectorField field = fixtures::harmonic_field();
    const Eigen::Vector2d x0(1.0, 0.0);
    CHECK(sample_regular(field, x0, 0.2, 4.0, 10).size() == 21);
    CHECK(sample_regular(field, x0, 0.01, 4.0, 1).size() == 401);
    CHECK_THROWS_AS(sample_regular(field, x0, 1.0, 0.5, 10), InputError);
    CHECK_THROWS_AS(sample_regular(field, x0, 0.0, 1.0, 10), InputError);
}

TEST_CASE("subsample_irregular determinism and shape") {
    const Trajectory fine = sample_regular(fixtures::harmonic_field(), Eigen::Vector2d(1.0, 0.0),
                                           0.01, 4.0, 1);
    REQUIRE(fine.size() == 401);
    const Trajectory sub1 = subsample_irregular(fine, 20, 77);
    const Trajectory sub2 = subsample_irregular(fine, 20, 77);
    REQUIRE(sub1.size() == 20);
    CHECK(sub1.times == sub2.times);
    for (std::size_t k = 0; k < sub1.size(); ++k) CHECK(sub1.states[k] == sub2.states[k]);

    // Strictly increasing, all drawn from the fine grid.
    const std::set<double> fine_times(fine.times.begin(), fine.times.end());
    for (std::size_t k = 0; k + 1 < sub1.size(); ++k) CHECK(sub1.times[k] < sub1.times[k + 1]);
    for (double t : sub1.times) CHECK(fine_times.count(t) == 1);

    // A different seed gives a different subset.
    const Trajectory sub3 = subsample_irregular(fine, 20, 78);
    CHECK(sub1.times != sub3.times);
}

TEST_CASE("subsample_irregular produces at least two distinct interval lengths") {
    const Trajectory fine = sample_regular(fixtures::harmonic_field(), Eigen::Vector2d(1.0, 0.0),
                                           0.01, 4.0, 1);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Trajectory sub = subsample_irregular(fine, 20, seed);
        std::set<long> intervals;  // rounded to the fine grid to ignore float fuzz
        for (std::size_t k = 0; k + 1 < sub.size(); ++k)
            intervals.insert(std::lround((sub.times[k + 1] - sub.times[k]) / 0.01));
        CHECK(intervals.size() >= 2);
    }
}

TEST_CASE("subsample_irregular edge cases") {
    const Trajectory fine = sample_regular(fixtures::harmonic_field(), Eigen::Vector2d(1.0, 0.0),
                                           0.2, 1.0, 5);
    const Trajectory all = subsample_irregular(fine, static_cast<int>(fine.size()), 5);
    CHECK(all.times == fine.times);
    CHECK_THROWS_AS(subsample_irregular(fine, static_cast<int>(fine.size()) + 1, 5), InputError);
    CHECK_THROWS_AS(subsample_irregular(fine, 1, 5), InputError);
}

TEST_CASE("build_dataset pair bookkeeping") {
    const VectorField field = fixtures::klus_field();
    std::vector<Trajectory> trajs;
    for (int i = 0; i < 20; ++i) {
        const Eigen::Vector2d x0(0.1 * (i + 1), -0.05 * i);
        trajs.push_back(sample_regular(field, x0, 0.2, 4.0, 10));
    }
    const TransitionDataset dataset = build_dataset(trajs);
    CHECK(dataset.pair_count() == 400);

    // Pairs stay within one trajectory and consecutive in time.
    for (const TransitionPair& p : dataset.pairs) {
        CHECK(p.dt() > 0.0);
        const Trajectory& traj = trajs[static_cast<std::size_t>(p.traj_id)];
        bool found = false;
        for (std::size_t k = 0; k + 1 < traj.size(); ++k)
            if (traj.times[k] == p.t_before && traj.times[k + 1] == p.t_after) found = true;
        CHECK(found);
    }
}

TEST_CASE("build_dataset edge cases") {
    const VectorField field = fixtures::klus_field();
    const Trajectory two = sample_regular(field, Eigen::Vector2d(1.0, 0.0), 1.0, 1.0, 10);
    REQUIRE(two.size() == 2);
    CHECK(build_dataset({two}).pair_count() == 1);
    CHECK_THROWS_AS(build_dataset({}), InputError);

    Trajectory single;
    single.times = {0.0};
    single.states = {Eigen::Vector2d(1.0, 0.0)};
    CHECK_THROWS_AS(build_dataset({single}), InputError);
}

TEST_CASE("sample_initial_states") {
    const Eigen::Vector2d lo(-2.0, -2.0), hi(2.0, 2.0);
    const auto pts = sample_initial_states(20, lo, hi, 99);
    REQUIRE(pts.size() == 20);
    for (const Eigen::VectorXd& p : pts) {
        CHECK(p(0) >= -2.0);
        CHECK(p(0) <= 2.0);
        CHECK(p(1) >= -2.0);
        CHECK(p(1) <= 2.0);
    }
    CHECK(sample_initial_states(0, lo, hi, 99).empty());

    const auto rerun = sample_initial_states(20, lo, hi, 99);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(pts[i] == rerun[i]);

    CHECK_THROWS_AS(sample_initial_states(3, hi, lo, 99), InputError);
    CHECK_THROWS_AS(sample_initial_states(3, lo, lo, 99), InputError);
}

TEST_CASE("dataset csv round trip") {
    const TransitionDataset dataset = fixtures::harmonic_irregular(7);
    const std::string path = "test_dataset_roundtrip.csv";
    write_dataset(dataset, path, {"seed: 7"});
    const TransitionDataset back = read_dataset(path);
    REQUIRE(back.pair_count() == dataset.pair_count());
    CHECK(back.state_dim == dataset.state_dim);
    for (int n = 0; n < dataset.pair_count(); ++n) {
        const TransitionPair& a = dataset.pairs[static_cast<std::size_t>(n)];
        const TransitionPair& b = back.pairs[static_cast<std::size_t>(n)];
        CHECK(a.traj_id == b.traj_id);
        CHECK(a.t_before == b.t_before);
        CHECK(a.t_after == b.t_after);
        CHECK(a.x_before == b.x_before);
        CHECK(a.x_after == b.x_after);
    }
    std::filesystem::remove(path);
}

TEST_CASE("dataset csv rejects malformed input") {
    const std::string path = "test_dataset_malformed.csv";

    {
        std::ofstream out(path);
        out << "traj_id,t_before,t_after,x_before_1,x_before_2,x_after_1,x_after_2\n";
        out << "0,0.0,0.1,1.0,2.0\n";  // missing columns
    }
    CHECK_THROWS_AS(read_dataset(path), ParseError);

    {
        std::ofstream out(path);
        out << "traj_id,t_before,t_after,x_before_1,x_before_2,x_after_1,x_after_2\n";
        out << "0,0.5,0.5,1.0,2.0,3.0,4.0\n";  // dt = 0
    }
    CHECK_THROWS(read_dataset(path));

    {
        std::ofstream out(path);
        out << "traj_id,t_before,t_after,x_before_1,x_before_2,x_after_1,x_after_2\n";
        out << "0,0.0,oops,1.0,2.0,3.0,4.0\n";
    }
    try {
        read_dataset(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }

    CHECK_THROWS_AS(read_dataset("no_such_file_anywhere.csv"), InputError);
    std::filesystem::remove(path);
}

}  // TEST_SUITE
