#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "otflow/ode.hpp"

using namespace otflow;

TEST_CASE("euler with a constant field is exact") {
    const ConstantField field(Vector{2.0, -1.0});
    const Trajectory traj =
        integrate_forward(field, Vector{0.0, 0.0}, 8, Integrator::euler);
    for (int k = 0; k <= 8; ++k) {
        const double t = k / 8.0;
        CHECK(traj.state(k)[0] == doctest::Approx(2.0 * t).epsilon(1e-15));
        CHECK(traj.state(k)[1] == doctest::Approx(-1.0 * t).epsilon(1e-15));
    }
}

TEST_CASE("K=1 euler gives one explicit step") {
    const ConstantField field(Vector{3.0});
    const Trajectory traj =
        integrate_forward(field, Vector{1.0}, 1, Integrator::euler);
    CHECK(traj.steps() == 1);
    CHECK(traj.state(1)[0] == 4.0);
}

TEST_CASE("rk4 solves exponential decay to 1e-6") {
    // v(x) = -x from x0 = 1: x(1) = exp(-1).
    Matrix a(1, 1);
    a(0, 0) = -1.0;
    const AffineField field(a, Vector{0.0});
    const Trajectory traj =
        integrate_forward(field, Vector{1.0}, 100, Integrator::rk4);
    CHECK(std::fabs(traj.end()[0] - std::exp(-1.0)) < 1e-6);
}

TEST_CASE("rk4 terminal error scales at fourth order") {
    Matrix a(1, 1);
    a(0, 0) = -1.0;
    const AffineField field(a, Vector{0.0});
    std::vector<double> errors;
    for (int k : {10, 20, 40, 80}) {
        const Trajectory traj =
            integrate_forward(field, Vector{1.0}, k, Integrator::rk4);
        errors.push_back(std::fabs(traj.end()[0] - std::exp(-1.0)));
    }
    // log-log slope between successive halvings of dt
    for (std::size_t i = 1; i < errors.size(); ++i) {
        const double slope = std::log2(errors[i - 1] / errors[i]);
        CHECK(slope > 3.5);
        CHECK(slope < 4.5);
    }
}

TEST_CASE("backward integration stores x1 bit-exactly") {
    const ConstantField c(Vector{1.5, 0.5});
    const Vector x1{42.0, -7.0};
    const Trajectory traj = integrate_backward(c, x1, 16, Integrator::euler);
    CHECK(traj.state(16)[0] == 42.0);
    CHECK(traj.state(16)[1] == -7.0);
    CHECK(traj.state(0)[0] == doctest::Approx(42.0 - 1.5).epsilon(1e-15));
    CHECK(traj.state(0)[1] == doctest::Approx(-7.0 - 0.5).epsilon(1e-15));
}

TEST_CASE("backward rk4 inverts exponential decay") {
    Matrix a(1, 1);
    a(0, 0) = -1.0;
    const AffineField field(a, Vector{0.0});
    const Trajectory traj =
        integrate_backward(field, Vector{std::exp(-1.0)}, 100, Integrator::rk4);
    CHECK(std::fabs(traj.start()[0] - 1.0) < 1e-6);
}

TEST_CASE("forward after backward returns x1 for affine fields") {
    Matrix a(2, 2);
    a(0, 0) = -0.5;
    a(0, 1) = 0.2;
    a(1, 0) = 0.2;
    a(1, 1) = -1.0;
    const AffineField field(a, Vector{0.3, -0.1});
    const Vector x1{1.0, 2.0};
    const Trajectory back = integrate_backward(field, x1, 200, Integrator::rk4);
    const Trajectory fwd =
        integrate_forward(field, back.start(), 200, Integrator::rk4);
    CHECK(norm2(fwd.end() - x1) < 1e-8);
}

TEST_CASE("euler self-consistency: discrete velocities equal the field") {
    Matrix a(2, 2);
    a(0, 0) = -0.3;
    a(1, 1) = 0.4;
    const AffineField field(a, Vector{0.1, 0.0});
    const Trajectory traj =
        integrate_forward(field, Vector{1.0, -1.0}, 25, Integrator::euler);
    for (int k = 0; k < traj.steps(); ++k) {
        const Vector v = field.eval(traj.state(k), traj.time(k));
        for (int i = 0; i < 2; ++i) {
            const double fd = (traj.state(k + 1)[i] - traj.state(k)[i]) * 25.0;
            CHECK(fd == doctest::Approx(v[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("endpoint modes agree for constant fields and share endpoints") {
    const ConstantField c(Vector{1.0});
    const Vector x1{3.0};
    const Trajectory rev = reference_endpoint_trajectory(
        c, x1, 10, Integrator::euler, EndpointMode::reversed_backward);
    const Trajectory cor = reference_endpoint_trajectory(
        c, x1, 10, Integrator::euler, EndpointMode::forward_corrected);
    for (int k = 0; k <= 10; ++k) {
        CHECK(rev.state(k)[0] == doctest::Approx(cor.state(k)[0]).epsilon(1e-15));
    }

    Matrix a(1, 1);
    a(0, 0) = -1.0;
    const AffineField decay(a, Vector{0.0});
    const Trajectory rev2 = reference_endpoint_trajectory(
        decay, Vector{0.5}, 50, Integrator::euler, EndpointMode::reversed_backward);
    const Trajectory cor2 = reference_endpoint_trajectory(
        decay, Vector{0.5}, 50, Integrator::euler, EndpointMode::forward_corrected);
    // Shared endpoints, interior states differ by integrator asymmetry.
    CHECK(rev2.state(0)[0] == cor2.state(0)[0]);
    CHECK(rev2.state(50)[0] == 0.5);
    CHECK(cor2.state(50)[0] == 0.5);
    double max_gap = 0.0;
    for (int k = 1; k < 50; ++k) {
        max_gap = std::max(max_gap, std::fabs(rev2.state(k)[0] - cor2.state(k)[0]));
    }
    CHECK(max_gap > 0.0);
    CHECK(max_gap < 0.05);  // O(dt) agreement
}

TEST_CASE("divergent fields abort with NonFiniteState") {
    // v(x) = x^2 blows up from x0 = 3 well before t = 1.
    const LambdaField field(1, "quadratic-growth", [](const Vector& x, double) {
        return Vector{x[0] * x[0]};
    });
    CHECK_THROWS_AS(integrate_forward(field, Vector{3.0}, 400, Integrator::euler),
                    NonFiniteState);
}

TEST_CASE("straight curve sampling") {
    const CurveSpec line = CurveSpec::straight(Vector{0.0}, Vector{1.0});
    const Trajectory traj = line.sample(4);
    for (int k = 0; k <= 4; ++k) {
        CHECK(traj.state(k)[0] == doctest::Approx(k / 4.0).epsilon(1e-15));
    }
}

TEST_CASE("reparameterized straight curve substitutes sigma") {
    const CurveSpec line = CurveSpec::straight(Vector{0.0}, Vector{1.0});
    // sigma(t) = t^2 given on the sampling grid
    std::vector<double> sigma;
    for (int j = 0; j <= 4; ++j) sigma.push_back((j / 4.0) * (j / 4.0));
    const Trajectory traj = line.with_reparameterization(sigma).sample(4);
    CHECK(traj.state(0)[0] == doctest::Approx(0.0));
    CHECK(traj.state(1)[0] == doctest::Approx(0.0625));
    CHECK(traj.state(2)[0] == doctest::Approx(0.25));
    CHECK(traj.state(3)[0] == doctest::Approx(0.5625));
    CHECK(traj.state(4)[0] == doctest::Approx(1.0));
}

TEST_CASE("bad reparameterizations are rejected") {
    const CurveSpec line = CurveSpec::straight(Vector{0.0}, Vector{1.0});
    CHECK_THROWS_AS(line.with_reparameterization({0.0, 0.5, 0.4, 1.0}),
                    BadReparameterization);
    CHECK_THROWS_AS(line.with_reparameterization({0.1, 0.5, 1.0}),
                    BadReparameterization);
    CHECK_THROWS_AS(line.with_reparameterization({0.0}), BadReparameterization);
}

TEST_CASE("quarter arc length approaches pi/2") {
    const CurveSpec arc =
        CurveSpec::arc(Vector{0.0, 0.0}, 1.0, 0.0, 1.5707963267948966,
                       Vector{1.0, 0.0}, Vector{0.0, 1.0});
    const Trajectory traj = arc.sample(1000);
    CHECK(std::fabs(traj.path_length() - 1.5707963267948966) < 1e-4);
}

TEST_CASE("polyline samples at constant speed") {
    const CurveSpec l_path = CurveSpec::polyline(
        {Vector{0.0, 0.0}, Vector{1.0, 0.0}, Vector{1.0, 1.0}});
    const Trajectory traj = l_path.sample(4);
    CHECK(traj.state(1)[0] == doctest::Approx(0.5));
    CHECK(traj.state(1)[1] == doctest::Approx(0.0));
    CHECK(traj.state(2)[0] == doctest::Approx(1.0));
    CHECK(traj.state(2)[1] == doctest::Approx(0.0));
    CHECK(traj.state(3)[1] == doctest::Approx(0.5));
    CHECK(traj.path_length() == doctest::Approx(2.0));
}
