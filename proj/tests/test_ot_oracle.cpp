#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "otflow/metrics.hpp"
#include "otflow/ode.hpp"
#include "otflow/ot_oracle.hpp"
#include "otflow/parallel.hpp"

using namespace otflow;

namespace {

SpdMatrix random_cov(int d, RngStream& rng) {
    Matrix b(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b(i, j) = 0.4 * rng.normal();
    Matrix m = b.transposed() * b;
    for (int i = 0; i < d; ++i) m(i, i) += 1.0;
    return SpdMatrix(std::move(m));
}

// Independent 1-D oracle: the increasing (quantile) map between Gaussians is
// x -> m1 + (s1/s0)(x - m0); its Monte Carlo cost estimates W2^2 directly.
double quantile_cost_1d(double m0, double s0, double m1, double s1,
                        std::uint64_t seed, int n) {
    RngStream rng(seed, 0);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = m0 + s0 * rng.normal();
        const double tx = m1 + (s1 / s0) * (x - m0);
        total += (tx - x) * (tx - x);
    }
    return total / n;
}

}  // namespace

TEST_CASE("w2 is zero iff the Gaussians match") {
    RngStream rng(1, 0);
    const Gaussian g(Vector{0.5, -0.25}, random_cov(2, rng));
    CHECK(gaussian_w2_squared(g, g) == doctest::Approx(0.0).epsilon(1e-12));

    const Gaussian h(Vector{0.5, 0.75}, g.cov);
    CHECK(gaussian_w2_squared(g, h) > 0.0);
}

TEST_CASE("pure translation costs the squared mean shift") {
    RngStream rng(2, 0);
    const SpdMatrix cov = random_cov(3, rng);
    const Gaussian g0(Vector{0.0, 0.0, 0.0}, cov);
    const Gaussian g1(Vector{1.0, 2.0, -2.0}, cov);
    CHECK(gaussian_w2_squared(g0, g1) == doctest::Approx(9.0).epsilon(1e-10));
}

TEST_CASE("1-D cost matches the quantile-coupling oracle") {
    // sigma0=1, sigma1=2, means zero: (s1-s0)^2 = 1.
    const Gaussian g0(Vector{0.0}, SpdMatrix::from_diag(Vector{1.0}));
    const Gaussian g1(Vector{0.0}, SpdMatrix::from_diag(Vector{4.0}));
    const double w2 = gaussian_w2_squared(g0, g1);
    CHECK(w2 == doctest::Approx(1.0).epsilon(1e-10));

    const double mc = quantile_cost_1d(0.0, 1.0, 0.0, 2.0, 99, 200000);
    CHECK(std::fabs(mc - w2) / w2 < 0.02);
}

TEST_CASE("brenier map on identical Gaussians is the identity") {
    RngStream rng(3, 0);
    const Gaussian g(Vector{1.0, -1.0}, random_cov(2, rng));
    const AffineMap t = brenier_map(g, g);
    CHECK((t.matrix - Matrix::identity(2)).frobenius() < 1e-8);
    CHECK(norm2(t.offset) < 1e-8);
}

TEST_CASE("1-D brenier map is the scalar ratio") {
    const Gaussian g0(Vector{0.0}, SpdMatrix::from_diag(Vector{1.0}));
    const Gaussian g1(Vector{0.0}, SpdMatrix::from_diag(Vector{4.0}));
    const AffineMap t = brenier_map(g0, g1);
    CHECK(t.matrix(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(t.apply(Vector{1.0})[0] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("brenier map pushes the covariance forward, d=10") {
    RngStream rng(4, 0);
    const Gaussian g0(Vector(10, 0.0), random_cov(10, rng));
    Vector m1(10);
    for (int i = 0; i < 10; ++i) m1[i] = rng.normal();
    const Gaussian g1(std::move(m1), random_cov(10, rng));

    const AffineMap t = brenier_map(g0, g1);
    const Matrix pushed = t.matrix * g0.cov.mat() * t.matrix.transposed();
    CHECK((pushed - g1.cov.mat()).frobenius() / g1.cov.mat().frobenius() < 1e-8);
}

TEST_CASE("monte carlo pushforward cost matches w2 within 1 percent, d=10") {
    RngStream rng(5, 0);
    const Gaussian g0(Vector(10, 0.0), random_cov(10, rng));
    Vector m1(10);
    for (int i = 0; i < 10; ++i) m1[i] = rng.normal();
    m1 *= 5.0 / norm2(m1);
    const Gaussian g1(std::move(m1), random_cov(10, rng));

    const double w2 = gaussian_w2_squared(g0, g1);
    const AffineMap t = brenier_map(g0, g1);

    const int n = 100000;
    RngStream sample_rng(6, 0);
    std::vector<Vector> xs;
    xs.reserve(n);
    for (int i = 0; i < n; ++i) xs.push_back(g0.sample(sample_rng));
    const double mc = par::chunked_sum(n, 1024, [&](std::size_t i) {
                          return norm2_sq(t.apply(xs[i]) - xs[i]);
                      }) /
                      n;
    CHECK(std::fabs(mc - w2) / w2 < 0.01);
}

TEST_CASE("displacement interpolation endpoints are exact") {
    RngStream rng(7, 0);
    const Gaussian g0(Vector{0.0, 0.0}, random_cov(2, rng));
    const Gaussian g1(Vector{3.0, 1.0}, random_cov(2, rng));
    const Gaussian at0 = displacement_interpolation(g0, g1, 0.0);
    const Gaussian at1 = displacement_interpolation(g0, g1, 1.0);
    CHECK(norm2(at0.mean - g0.mean) == 0.0);
    CHECK((at0.cov.mat() - g0.cov.mat()).frobenius() == 0.0);
    CHECK(norm2(at1.mean - g1.mean) == 0.0);
    CHECK((at1.cov.mat() - g1.cov.mat()).frobenius() == 0.0);
}

TEST_CASE("pure translation interpolates the mean, keeps the covariance") {
    RngStream rng(8, 0);
    const SpdMatrix cov = random_cov(2, rng);
    const Gaussian g0(Vector{0.0, 0.0}, cov);
    const Gaussian g1(Vector{2.0, -4.0}, cov);
    const Gaussian mid = displacement_interpolation(g0, g1, 0.5);
    CHECK(mid.mean[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(mid.mean[1] == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK((mid.cov.mat() - cov.mat()).frobenius() < 1e-8);
}

TEST_CASE("1-D interpolated variance is ((1-t) s0 + t s1)^2") {
    const Gaussian g0(Vector{0.0}, SpdMatrix::from_diag(Vector{1.0}));
    const Gaussian g1(Vector{0.0}, SpdMatrix::from_diag(Vector{4.0}));
    const Gaussian mid = displacement_interpolation(g0, g1, 0.5);
    CHECK(mid.cov(0, 0) == doctest::Approx(2.25).epsilon(1e-10));
}

TEST_CASE("oracle velocity trivial cases") {
    RngStream rng(9, 0);
    const SpdMatrix cov = random_cov(2, rng);
    const Gaussian g(Vector{0.0, 0.0}, cov);
    CHECK(norm2(oracle_velocity(g, g, Vector{1.0, 1.0}, 0.5)) < 1e-8);

    const Gaussian shifted(Vector{2.0, 1.0}, cov);
    for (double t : {0.0, 0.3, 0.9}) {
        const Vector v = oracle_velocity(g, shifted, Vector{0.5, 0.5}, t);
        CHECK(v[0] == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(v[1] == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("1-D particle carries its constant velocity") {
    // sigma0=1 -> sigma1=2, means zero: T(1) = 2, particle x_t = 1 + t.
    const Gaussian g0(Vector{0.0}, SpdMatrix::from_diag(Vector{1.0}));
    const Gaussian g1(Vector{0.0}, SpdMatrix::from_diag(Vector{4.0}));
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const Vector v = oracle_velocity(g0, g1, Vector{1.0 + t}, t);
        CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("backward oracle integration recovers the inverse transport") {
    RngStream rng(10, 0);
    const Gaussian g0(Vector(4, 0.0), random_cov(4, rng));
    Vector m1(4);
    for (int i = 0; i < 4; ++i) m1[i] = rng.normal();
    const Gaussian g1(std::move(m1), random_cov(4, rng));
    const GaussianOtOracleField field(g0, g1);

    RngStream sample_rng(11, 0);
    for (int rep = 0; rep < 5; ++rep) {
        const Vector x1 = g1.sample(sample_rng);
        const Trajectory traj =
            integrate_backward(field, x1, 200, Integrator::rk4);
        const Vector expected = field.inverse_transport(x1);
        CHECK(norm2(traj.start() - expected) < 1e-6);
    }
}

TEST_CASE("forward characteristics reach g1 moments, n = 1e4") {
    RngStream rng(12, 0);
    const Gaussian g0(Vector(3, 0.0), random_cov(3, rng));
    const Gaussian g1(Vector{1.0, -2.0, 0.5}, random_cov(3, rng));
    const GaussianOtOracleField field(g0, g1);

    const int n = 10000;
    RngStream sample_rng(13, 0);
    std::vector<Vector> finals(n, Vector(3));
    std::vector<Vector> starts;
    starts.reserve(n);
    for (int i = 0; i < n; ++i) starts.push_back(g0.sample(sample_rng));
    par::parallel_for(n, [&](std::size_t i) {
        finals[i] = integrate_forward(field, starts[i], 200, Integrator::rk4).end();
    });

    // Empirical mean within 3 standard errors per coordinate.
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (const auto& x : finals) mean += x[c];
        mean /= n;
        const double se = std::sqrt(g1.cov(c, c) / n);
        CHECK(std::fabs(mean - g1.mean[c]) < 3.0 * se);
    }
    // Empirical covariance close to the target (3 SE with the normal-theory
    // variance of a sample covariance entry).
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            double cov = 0.0;
            for (const auto& x : finals) {
                cov += (x[a] - g1.mean[a]) * (x[b] - g1.mean[b]);
            }
            cov /= n;
            const double var_est =
                (g1.cov(a, a) * g1.cov(b, b) + g1.cov(a, b) * g1.cov(a, b)) / n;
            CHECK(std::fabs(cov - g1.cov(a, b)) < 3.0 * std::sqrt(var_est) + 0.05);
        }
    }
}

TEST_CASE("marginal law at interior times matches displacement moments") {
    RngStream rng(14, 0);
    const Gaussian g0(Vector(2, 0.0), random_cov(2, rng));
    const Gaussian g1(Vector{2.0, 1.0}, random_cov(2, rng));
    const GaussianOtOracleField field(g0, g1);

    const int n = 10000;
    for (double t_probe : {0.25, 0.5, 0.75}) {
        const Gaussian target = displacement_interpolation(g0, g1, t_probe);
        RngStream sample_rng(15, 0);
        const int k_total = 100;
        const int k_probe = static_cast<int>(t_probe * k_total);
        std::vector<Vector> starts;
        starts.reserve(n);
        for (int i = 0; i < n; ++i) starts.push_back(g0.sample(sample_rng));
        std::vector<Vector> probes(n, Vector(2));
        par::parallel_for(n, [&](std::size_t i) {
            probes[i] =
                integrate_forward(field, starts[i], k_total, Integrator::rk4)
                    .state(k_probe);
        });
        for (int c = 0; c < 2; ++c) {
            double mean = 0.0;
            for (const auto& x : probes) mean += x[c];
            mean /= n;
            const double se = std::sqrt(target.cov(c, c) / n);
            CHECK(std::fabs(mean - target.mean[c]) < 3.0 * se);
        }
    }
}

TEST_CASE("oracle characteristic paths are straight (GPS = 1)") {
    RngStream rng(16, 0);
    const Gaussian g0(Vector(5, 0.0), random_cov(5, rng));
    Vector m1(5);
    for (int i = 0; i < 5; ++i) m1[i] = rng.normal();
    const Gaussian g1(std::move(m1), random_cov(5, rng));
    const GaussianOtOracleField field(g0, g1);

    RngStream sample_rng(17, 0);
    for (int rep = 0; rep < 10; ++rep) {
        const Vector x1 = g1.sample(sample_rng);
        // Euler steps along the constant particle velocity stay on the line.
        const Trajectory te = reference_endpoint_trajectory(
            field, x1, 100, Integrator::euler, EndpointMode::reversed_backward);
        const auto geo_e = path_geometry(te);
        CHECK(std::fabs(geo_e.gps.value() - 1.0) < 1e-6);
        const Trajectory tr = reference_endpoint_trajectory(
            field, x1, 200, Integrator::rk4, EndpointMode::reversed_backward);
        const auto geo_r = path_geometry(tr);
        CHECK(std::fabs(geo_r.gps.value() - 1.0) < 1e-6);
    }
}

TEST_CASE("ill-conditioned covariances are refused") {
    Vector d(2);
    d[0] = 1e-11;
    d[1] = 1.0;
    const Gaussian bad(Vector(2, 0.0), SpdMatrix::from_diag(d));
    const Gaussian ok(Vector(2, 0.0), SpdMatrix::identity(2));
    CHECK_THROWS_AS(gaussian_w2_squared(bad, ok), NotSpd);
    CHECK_THROWS_AS(brenier_map(ok, bad), NotSpd);
}

TEST_CASE("monte carlo action of the displacement path equals w2 within 1 percent") {
    RngStream rng(18, 0);
    GaussianPair pair = seeded_gaussian_pair(10, rng);
    const double w2 = gaussian_w2_squared(pair.g0, pair.g1);
    const AffineMap map = brenier_map(pair.g0, pair.g1);

    // Particle velocity is constant, so per-particle action over unit time is
    // just the squared displacement; average over 1e5 draws of the source.
    const int n = 100000;
    RngStream sample_rng(19, 0);
    std::vector<Vector> xs;
    xs.reserve(n);
    for (int i = 0; i < n; ++i) xs.push_back(pair.g0.sample(sample_rng));
    const double action = par::chunked_sum(n, 1024, [&](std::size_t i) {
                              return norm2_sq(map.apply(xs[i]) - xs[i]);
                          }) /
                          n;
    CHECK(std::fabs(action - w2) / w2 < 0.01);
}
