#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "otflow/attribution.hpp"
#include "otflow/ot_oracle.hpp"
#include "otflow/rng.hpp"

using namespace otflow;

namespace {
constexpr double kPi = 3.14159265358979323846;

SpdMatrix random_cov(int d, RngStream& rng) {
    Matrix b(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b(i, j) = 0.4 * rng.normal();
    Matrix m = b.transposed() * b;
    for (int i = 0; i < d; ++i) m(i, i) += 1.0;
    return SpdMatrix(std::move(m));
}

Vector random_box(int d, double lo, double hi, RngStream& rng) {
    Vector x(d);
    for (int i = 0; i < d; ++i) x[i] = rng.uniform(lo, hi);
    return x;
}

}  // namespace

TEST_CASE("straight-path attribution recovers sin(x_i) at K=1000") {
    const int d = 10;
    const AdditiveSinScore score(d);
    RngStream rng(1, 0);
    for (int rep = 0; rep < 20; ++rep) {
        const Vector x = random_box(d, -kPi, kPi, rng);
        const AttributionVector attr =
            integrated_gradients(score, Vector(d, 0.0), x, 1000);
        for (int i = 0; i < d; ++i) {
            CHECK(std::fabs(attr.values[i] - std::sin(x[i])) < 5e-3);
        }
    }
}

TEST_CASE("constant score attributes nothing") {
    // A linear score with zero weights has identically zero gradient.
    const LinearScore score(Vector(3, 0.0), 2.5);
    const Trajectory traj =
        CurveSpec::straight(Vector{0.0, 0.0, 0.0}, Vector{1.0, -1.0, 2.0}).sample(20);
    const AttributionVector attr = path_attribution(score, traj);
    for (int i = 0; i < 3; ++i) CHECK(attr.values[i] == 0.0);
    CHECK(attr.score_delta() == 0.0);
}

TEST_CASE("linear scores telescope exactly for any K") {
    RngStream rng(2, 0);
    Vector w(4);
    for (int i = 0; i < 4; ++i) w[i] = rng.normal();
    const LinearScore score(w, 0.7);
    for (int k : {1, 3, 17, 100}) {
        const Vector x0 = random_box(4, -2, 2, rng);
        const Vector x1 = random_box(4, -2, 2, rng);
        const AttributionVector attr = integrated_gradients(score, x0, x1, k);
        for (int i = 0; i < 4; ++i) {
            // w_i (x1_i - x0_i): the gradient is constant so the sum over
            // segments telescopes up to rounding.
            CHECK(attr.values[i] ==
                  doctest::Approx(w[i] * (x1[i] - x0[i])).epsilon(1e-12));
        }
    }
}

TEST_CASE("identical endpoints give the zero attribution") {
    const AdditiveSinScore score(3);
    const Vector x{0.4, -0.2, 1.0};
    const AttributionVector attr = integrated_gradients(score, x, x, 50);
    for (int i = 0; i < 3; ++i) CHECK(attr.values[i] == 0.0);
}

TEST_CASE("transport attribution on the identity oracle is zero") {
    RngStream rng(3, 0);
    const Gaussian g(Vector(3, 0.0), random_cov(3, rng));
    const GaussianOtOracleField field(g, g);
    const QuadraticScore score(SpdMatrix::identity(3));
    const Vector x1 = g.sample(rng);
    const AttributionVector attr =
        transport_flow_attribution(score, field, x1, 50);
    CHECK(norm2(attr.values) < 1e-9);
    CHECK(attr.method == "transport-flow");
}

TEST_CASE("pure translation quadratic score obeys the residual bound") {
    // x0 = x1 - m: sum of credits vs f(x1) - f(x0), bound M V^2 / (2K) with
    // M = 1 (identity Hessian) and V the path length ||m||.
    RngStream rng(4, 0);
    const SpdMatrix cov = random_cov(3, rng);
    const Gaussian g0(Vector(3, 0.0), cov);
    const Gaussian g1(Vector{1.0, 2.0, -1.0}, cov);
    const GaussianOtOracleField field(g0, g1);
    const QuadraticScore score(SpdMatrix::identity(3));

    const double v_len = norm2(g1.mean - g0.mean);
    for (int k : {10, 50, 200}) {
        const Vector x1 = g1.sample(rng);
        const AttributionVector attr = transport_flow_attribution(
            score, field, x1, k, Integrator::euler);
        const double resid = std::fabs(attr.sum() - attr.score_delta());
        CHECK(resid <= v_len * v_len / (2.0 * k) * (1.0 + 1e-9));
    }
}

TEST_CASE("coarse attribution agrees with a fine-grid self-oracle") {
    RngStream rng(5, 0);
    const Gaussian g0(Vector(4, 0.0), random_cov(4, rng));
    const Gaussian g1(Vector{1.5, -0.5, 1.0, 0.0}, random_cov(4, rng));
    const GaussianOtOracleField field(g0, g1);
    const AdditiveSinScore score(4);

    const Vector x1 = g1.sample(rng);
    const AttributionVector coarse =
        transport_flow_attribution(score, field, x1, 200);
    const AttributionVector fine =
        transport_flow_attribution(score, field, x1, 2000);
    CHECK(norm_inf(coarse.values - fine.values) < 1e-2);
}

TEST_CASE("completeness residual basics") {
    RngStream rng(6, 0);
    Vector w(3);
    for (int i = 0; i < 3; ++i) w[i] = rng.normal();
    const LinearScore lin(w);

    std::vector<AttributionVector> attrs;
    for (int rep = 0; rep < 10; ++rep) {
        attrs.push_back(integrated_gradients(lin, random_box(3, -1, 1, rng),
                                             random_box(3, -1, 1, rng), 7));
    }
    CHECK(completeness_residual(attrs) < 1e-12);
    CHECK_THROWS_AS(completeness_residual({}), EmptyInput);
}

TEST_CASE("quadratic unit path residual is below 1/(2K)") {
    // Straight unit-length path, identity Hessian: bound = 1/(2K) at K=10.
    const QuadraticScore score(SpdMatrix::identity(2));
    const Vector x0{0.0, 0.0};
    const Vector x1{std::sqrt(0.5), std::sqrt(0.5)};
    std::vector<AttributionVector> attrs{integrated_gradients(score, x0, x1, 10)};
    CHECK(completeness_residual(attrs) <= 0.05 * (1.0 + 1e-12));
}

TEST_CASE("residual decays by more than the required factor from K=10 to K=200") {
    const int d = 6;
    const AdditiveSinScore score(d);
    RngStream rng(7, 0);
    std::vector<AttributionVector> coarse, fine;
    for (int rep = 0; rep < 40; ++rep) {
        const Vector x0 = random_box(d, -kPi, kPi, rng);
        const Vector x1 = random_box(d, -kPi, kPi, rng);
        coarse.push_back(integrated_gradients(score, x0, x1, 10));
        fine.push_back(integrated_gradients(score, x0, x1, 200));
    }
    const double ratio = completeness_residual(fine) / completeness_residual(coarse);
    CHECK(ratio < 0.15);
}

// --------------------------------------------------------------------------
// Axiom properties
// --------------------------------------------------------------------------

TEST_CASE("efficiency bound holds for quadratic scores on random paths") {
    RngStream rng(8, 0);
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 2 + static_cast<int>(rng.next_below(4));
        const SpdMatrix h = random_cov(d, rng);
        const QuadraticScore score(h);
        const double m_bound = score.hessian_bound();

        const Trajectory traj =
            CurveSpec::straight(random_box(d, -2, 2, rng), random_box(d, -2, 2, rng))
                .sample(5 + static_cast<int>(rng.next_below(40)));
        const AttributionVector attr = path_attribution(score, traj);

        double sum_sq_inc = 0.0;
        for (int k = 0; k < traj.steps(); ++k) {
            sum_sq_inc += norm2_sq(traj.state(k + 1) - traj.state(k));
        }
        const double resid = std::fabs(attr.sum() - attr.score_delta());
        CHECK(resid <= 0.5 * m_bound * sum_sq_inc * (1.0 + 1e-9) + 1e-12);
    }
}

TEST_CASE("linearity is exact for structural composites") {
    RngStream rng(9, 0);
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 3;
        const auto f = std::make_shared<AdditiveSinScore>(d);
        const auto g = std::make_shared<QuadraticScore>(random_cov(d, rng));
        const double a = rng.uniform(-2.0, 2.0);
        const double b = rng.uniform(-2.0, 2.0);
        const CompositeScore comp(a, f, b, g);

        const Trajectory traj =
            CurveSpec::straight(random_box(d, -1, 1, rng), random_box(d, -1, 1, rng))
                .sample(30);
        const AttributionVector whole = path_attribution(comp, traj);
        const AttributionVector part_f = path_attribution(*f, traj);
        const AttributionVector part_g = path_attribution(*g, traj);
        for (int i = 0; i < d; ++i) {
            const double combined = a * part_f.values[i] + b * part_g.values[i];
            CHECK(whole.values[i] == combined);  // bit-exact
        }
    }
}

namespace {
// Score that ignores its last coordinate; the dummy coordinate must get
// exactly zero credit.
class IgnoreLastScore final : public ScoreModel {
public:
    explicit IgnoreLastScore(int dim) : dim_(dim), inner_(dim - 1) {}
    int dim() const override { return dim_; }
    std::string kind() const override { return "ignore-last"; }
    double value(const Vector& x) const override {
        Vector head(dim_ - 1);
        for (int i = 0; i < dim_ - 1; ++i) head[i] = x[i];
        return inner_.value(head);
    }
    Vector gradient(const Vector& x) const override {
        Vector head(dim_ - 1);
        for (int i = 0; i < dim_ - 1; ++i) head[i] = x[i];
        const Vector g = inner_.gradient(head);
        Vector out(dim_);
        for (int i = 0; i < dim_ - 1; ++i) out[i] = g[i];
        return out;
    }

private:
    int dim_;
    AdditiveSinScore inner_;
};
}  // namespace

TEST_CASE("dummy coordinates receive exactly zero") {
    RngStream rng(10, 0);
    const IgnoreLastScore score(4);
    for (int rep = 0; rep < 100; ++rep) {
        const Trajectory traj =
            CurveSpec::straight(random_box(4, -2, 2, rng), random_box(4, -2, 2, rng))
                .sample(25);
        const AttributionVector attr = path_attribution(score, traj);
        CHECK(attr.values[3] == 0.0);
    }
}

TEST_CASE("reparameterization changes attributions by at most 1e-3 at K=2000") {
    RngStream rng(11, 0);
    std::vector<double> sigma;
    const int k = 2000;
    for (int j = 0; j <= k; ++j) {
        const double t = static_cast<double>(j) / k;
        sigma.push_back(t * t);
    }
    for (int rep = 0; rep < 30; ++rep) {
        const int d = 3;
        const AdditiveSinScore score(d);
        const CurveSpec curve = CurveSpec::straight(random_box(d, -2, 2, rng),
                                                    random_box(d, -2, 2, rng));
        const AttributionVector plain =
            path_attribution(score, curve.sample(k));
        const AttributionVector warped =
            path_attribution(score, curve.with_reparameterization(sigma).sample(k));
        CHECK(norm_inf(plain.values - warped.values) < 1e-3);
    }
}

TEST_CASE("additive scores ignore the path between fixed endpoints") {
    RngStream rng(12, 0);
    const int d = 2;
    const AdditiveSinScore score(d);
    for (int rep = 0; rep < 30; ++rep) {
        const Vector x0 = random_box(d, -2, 2, rng);
        const Vector x1 = random_box(d, -2, 2, rng);

        const AttributionVector straight =
            path_attribution(score, CurveSpec::straight(x0, x1).sample(1000));

        // A bowed path through a control point off the segment.
        Vector mid = x0;
        mid += x1;
        mid *= 0.5;
        Vector offset{mid[1] - x1[1], x1[0] - mid[0]};
        if (norm2(offset) > 0) offset *= 1.0 / norm2(offset);
        Vector control = mid;
        control.axpy(0.8, offset);
        const AttributionVector bowed = path_attribution(
            score, CurveSpec::polyline({x0, control, x1}).sample(1000));

        for (int i = 0; i < d; ++i) {
            const double exact = std::sin(x1[i]) - std::sin(x0[i]);
            CHECK(std::fabs(straight.values[i] - exact) < 5e-3);
            CHECK(std::fabs(bowed.values[i] - exact) < 5e-3);
        }
    }
}

TEST_CASE("attribution error grows linearly in the field perturbation") {
    RngStream rng(13, 0);
    const int d = 4;
    const Gaussian g0(Vector(d, 0.0), random_cov(d, rng));
    const Gaussian g1(Vector{2.0, -1.0, 0.5, 1.0}, random_cov(d, rng));
    const auto oracle = std::make_shared<GaussianOtOracleField>(g0, g1);
    const AdditiveSinScore score(d);

    // Bounded unit perturbation ||u(x,t)|| <= 1.
    const auto bump = std::make_shared<LambdaField>(
        d, "unit-bump", [d](const Vector& x, double t) {
            Vector u(d);
            for (int i = 0; i < d; ++i) {
                u[i] = std::sin(x[i] + t) / std::sqrt(static_cast<double>(d));
            }
            return u;
        });

    RngStream sample_rng(14, 0);
    const std::vector<double> eps_grid{0.01, 0.02, 0.05, 0.1};
    std::vector<double> ratios;
    for (double eps : eps_grid) {
        double worst = 0.0;
        RngStream replay = sample_rng;  // same inputs for every eps
        for (int rep = 0; rep < 10; ++rep) {
            const Vector x1 = g1.sample(replay);
            const AttributionVector clean =
                transport_flow_attribution(score, *oracle, x1, 100);
            const PerturbedField perturbed(oracle, bump, eps);
            const AttributionVector noisy =
                transport_flow_attribution(score, perturbed, x1, 100);
            worst = std::max(worst, norm_inf(noisy.values - clean.values));
        }
        ratios.push_back(worst / eps);
    }
    const double mid = ratios[ratios.size() / 2];
    for (double r : ratios) {
        CHECK(std::fabs(r - mid) / mid < 0.25);
    }
}

TEST_CASE("stored endpoint scores match re-evaluation") {
    RngStream rng(15, 0);
    const AdditiveSinScore score(3);
    const Vector x0 = random_box(3, -1, 1, rng);
    const Vector x1 = random_box(3, -1, 1, rng);
    const AttributionVector attr = integrated_gradients(score, x0, x1, 20);
    CHECK(attr.score_start == score.value(attr.endpoint_start));
    CHECK(attr.score_end == score.value(attr.endpoint_end));
    CHECK(attr.steps == 20);
    CHECK(attr.method == "ig");
}

TEST_CASE("midpoint rule is available and more accurate on smooth scores") {
    const AdditiveSinScore score(2);
    const Vector x0{0.0, 0.0};
    const Vector x1{2.0, -1.5};
    const Trajectory traj = CurveSpec::straight(x0, x1).sample(40);
    const AttributionVector left = path_attribution(score, traj);
    const AttributionVector mid =
        path_attribution(score, traj, QuadratureRule::midpoint);
    const double exact0 = std::sin(x1[0]);
    CHECK(std::fabs(mid.values[0] - exact0) < std::fabs(left.values[0] - exact0));
}

TEST_CASE("dimension mismatches are rejected") {
    const AdditiveSinScore score(3);
    const Trajectory traj =
        CurveSpec::straight(Vector{0.0, 0.0}, Vector{1.0, 1.0}).sample(5);
    CHECK_THROWS_AS(path_attribution(score, traj), DimMismatch);
    CHECK_THROWS_AS(
        integrated_gradients(score, Vector{0.0}, Vector{1.0, 1.0, 1.0}, 5),
        DimMismatch);
}
