#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "otflow/metrics.hpp"
#include "otflow/rng.hpp"

using namespace otflow;

TEST_CASE("straight unit path: GPS 1, action 1, curvature 0") {
    const Vector x0{0.0, 0.0};
    const Vector x1{std::sqrt(0.5), std::sqrt(0.5)};
    const Trajectory traj = CurveSpec::straight(x0, x1).sample(20);
    const PathGeometryReport rep = path_geometry(traj);
    CHECK(rep.gps.value() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.action == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.curvature.value() == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("action of a straight path of length L equals L squared") {
    RngStream rng(1, 0);
    for (int rep = 0; rep < 20; ++rep) {
        Vector x0(3), x1(3);
        for (int i = 0; i < 3; ++i) {
            x0[i] = rng.uniform(-3, 3);
            x1[i] = rng.uniform(-3, 3);
        }
        const double len = norm2(x1 - x0);
        const Trajectory traj = CurveSpec::straight(x0, x1).sample(37);
        CHECK(path_geometry(traj).action ==
              doctest::Approx(len * len).epsilon(1e-12));
    }
}

TEST_CASE("FCE is exactly zero on forward-euler self trajectories") {
    Matrix a(2, 2);
    a(0, 0) = -0.7;
    a(0, 1) = 0.3;
    a(1, 0) = -0.1;
    a(1, 1) = -0.4;
    const AffineField field(a, Vector{0.2, -0.3});
    const Trajectory traj =
        integrate_forward(field, Vector{1.0, 1.0}, 30, Integrator::euler);
    const PathGeometryReport rep = path_geometry(traj, &field);
    CHECK(rep.fce.value() == 0.0);
}

TEST_CASE("quadratic 1-D path curvature matches the closed form") {
    // x_k = (k/K)^2 with K = 100: every second difference is 2/K^2, so
    // curvature = 4 (K-1)/K.
    const int k = 100;
    std::vector<Vector> states;
    for (int i = 0; i <= k; ++i) {
        const double t = static_cast<double>(i) / k;
        states.push_back(Vector{t * t});
    }
    const Trajectory traj(std::move(states));
    CHECK(path_geometry(traj).curvature.value() ==
          doctest::Approx(4.0 * (k - 1) / k).epsilon(1e-10));
}

TEST_CASE("L-shaped polyline has GPS sqrt(2)") {
    const Trajectory traj =
        CurveSpec::polyline({Vector{0.0, 0.0}, Vector{1.0, 0.0}, Vector{1.0, 1.0}})
            .sample(100);
    CHECK(path_geometry(traj).gps.value() ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("GPS is absent on degenerate paths, present otherwise >= 1") {
    std::vector<Vector> loop{Vector{0.0, 0.0}, Vector{1.0, 0.0}, Vector{0.0, 0.0}};
    const Trajectory closed(std::move(loop));
    CHECK(!path_geometry(closed).gps.has_value());

    RngStream rng(2, 0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<Vector> states;
        for (int k = 0; k <= 10; ++k) {
            Vector s(2);
            s[0] = rng.normal();
            s[1] = rng.normal();
            states.push_back(std::move(s));
        }
        const Trajectory traj(std::move(states));
        const auto gps = path_geometry(traj).gps;
        if (gps) CHECK(*gps >= 1.0 - 1e-12);
    }
}

TEST_CASE("oracle comparison of a method against itself is zero") {
    const Trajectory traj =
        CurveSpec::straight(Vector{0.0, 0.0}, Vector{1.0, 1.0}).sample(10);
    const ConstantField field(Vector{1.0, 1.0});
    AttributionVector attr;
    attr.values = Vector{0.5, 0.5};
    const double action = path_geometry(traj).action;
    const OracleComparison cmp =
        oracle_comparison(traj, traj, field, field, attr, attr, action);
    CHECK(cmp.action_gap == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cmp.field_error == 0.0);
    CHECK(cmp.attribution_error == 0.0);
}

TEST_CASE("doubled attribution has relative error one") {
    AttributionVector ref, twice;
    ref.values = Vector{1.0, -2.0, 0.5};
    twice.values = Vector{2.0, -4.0, 1.0};
    CHECK(relative_attribution_error(twice, ref) ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("satv of a constant attribution map is zero") {
    GridImage attr(8, 8, 1, 3.7);
    RngStream rng(3, 0);
    GridImage img(8, 8);
    for (auto& v : img.raw()) v = rng.normal();
    CHECK(satv(attr, img, 10.0) == 0.0);
    CHECK(eas(attr, img) == 0.0);
}

TEST_CASE("checkerboard satv on a flat image counts the stencil changes") {
    // Amplitude-1 checkerboard (values 0/1): each interior pixel contributes
    // |dx| + |dy| = 2; the last row and column lose their forward neighbor.
    const int n = 8;
    GridImage attr(n, n);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) attr.at(u, v) = (u + v) % 2;
    GridImage img(n, n, 1, 0.0);  // flat: exp(0) = 1 weights

    // Closed-form stencil count: rows 0..n-2 have n-1 horizontal changes of
    // size 1 in each row (per pixel u,v with v<n-1) and same vertically.
    const double expected = 2.0 * n * (n - 1);
    CHECK(satv(attr, img, 10.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("satv discounts variation sitting on image edges") {
    const int n = 16;
    // Strong vertical image edge in the middle.
    GridImage img(n, n);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) img.at(u, v) = v < n / 2 ? 0.0 : 2.0;

    // Same attribution step placed on the edge vs in a flat region.
    GridImage attr_on_edge(n, n);
    GridImage attr_flat(n, n);
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            attr_on_edge.at(u, v) = v < n / 2 ? 0.0 : 1.0;
            attr_flat.at(u, v) = v < n / 4 ? 0.0 : 1.0;
        }
    }
    const double on_edge = satv(attr_on_edge, img, 10.0);
    const double off_edge = satv(attr_flat, img, 10.0);
    CHECK(on_edge < 0.05 * off_edge);
}

TEST_CASE("eas trivial cases") {
    const int n = 8;
    GridImage img(n, n);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) img.at(u, v) = 0.3 * u + 0.1 * v * v;
    const ImageGradient gi = forward_differences(img);

    // Attribution varying at exactly one pixel pair picks out that edge
    // strength; a uniform ramp averages all of them.
    GridImage spike(n, n);
    spike.at(3, 3) = 1.0;
    const double e_spike = eas(spike, img);
    CHECK(e_spike > 0.0);

    // Uniform attribution gradient: plain mean of edge strengths where the
    // ramp has gradient (every pixel has |ds| = 1 except the last column).
    GridImage ramp(n, n);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) ramp.at(u, v) = v;
    double num = 0.0, den = 0.0;
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            const double s = (v + 1 < n) ? 1.0 : 0.0;
            num += s * std::hypot(gi.du.at(u, v), gi.dv.at(u, v));
            den += s;
        }
    }
    CHECK(eas(ramp, img) == doctest::Approx(num / (den + 1e-12)));
}

TEST_CASE("eas and satv ignore constant shifts of the attribution") {
    RngStream rng(4, 0);
    GridImage attr(8, 8), img(8, 8);
    for (auto& v : attr.raw()) v = rng.normal();
    for (auto& v : img.raw()) v = rng.normal();
    GridImage shifted = attr;
    for (auto& v : shifted.raw()) v += 11.25;
    CHECK(satv(attr, img, 10.0) == doctest::Approx(satv(shifted, img, 10.0)));
    CHECK(eas(attr, img) == doctest::Approx(eas(shifted, img)));
}

TEST_CASE("deletion of a sum score decays linearly and has auc N/2") {
    const int n = 6;
    GridImage img(n, n, 1, 1.0);
    const LinearScore score(Vector(n * n, 1.0));
    AttributionVector attr;
    attr.values = Vector(n * n);
    std::iota(attr.values.raw().begin(), attr.values.raw().end(), 0.0);

    const DeletionCurve curve =
        deletion_curve(score, img, attr, Replacement::zero, 9);
    for (std::size_t j = 0; j < curve.fractions.size(); ++j) {
        CHECK(curve.scores[j] ==
              doctest::Approx((1.0 - curve.fractions[j]) * n * n).epsilon(1e-12));
    }
    CHECK(curve.auc == doctest::Approx(n * n / 2.0).epsilon(1e-12));

    // Reversed ranking: same curve because the score is permutation
    // invariant.
    AttributionVector rev;
    rev.values = attr.values;
    for (int i = 0; i < n * n; ++i) rev.values[i] = -attr.values[i];
    const DeletionCurve curve_rev =
        deletion_curve(score, img, rev, Replacement::zero, 9);
    for (std::size_t j = 0; j < curve.scores.size(); ++j) {
        CHECK(curve.scores[j] == doctest::Approx(curve_rev.scores[j]));
    }
}

TEST_CASE("deletion endpoints evaluate the image and the fully replaced image") {
    RngStream rng(5, 0);
    GridImage img = gaussian_bump_image(8, 8, rng);
    const GridLogitScore score(8, 8);
    AttributionVector attr;
    attr.values = score.gradient(img.to_vector());

    for (auto replacement : {Replacement::zero, Replacement::blur}) {
        const DeletionCurve curve = deletion_curve(score, img, attr, replacement, 5);
        CHECK(curve.scores.front() == score.value(img.to_vector()));
        Vector fully(img.pixel_count(), 0.0);
        if (replacement == Replacement::blur) {
            fully = gaussian_blur(img, 2.0).to_vector();
        }
        CHECK(curve.scores.back() == doctest::Approx(score.value(fully)));
    }
}

TEST_CASE("informed ranking beats random ranking on bump images") {
    RngStream rng(6, 0);
    const int n = 16;
    const GridLogitScore score(n, n);
    int wins = 0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
        const GridImage img = gaussian_bump_image(n, n, rng);
        AttributionVector attr;
        // Straight-path credits from a zero baseline: gradient x pixel value.
        const Vector g = score.gradient(img.to_vector());
        attr.values = Vector(n * n);
        for (int i = 0; i < n * n; ++i) attr.values[i] = g[i] * img.to_vector()[i];
        const double auc_informed =
            deletion_curve(score, img, attr, Replacement::zero, 16).auc;

        std::vector<int> ranking(static_cast<std::size_t>(n * n));
        std::iota(ranking.begin(), ranking.end(), 0);
        // Fisher-Yates with the test stream.
        for (int i = n * n - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.next_below(i + 1));
            std::swap(ranking[i], ranking[j]);
        }
        const double auc_random =
            deletion_curve_ranked(score, img, ranking, Replacement::zero, 16).auc;
        if (auc_informed < auc_random) ++wins;
    }
    CHECK(wins >= trials * 3 / 4);
}

TEST_CASE("ssim and spearman fixed points") {
    RngStream rng(7, 0);
    GridImage a(16, 16);
    for (auto& v : a.raw()) v = rng.normal();
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spearman(a.raw(), a.raw()) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> neg(a.raw());
    for (auto& v : neg) v = -v;
    CHECK(spearman(a.raw(), neg) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("stability report trivial cases") {
    RngStream rng(8, 0);
    GridImage map(16, 16);
    for (auto& v : map.raw()) v = rng.normal();

    const StabilityReport same = stability_report({map, map, map});
    CHECK(same.pixel_variance == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(same.mean_ssim == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same.mean_rank_corr == doctest::Approx(1.0).epsilon(1e-12));

    GridImage neg = map;
    for (auto& v : neg.raw()) v = -v;
    const StabilityReport flipped = stability_report({map, neg});
    CHECK(flipped.mean_rank_corr == doctest::Approx(-1.0).epsilon(1e-12));

    CHECK_THROWS_AS(stability_report({map}), TooFewSeeds);
}

TEST_CASE("independent noise maps have near-zero mean rank correlation") {
    RngStream rng(9, 0);
    std::vector<GridImage> maps;
    for (int s = 0; s < 5; ++s) {
        GridImage m(16, 16);
        for (auto& v : m.raw()) v = rng.uniform(-1.0, 1.0);
        maps.push_back(std::move(m));
    }
    const StabilityReport rep = stability_report(maps);
    CHECK(std::fabs(rep.mean_rank_corr) < 0.1);
}

TEST_CASE("pearson basics") {
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK(pearson({1, 2, 3}, {6, 4, 2}) == doctest::Approx(-1.0));
    CHECK(pearson({1, 1, 1}, {2, 4, 6}) == 0.0);
}

TEST_CASE("shape mismatches are rejected") {
    GridImage a(4, 4), b(4, 5);
    CHECK_THROWS_AS(satv(a, b, 10.0), ShapeMismatch);
    CHECK_THROWS_AS(eas(a, b), ShapeMismatch);
    CHECK_THROWS_AS(ssim(a, b), ShapeMismatch);
}
