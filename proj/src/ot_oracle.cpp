#include "otflow/ot_oracle.hpp"

#include <cmath>

namespace otflow {

namespace {
constexpr double kConditionLimit = 1e10;

void check_conditioning(const SpdMatrix& cov, const char* which) {
    if (spd_condition(cov) > kConditionLimit) {
        throw NotSpd(std::string(which) +
                     " covariance eigenvalue ratio exceeds 1e10");
    }
}

void check_pair(const Gaussian& g0, const Gaussian& g1) {
    if (g0.dim() != g1.dim()) throw DimMismatch("gaussian pair dims");
    check_conditioning(g0.cov, "source");
    check_conditioning(g1.cov, "target");
}
}  // namespace

Gaussian::Gaussian(Vector m, SpdMatrix c) : mean(std::move(m)), cov(std::move(c)) {
    if (mean.dim() != cov.dim()) throw DimMismatch("gaussian mean/cov dims");
}

Vector Gaussian::sample(RngStream& rng) const {
    const Matrix l = cholesky(cov);
    const Vector z = Vector::from(rng.normal_vector(dim()));
    Vector x = mean;
    for (int i = 0; i < dim(); ++i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += l(i, j) * z[j];
        x[i] += s;
    }
    return x;
}

GaussianPair seeded_gaussian_pair(int dim, RngStream& rng,
                                  double mean_shift_norm) {
    auto random_spd = [&](double scale) {
        Matrix b(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) b(i, j) = scale * rng.normal();
        Matrix m = b.transposed() * b;
        for (int i = 0; i < dim; ++i) m(i, i) += 1.0;
        return SpdMatrix(std::move(m));
    };
    const SpdMatrix c0 = random_spd(0.4);
    const SpdMatrix c1 = random_spd(0.4);
    Vector m0(dim, 0.0);
    Vector shift = Vector::from(rng.normal_vector(dim));
    const double n = norm2(shift);
    if (n > 0.0) shift *= mean_shift_norm / n;
    return GaussianPair{Gaussian(std::move(m0), c0),
                        Gaussian(std::move(shift), c1)};
}

Vector AffineMap::apply(const Vector& x) const {
    Vector y = matrix.matvec(x);
    y += offset;
    return y;
}

double gaussian_w2_squared(const Gaussian& g0, const Gaussian& g1) {
    check_pair(g0, g1);
    const int d = g0.dim();
    const SpdMatrix s0_half = sym_matrix_sqrt(g0.cov);
    const Matrix inner = s0_half.mat() * g1.cov.mat() * s0_half.mat();
    const SpdMatrix cross = sym_matrix_sqrt(SpdMatrix(inner));
    double trace_term = 0.0;
    for (int i = 0; i < d; ++i) {
        trace_term += g0.cov(i, i) + g1.cov(i, i) - 2.0 * cross(i, i);
    }
    const double mean_term = norm2_sq(g1.mean - g0.mean);
    // Exact zero for identical inputs; tiny negatives are roundoff.
    return std::max(0.0, mean_term + trace_term);
}

AffineMap brenier_map(const Gaussian& g0, const Gaussian& g1) {
    check_pair(g0, g1);
    const SpdMatrix s0_half = sym_matrix_sqrt(g0.cov);
    const SpdMatrix s0_inv_half = sym_matrix_inv_sqrt(g0.cov);
    const Matrix inner = s0_half.mat() * g1.cov.mat() * s0_half.mat();
    const SpdMatrix cross = sym_matrix_sqrt(SpdMatrix(inner));
    const Matrix a = s0_inv_half.mat() * cross.mat() * s0_inv_half.mat();

    // T(x) = A (x - m0) + m1 = A x + (m1 - A m0)
    Vector offset = g1.mean;
    offset -= a.matvec(g0.mean);
    return AffineMap{a, std::move(offset)};
}

Gaussian displacement_interpolation(const Gaussian& g0, const Gaussian& g1,
                                    double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw TimeOutOfRange("interpolation time");
    if (t == 0.0) return g0;
    if (t == 1.0) return g1;
    const AffineMap map = brenier_map(g0, g1);
    const int d = g0.dim();
    Matrix mt = map.matrix.scaled(t);
    for (int i = 0; i < d; ++i) mt(i, i) += 1.0 - t;

    Vector mean = g0.mean;
    mean *= 1.0 - t;
    mean.axpy(t, g1.mean);
    Matrix cov = mt * g0.cov.mat() * mt.transposed();
    return Gaussian(std::move(mean), SpdMatrix(std::move(cov)));
}

Vector oracle_velocity(const Gaussian& g0, const Gaussian& g1, const Vector& x,
                       double t) {
    GaussianOtOracleField field(g0, g1);
    return field.eval(x, t);
}

GaussianOtOracleField::GaussianOtOracleField(Gaussian g0, Gaussian g1)
    : g0_(std::move(g0)), g1_(std::move(g1)), map_(brenier_map(g0_, g1_)),
      map_chol_(cholesky_lower(map_.matrix)) {}

Vector GaussianOtOracleField::inverse_transport(const Vector& x1) const {
    Vector rhs = x1;
    rhs -= g1_.mean;
    Vector x0 = cholesky_solve(map_chol_, rhs);
    x0 += g0_.mean;
    return x0;
}

Vector GaussianOtOracleField::eval_impl(const Vector& x, double t) const {
    const int d = dim();
    // mu_t = (1-t) m0 + t m1
    Vector centered = x;
    centered.axpy(-(1.0 - t), g0_.mean);
    centered.axpy(-t, g1_.mean);

    // M_t = (1-t) I + t A is SPD for t in [0, 1]; solve via Cholesky.
    Matrix mt = map_.matrix.scaled(t);
    for (int i = 0; i < d; ++i) mt(i, i) += 1.0 - t;
    Matrix lower;
    try {
        lower = cholesky_lower(mt);
    } catch (const NotSpd&) {
        throw SingularInterpolation("interpolation matrix not invertible");
    }
    const Vector pre = cholesky_solve(lower, centered);

    // (A - I) pre + (m1 - m0)
    Vector v = map_.matrix.matvec(pre);
    v -= pre;
    v += g1_.mean;
    v -= g0_.mean;
    return v;
}

}  // namespace otflow
