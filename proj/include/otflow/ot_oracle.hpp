#pragma once

#include <memory>

#include "otflow/models.hpp"
#include "otflow/rng.hpp"
#include "otflow/tensor.hpp"

namespace otflow {

struct Gaussian {
    Vector mean;
    SpdMatrix cov;

    Gaussian(Vector m, SpdMatrix c);
    int dim() const { return mean.dim(); }

    // x = mean + L z with z standard normal, L the lower Cholesky factor.
    Vector sample(RngStream& rng) const;
};

// Seeded random instance: SPD covariances from B^T B + I, mean shift of a
// given norm. Used by the controlled transport experiments.
struct GaussianPair {
    Gaussian g0;
    Gaussian g1;
};
GaussianPair seeded_gaussian_pair(int dim, RngStream& rng,
                                  double mean_shift_norm = 5.0);

struct AffineMap {
    Matrix matrix;
    Vector offset;

    Vector apply(const Vector& x) const;
    int dim() const { return offset.dim(); }
};

// Squared quadratic-cost transport distance:
// ||m1-m0||^2 + tr(S0 + S1 - 2 (S0^{1/2} S1 S0^{1/2})^{1/2}).
double gaussian_w2_squared(const Gaussian& g0, const Gaussian& g1);

// Optimal transport map T(x) = A (x - m0) + m1 with
// A = S0^{-1/2} (S0^{1/2} S1 S0^{1/2})^{1/2} S0^{-1/2}; A is SPD and pushes
// g0 forward onto g1.
AffineMap brenier_map(const Gaussian& g0, const Gaussian& g1);

// Law of (1-t) x0 + t T(x0): mean (1-t) m0 + t m1, covariance M_t S0 M_t
// with M_t = (1-t) I + t A.
Gaussian displacement_interpolation(const Gaussian& g0, const Gaussian& g1,
                                    double t);

// Particle velocity of the displacement path expressed at (x, t):
// (A - I) M_t^{-1} (x - mu_t) + (m1 - m0).
Vector oracle_velocity(const Gaussian& g0, const Gaussian& g1, const Vector& x,
                       double t);

// Velocity field wrapper around oracle_velocity; the transport map and the
// per-call interpolation solve are cached/structured at construction.
class GaussianOtOracleField final : public VelocityField {
public:
    GaussianOtOracleField(Gaussian g0, Gaussian g1);
    int dim() const override { return g0_.dim(); }
    std::string kind() const override { return "gaussian-ot-oracle"; }

    const AffineMap& transport() const { return map_; }
    // Exact inverse transport x0 = A^{-1} (x1 - m1) + m0.
    Vector inverse_transport(const Vector& x1) const;

protected:
    Vector eval_impl(const Vector& x, double t) const override;

private:
    Gaussian g0_, g1_;
    AffineMap map_;
    Matrix map_chol_;  // Cholesky of the SPD transport matrix
};

}  // namespace otflow
