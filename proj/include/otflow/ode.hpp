#pragma once

#include <optional>
#include <string>
#include <vector>

#include "otflow/models.hpp"
#include "otflow/tensor.hpp"

namespace otflow {

// Discrete path on the uniform grid t_k = k/K.
class Trajectory {
public:
    explicit Trajectory(std::vector<Vector> states);

    int steps() const noexcept { return static_cast<int>(states_.size()) - 1; }
    double dt() const noexcept { return 1.0 / steps(); }
    double time(int k) const noexcept { return static_cast<double>(k) / steps(); }
    int dim() const noexcept { return states_.front().dim(); }

    const Vector& state(int k) const { return states_[static_cast<std::size_t>(k)]; }
    Vector& state(int k) { return states_[static_cast<std::size_t>(k)]; }
    const std::vector<Vector>& states() const noexcept { return states_; }

    const Vector& start() const { return states_.front(); }
    const Vector& end() const { return states_.back(); }

    double path_length() const;

private:
    std::vector<Vector> states_;
};

enum class Integrator { euler, rk4 };
Integrator integrator_from_string(const std::string& name);
std::string to_string(Integrator m);

// Forward solve of dx/dt = v(x, t) from t=0 to t=1 on K uniform steps.
// Aborts with NonFiniteState when any coordinate leaves [-1e12, 1e12].
Trajectory integrate_forward(const VelocityField& field, const Vector& x0,
                             int steps, Integrator method);

// Backward solve from t=1 down to t=0; the result is stored in forward time
// order, so state(K) == x1 bit-exactly.
Trajectory integrate_backward(const VelocityField& field, const Vector& x1,
                              int steps, Integrator method);

enum class EndpointMode { reversed_backward, forward_corrected };
EndpointMode endpoint_mode_from_string(const std::string& name);
std::string to_string(EndpointMode m);

// Trajectory ending at the observed input x1 with a flow-recovered reference
// start. reversed_backward reuses the backward solve directly;
// forward_corrected re-integrates forward from the recovered start and then
// overwrites the terminal state with x1.
Trajectory reference_endpoint_trajectory(const VelocityField& field,
                                         const Vector& x1, int steps,
                                         Integrator method, EndpointMode mode);

// ---------------------------------------------------------------------------
// Analytic test curves.
// ---------------------------------------------------------------------------

class CurveSpec {
public:
    static CurveSpec straight(Vector x0, Vector x1);
    // c + r (cos(theta(t)) e1 + sin(theta(t)) e2), theta linear in t.
    static CurveSpec arc(Vector center, double radius, double theta0,
                         double theta1, Vector e1, Vector e2);
    // Piecewise linear through vertices, constant-speed (arc-length) param.
    static CurveSpec polyline(std::vector<Vector> vertices);

    // Attach a monotone reparameterization given as grid values sigma(j/M),
    // j = 0..M, with sigma(0)=0, sigma(1)=1, strictly increasing. Values at
    // intermediate times are interpolated linearly between grid nodes.
    CurveSpec with_reparameterization(std::vector<double> sigma_grid) const;

    int dim() const;
    Vector point(double t) const;

    Trajectory sample(int steps) const;

private:
    CurveSpec() = default;
    Vector point_raw(double t) const;
    double sigma(double t) const;

    enum class Kind { straight, arc, polyline } kind_ = Kind::straight;
    Vector x0_, x1_;
    Vector center_, e1_, e2_;
    double radius_ = 0.0, theta0_ = 0.0, theta1_ = 0.0;
    std::vector<Vector> vertices_;
    std::vector<double> cumlen_;
    std::vector<double> sigma_grid_;  // empty means identity
};

}  // namespace otflow
