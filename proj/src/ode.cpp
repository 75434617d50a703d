#include "otflow/ode.hpp"

#include <cmath>

namespace otflow {

namespace {
constexpr double kDivergenceLimit = 1e12;

void check_state(const Vector& x, int step) {
    for (int i = 0; i < x.dim(); ++i) {
        const double v = x[i];
        if (!std::isfinite(v) || std::fabs(v) > kDivergenceLimit) {
            throw NonFiniteState("state diverged at step " + std::to_string(step));
        }
    }
}
}  // namespace

Trajectory::Trajectory(std::vector<Vector> states) : states_(std::move(states)) {
    if (states_.size() < 2) throw RangeError("trajectory needs K >= 1");
    const int d = states_.front().dim();
    for (const auto& s : states_) {
        if (s.dim() != d) throw DimMismatch("trajectory states");
    }
}

double Trajectory::path_length() const {
    double len = 0.0;
    for (int k = 0; k < steps(); ++k) len += norm2(state(k + 1) - state(k));
    return len;
}

Integrator integrator_from_string(const std::string& name) {
    if (name == "euler") return Integrator::euler;
    if (name == "rk4") return Integrator::rk4;
    throw RangeError("unknown integrator '" + name + "'");
}

std::string to_string(Integrator m) {
    return m == Integrator::euler ? "euler" : "rk4";
}

EndpointMode endpoint_mode_from_string(const std::string& name) {
    if (name == "reversed-backward") return EndpointMode::reversed_backward;
    if (name == "forward-corrected") return EndpointMode::forward_corrected;
    throw RangeError("unknown endpoint mode '" + name + "'");
}

std::string to_string(EndpointMode m) {
    return m == EndpointMode::reversed_backward ? "reversed-backward"
                                                : "forward-corrected";
}

namespace {

// One step of x' = sign * v(x, time(tau)) where time() maps the integration
// variable to field time. Stage times are computed from exact grid fractions
// so t never exits [0, 1] by accumulation error.
Vector step_euler(const VelocityField& field, const Vector& x, double t0,
                  double dt_field, double dt_int) {
    Vector out = x;
    out.axpy(dt_int, field.eval(x, t0));
    (void)dt_field;
    return out;
}

Vector step_rk4(const VelocityField& field, const Vector& x, double t0,
                double t_mid, double t1, double dt_int) {
    const Vector k1 = field.eval(x, t0);
    Vector probe = x;
    probe.axpy(0.5 * dt_int, k1);
    const Vector k2 = field.eval(probe, t_mid);
    probe = x;
    probe.axpy(0.5 * dt_int, k2);
    const Vector k3 = field.eval(probe, t_mid);
    probe = x;
    probe.axpy(dt_int, k3);
    const Vector k4 = field.eval(probe, t1);
    Vector out = x;
    out.axpy(dt_int / 6.0, k1);
    out.axpy(dt_int / 3.0, k2);
    out.axpy(dt_int / 3.0, k3);
    out.axpy(dt_int / 6.0, k4);
    return out;
}

}  // namespace

Trajectory integrate_forward(const VelocityField& field, const Vector& x0,
                             int steps, Integrator method) {
    if (steps < 1) throw RangeError("integrate_forward needs K >= 1");
    check_state(x0, 0);
    std::vector<Vector> states;
    states.reserve(static_cast<std::size_t>(steps) + 1);
    states.push_back(x0);
    const double dt = 1.0 / steps;
    for (int k = 0; k < steps; ++k) {
        const double t0 = static_cast<double>(k) / steps;
        const double t1 = static_cast<double>(k + 1) / steps;
        const double tm = (k + 0.5) / steps;
        Vector next = method == Integrator::euler
                          ? step_euler(field, states.back(), t0, dt, dt)
                          : step_rk4(field, states.back(), t0, tm, t1, dt);
        check_state(next, k + 1);
        states.push_back(std::move(next));
    }
    return Trajectory(std::move(states));
}

Trajectory integrate_backward(const VelocityField& field, const Vector& x1,
                              int steps, Integrator method) {
    if (steps < 1) throw RangeError("integrate_backward needs K >= 1");
    check_state(x1, steps);
    std::vector<Vector> states(static_cast<std::size_t>(steps) + 1,
                               Vector(x1.dim()));
    states[static_cast<std::size_t>(steps)] = x1;
    const double dt = -1.0 / steps;
    for (int k = steps; k > 0; --k) {
        const double t0 = static_cast<double>(k) / steps;
        const double t1 = static_cast<double>(k - 1) / steps;
        const double tm = (k - 0.5) / steps;
        const Vector& cur = states[static_cast<std::size_t>(k)];
        Vector prev = method == Integrator::euler
                          ? step_euler(field, cur, t0, dt, dt)
                          : step_rk4(field, cur, t0, tm, t1, dt);
        check_state(prev, k - 1);
        states[static_cast<std::size_t>(k - 1)] = std::move(prev);
    }
    return Trajectory(std::move(states));
}

Trajectory reference_endpoint_trajectory(const VelocityField& field,
                                         const Vector& x1, int steps,
                                         Integrator method, EndpointMode mode) {
    Trajectory backward = integrate_backward(field, x1, steps, method);
    if (mode == EndpointMode::reversed_backward) return backward;
    Trajectory forward = integrate_forward(field, backward.start(), steps, method);
    forward.state(steps) = x1;
    return forward;
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

CurveSpec CurveSpec::straight(Vector x0, Vector x1) {
    require_same_dim(x0, x1, "straight curve endpoints");
    CurveSpec c;
    c.kind_ = Kind::straight;
    c.x0_ = std::move(x0);
    c.x1_ = std::move(x1);
    return c;
}

CurveSpec CurveSpec::arc(Vector center, double radius, double theta0,
                         double theta1, Vector e1, Vector e2) {
    require_same_dim(center, e1, "arc axes");
    require_same_dim(center, e2, "arc axes");
    if (!(radius > 0.0)) throw RangeError("arc radius must be > 0");
    CurveSpec c;
    c.kind_ = Kind::arc;
    c.center_ = std::move(center);
    c.radius_ = radius;
    c.theta0_ = theta0;
    c.theta1_ = theta1;
    c.e1_ = std::move(e1);
    c.e2_ = std::move(e2);
    return c;
}

CurveSpec CurveSpec::polyline(std::vector<Vector> vertices) {
    if (vertices.size() < 2) throw RangeError("polyline needs >= 2 vertices");
    for (const auto& v : vertices) {
        require_same_dim(vertices.front(), v, "polyline vertices");
    }
    CurveSpec c;
    c.kind_ = Kind::polyline;
    c.cumlen_.push_back(0.0);
    for (std::size_t i = 1; i < vertices.size(); ++i) {
        c.cumlen_.push_back(c.cumlen_.back() +
                            norm2(vertices[i] - vertices[i - 1]));
    }
    if (!(c.cumlen_.back() > 0.0)) throw RangeError("polyline has zero length");
    c.vertices_ = std::move(vertices);
    return c;
}

CurveSpec CurveSpec::with_reparameterization(std::vector<double> sigma_grid) const {
    if (sigma_grid.size() < 2) {
        throw BadReparameterization("sigma grid needs >= 2 nodes");
    }
    if (sigma_grid.front() != 0.0 || sigma_grid.back() != 1.0) {
        throw BadReparameterization("sigma must map 0 to 0 and 1 to 1");
    }
    for (std::size_t i = 1; i < sigma_grid.size(); ++i) {
        if (!(sigma_grid[i] > sigma_grid[i - 1])) {
            throw BadReparameterization("sigma must be strictly increasing");
        }
    }
    CurveSpec c = *this;
    c.sigma_grid_ = std::move(sigma_grid);
    return c;
}

int CurveSpec::dim() const {
    switch (kind_) {
        case Kind::straight: return x0_.dim();
        case Kind::arc: return center_.dim();
        case Kind::polyline: return vertices_.front().dim();
    }
    return 0;
}

double CurveSpec::sigma(double t) const {
    if (sigma_grid_.empty()) return t;
    const double m = static_cast<double>(sigma_grid_.size()) - 1.0;
    const double pos = t * m;
    const std::size_t j0 = std::min(static_cast<std::size_t>(pos),
                                    sigma_grid_.size() - 2);
    const double frac = pos - static_cast<double>(j0);
    return sigma_grid_[j0] + frac * (sigma_grid_[j0 + 1] - sigma_grid_[j0]);
}

Vector CurveSpec::point_raw(double t) const {
    switch (kind_) {
        case Kind::straight: {
            Vector p = x0_;
            p.axpy(t, x1_ - x0_);
            return p;
        }
        case Kind::arc: {
            const double theta = theta0_ + t * (theta1_ - theta0_);
            Vector p = center_;
            p.axpy(radius_ * std::cos(theta), e1_);
            p.axpy(radius_ * std::sin(theta), e2_);
            return p;
        }
        case Kind::polyline: {
            const double target = t * cumlen_.back();
            std::size_t seg = 0;
            while (seg + 2 < cumlen_.size() && cumlen_[seg + 1] < target) ++seg;
            const double seg_len = cumlen_[seg + 1] - cumlen_[seg];
            const double frac = seg_len > 0.0 ? (target - cumlen_[seg]) / seg_len : 0.0;
            Vector p = vertices_[seg];
            p.axpy(frac, vertices_[seg + 1] - vertices_[seg]);
            return p;
        }
    }
    throw RangeError("bad curve kind");
}

Vector CurveSpec::point(double t) const { return point_raw(sigma(t)); }

Trajectory CurveSpec::sample(int steps) const {
    if (steps < 1) throw RangeError("sample needs K >= 1");
    std::vector<Vector> states;
    states.reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) {
        states.push_back(point(static_cast<double>(k) / steps));
    }
    return Trajectory(std::move(states));
}

}  // namespace otflow
