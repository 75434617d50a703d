#pragma once

#include <string>
#include <vector>

#include "otflow/models.hpp"
#include "otflow/ode.hpp"

namespace otflow {

// Per-coordinate credits for the score change along one discrete path,
// together with the endpoints they explain.
struct AttributionVector {
    Vector values;
    Vector endpoint_start;
    Vector endpoint_end;
    double score_start = 0.0;
    double score_end = 0.0;
    int steps = 0;
    std::string method;

    int dim() const { return values.dim(); }
    double sum() const;
    // score_end - score_start, the quantity the credits should add up to.
    double score_delta() const { return score_end - score_start; }
};

enum class QuadratureRule { left, midpoint };

// Riemann-sum credit allocation along a stored path: coordinate i receives
// sum_k d_i f(x_k) * (x_{k+1,i} - x_{k,i}) with gradients taken at the left
// state (default) or at segment midpoints. Composite scores distribute: the
// allocation is linear in the score, so a*f + b*g is credited as the same
// combination of the parts' credits.
AttributionVector path_attribution(const ScoreModel& score,
                                   const Trajectory& traj,
                                   QuadratureRule rule = QuadratureRule::left,
                                   const std::string& method_tag = "path");

// Full pipeline: recover the reference endpoint by integrating the flow
// backward from x1, then allocate along the stored trajectory.
AttributionVector transport_flow_attribution(
    const ScoreModel& score, const VelocityField& field, const Vector& x1,
    int steps, Integrator method = Integrator::rk4,
    EndpointMode mode = EndpointMode::reversed_backward,
    QuadratureRule rule = QuadratureRule::left);

// Straight-path special case from a fixed baseline.
AttributionVector integrated_gradients(const ScoreModel& score,
                                       const Vector& baseline, const Vector& x1,
                                       int steps,
                                       QuadratureRule rule = QuadratureRule::left);

// Mean absolute gap between the credit sum and the endpoint score change.
double completeness_residual(const std::vector<AttributionVector>& attrs);

// Batch attribution, parallel across inputs (each input is independent).
std::vector<AttributionVector> transport_flow_attribution_batch(
    const ScoreModel& score, const VelocityField& field,
    const std::vector<Vector>& inputs, int steps,
    Integrator method = Integrator::rk4,
    EndpointMode mode = EndpointMode::reversed_backward,
    QuadratureRule rule = QuadratureRule::left);

}  // namespace otflow
