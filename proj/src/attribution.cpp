#include "otflow/attribution.hpp"

#include <cmath>

#include "otflow/parallel.hpp"

namespace otflow {

double AttributionVector::sum() const {
    double s = 0.0;
    for (int i = 0; i < values.dim(); ++i) s += values[i];
    return s;
}

namespace {

// Credits only; endpoints and scores are attached by the caller.
Vector accumulate_credits(const ScoreModel& score, const Trajectory& traj,
                          QuadratureRule rule) {
    if (const auto* comp = dynamic_cast<const CompositeScore*>(&score)) {
        // The Riemann sum is linear in the gradient, so composites are
        // credited part by part; this keeps the linearity axiom exact.
        Vector vf = accumulate_credits(*comp->part_f(), traj, rule);
        const Vector vg = accumulate_credits(*comp->part_g(), traj, rule);
        vf *= comp->coeff_f();
        vf.axpy(comp->coeff_g(), vg);
        return vf;
    }

    const int d = traj.dim();
    Vector credits(d);
    for (int k = 0; k < traj.steps(); ++k) {
        Vector g;
        if (rule == QuadratureRule::left) {
            g = score.gradient(traj.state(k));
        } else {
            Vector mid = traj.state(k);
            mid += traj.state(k + 1);
            mid *= 0.5;
            g = score.gradient(mid);
        }
        for (int i = 0; i < d; ++i) {
            credits[i] += g[i] * (traj.state(k + 1)[i] - traj.state(k)[i]);
        }
    }
    return credits;
}

}  // namespace

AttributionVector path_attribution(const ScoreModel& score,
                                   const Trajectory& traj, QuadratureRule rule,
                                   const std::string& method_tag) {
    if (traj.dim() != score.dim()) {
        throw DimMismatch("trajectory dim vs score dim");
    }
    AttributionVector out;
    out.values = accumulate_credits(score, traj, rule);
    out.endpoint_start = traj.start();
    out.endpoint_end = traj.end();
    out.score_start = score.value(traj.start());
    out.score_end = score.value(traj.end());
    out.steps = traj.steps();
    out.method = method_tag;
    return out;
}

AttributionVector transport_flow_attribution(const ScoreModel& score,
                                             const VelocityField& field,
                                             const Vector& x1, int steps,
                                             Integrator method,
                                             EndpointMode mode,
                                             QuadratureRule rule) {
    const Trajectory traj =
        reference_endpoint_trajectory(field, x1, steps, method, mode);
    return path_attribution(score, traj, rule, "transport-flow");
}

AttributionVector integrated_gradients(const ScoreModel& score,
                                       const Vector& baseline, const Vector& x1,
                                       int steps, QuadratureRule rule) {
    require_same_dim(baseline, x1, "integrated_gradients endpoints");
    const Trajectory traj = CurveSpec::straight(baseline, x1).sample(steps);
    return path_attribution(score, traj, rule, "ig");
}

double completeness_residual(const std::vector<AttributionVector>& attrs) {
    if (attrs.empty()) throw EmptyInput("completeness_residual needs >= 1 entry");
    double total = 0.0;
    for (const auto& a : attrs) {
        total += std::fabs(a.sum() - a.score_delta());
    }
    return total / static_cast<double>(attrs.size());
}

std::vector<AttributionVector> transport_flow_attribution_batch(
    const ScoreModel& score, const VelocityField& field,
    const std::vector<Vector>& inputs, int steps, Integrator method,
    EndpointMode mode, QuadratureRule rule) {
    std::vector<AttributionVector> out(inputs.size());
    par::parallel_for(inputs.size(), [&](std::size_t i) {
        out[i] = transport_flow_attribution(score, field, inputs[i], steps,
                                            method, mode, rule);
    });
    return out;
}

}  // namespace otflow
