#include "otflow/rectflow.hpp"

#include <cmath>

#include "otflow/parallel.hpp"

namespace otflow {

int Coupling::dim() const {
    if (pairs.empty()) throw EmptyInput("coupling has no pairs");
    return pairs.front().first.dim();
}

double Coupling::transport_cost() const {
    if (pairs.empty()) throw EmptyInput("coupling has no pairs");
    double s = 0.0;
    for (const auto& [z0, z1] : pairs) s += norm2_sq(z1 - z0);
    return s / static_cast<double>(pairs.size());
}

IndependentCoupling::IndependentCoupling(std::shared_ptr<const PointSampler> p0,
                                         std::shared_ptr<const PointSampler> p1)
    : p0_(std::move(p0)), p1_(std::move(p1)) {
    if (p0_->dim() != p1_->dim()) throw DimMismatch("coupling endpoint dims");
}

std::pair<Vector, Vector> IndependentCoupling::draw(RngStream& rng) const {
    Vector z0 = p0_->draw(rng);
    Vector z1 = p1_->draw(rng);
    return {std::move(z0), std::move(z1)};
}

DeterministicMapCoupling::DeterministicMapCoupling(
    std::shared_ptr<const PointSampler> p0, MapFn map)
    : p0_(std::move(p0)), map_(std::move(map)) {}

std::pair<Vector, Vector> DeterministicMapCoupling::draw(RngStream& rng) const {
    Vector z0 = p0_->draw(rng);
    Vector z1 = map_(z0);
    return {std::move(z0), std::move(z1)};
}

PairListCoupling::PairListCoupling(Coupling coupling)
    : coupling_(std::move(coupling)) {
    if (coupling_.pairs.empty()) throw EmptyInput("pair list coupling is empty");
}

std::pair<Vector, Vector> PairListCoupling::draw(RngStream& rng) const {
    const std::size_t i = rng.next_below(coupling_.pairs.size());
    return coupling_.pairs[i];
}

// ---------------------------------------------------------------------------
// Loss and training
// ---------------------------------------------------------------------------

namespace {
constexpr std::size_t kGradChunk = 8;

struct GradAcc {
    double loss = 0.0;
    std::vector<double> grad;
};
}  // namespace

double rf_loss_batch(const Mlp& net, const std::vector<BatchSample>& batch,
                     std::vector<double>& grad) {
    if (batch.empty()) throw EmptyInput("rf_loss_batch needs samples");
    const std::size_t n_params = static_cast<std::size_t>(net.n_params());
    grad.assign(n_params, 0.0);

    const auto total = par::chunked_reduce<GradAcc>(
        batch.size(), kGradChunk,
        [&] {
            GradAcc a;
            a.grad.assign(n_params, 0.0);
            return a;
        },
        [&](GradAcc& acc, std::size_t i) {
            const BatchSample& s = batch[i];
            if (!(s.t >= 0.0 && s.t <= 1.0)) {
                throw TimeOutOfRange("batch sample time");
            }
            require_same_dim(s.z0, s.z1, "batch pair");
            Vector xt = s.z0;
            xt *= 1.0 - s.t;
            xt.axpy(s.t, s.z1);
            const Vector target = s.z1 - s.z0;
            acc.loss += net.sq_err_param_grad(embed_time(net.spec(), xt, s.t),
                                              target, acc.grad);
        },
        [](GradAcc& total_acc, const GradAcc& acc) {
            if (total_acc.grad.empty()) {
                total_acc.grad.assign(acc.grad.size(), 0.0);
            }
            total_acc.loss += acc.loss;
            for (std::size_t p = 0; p < acc.grad.size(); ++p) {
                total_acc.grad[p] += acc.grad[p];
            }
        });

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (std::size_t p = 0; p < n_params; ++p) grad[p] = total.grad[p] * inv_n;
    return total.loss * inv_n;
}

TrainResult train_flow(const CouplingSampler& coupling, const MlpSpec& spec,
                       const TrainConfig& cfg) {
    if (cfg.steps < 0 || cfg.batch < 1) throw RangeError("bad train config");
    if (!(cfg.lr > 0.0)) throw RangeError("learning rate must be > 0");

    MlpSpec flow_spec = spec;
    flow_spec.with_time = true;
    flow_spec.output_dim = spec.input_dim;
    if (flow_spec.input_dim != coupling.dim()) {
        throw DimMismatch("mlp spec dim vs coupling dim");
    }

    RngStream init_rng = RngStream(cfg.seed, 0).substream(0xF10);
    RngStream data_rng = RngStream(cfg.seed, 0).substream(0xDA7A);

    Mlp net(flow_spec, init_rng);
    const std::size_t n_params = static_cast<std::size_t>(net.n_params());
    std::vector<double> m(n_params, 0.0);
    std::vector<double> v(n_params, 0.0);
    std::vector<double> grad;
    std::vector<double> params = net.flat_params();

    TrainResult result;
    result.loss_history.reserve(static_cast<std::size_t>(cfg.steps));
    double window_loss = 0.0;
    int window_count = 0;

    std::vector<BatchSample> batch(static_cast<std::size_t>(cfg.batch));
    for (int step = 0; step < cfg.steps; ++step) {
        // Batch materialization is serial so the draw order is fixed; the
        // gradient accumulation below fans out to workers.
        for (auto& s : batch) {
            auto [z0, z1] = coupling.draw(data_rng);
            s.z0 = std::move(z0);
            s.z1 = std::move(z1);
            s.t = data_rng.next_double();
        }
        const double loss = rf_loss_batch(net, batch, grad);
        if (!std::isfinite(loss)) {
            throw NonFiniteLoss("training diverged at step " +
                                std::to_string(step));
        }
        result.loss_history.push_back(loss);
        window_loss += loss;
        ++window_count;

        double lr = cfg.lr;
        if (cfg.cosine_decay && cfg.steps > 1) {
            lr *= 0.5 * (1.0 + std::cos(3.14159265358979323846 * step /
                                        (cfg.steps - 1)));
        }
        const double t1 = 1.0 - std::pow(cfg.beta1, step + 1);
        const double t2 = 1.0 - std::pow(cfg.beta2, step + 1);
        for (std::size_t p = 0; p < n_params; ++p) {
            m[p] = cfg.beta1 * m[p] + (1.0 - cfg.beta1) * grad[p];
            v[p] = cfg.beta2 * v[p] + (1.0 - cfg.beta2) * grad[p] * grad[p];
            params[p] -= lr * (m[p] / t1) / (std::sqrt(v[p] / t2) + cfg.adam_eps);
        }
        net.set_flat_params(params);

        if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 &&
            step + 1 < cfg.steps) {
            result.checkpoints.push_back(
                Checkpoint{step + 1, net, window_loss / window_count});
            window_loss = 0.0;
            window_count = 0;
        }
    }

    const double final_running =
        window_count > 0 ? window_loss / window_count : 0.0;
    result.checkpoints.push_back(Checkpoint{cfg.steps, net, final_running});
    result.field = std::make_shared<MlpFlowField>(std::move(net));
    return result;
}

Coupling reflow(const VelocityField& field, const PointSampler& p0, int n_pairs,
                int steps, Integrator method, RngStream& rng) {
    if (n_pairs < 1) throw EmptyInput("reflow needs n >= 1 pairs");
    if (field.dim() != p0.dim()) throw DimMismatch("reflow field vs sampler");

    std::vector<Vector> starts;
    starts.reserve(static_cast<std::size_t>(n_pairs));
    for (int i = 0; i < n_pairs; ++i) starts.push_back(p0.draw(rng));

    Coupling out;
    out.kind = CouplingKind::reflow_generated;
    out.pairs.resize(static_cast<std::size_t>(n_pairs));
    par::parallel_for(static_cast<std::size_t>(n_pairs), [&](std::size_t i) {
        const Trajectory traj = integrate_forward(field, starts[i], steps, method);
        out.pairs[i] = {starts[i], traj.end()};
    });
    return out;
}

}  // namespace otflow
