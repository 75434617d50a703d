#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "otflow/models.hpp"
#include "otflow/ode.hpp"
#include "otflow/ot_oracle.hpp"
#include "otflow/rng.hpp"

namespace otflow {

// ---------------------------------------------------------------------------
// Couplings and samplers
// ---------------------------------------------------------------------------

enum class CouplingKind { independent, reflow_generated, deterministic_map };

struct Coupling {
    std::vector<std::pair<Vector, Vector>> pairs;
    CouplingKind kind = CouplingKind::independent;

    int dim() const;
    // Mean squared endpoint displacement E||z1 - z0||^2.
    double transport_cost() const;
};

// Draws (z0, z1) pairs for training batches.
class CouplingSampler {
public:
    virtual ~CouplingSampler() = default;
    virtual int dim() const = 0;
    virtual std::pair<Vector, Vector> draw(RngStream& rng) const = 0;
};

// Independent draws from two endpoint distributions.
class PointSampler {
public:
    virtual ~PointSampler() = default;
    virtual int dim() const = 0;
    virtual Vector draw(RngStream& rng) const = 0;
};

class GaussianPointSampler final : public PointSampler {
public:
    explicit GaussianPointSampler(Gaussian g) : g_(std::move(g)) {}
    int dim() const override { return g_.dim(); }
    Vector draw(RngStream& rng) const override { return g_.sample(rng); }

private:
    Gaussian g_;
};

class StdNormalSampler final : public PointSampler {
public:
    explicit StdNormalSampler(int dim) : dim_(dim) {}
    int dim() const override { return dim_; }
    Vector draw(RngStream& rng) const override {
        return Vector::from(rng.normal_vector(dim_));
    }

private:
    int dim_;
};

class IndependentCoupling final : public CouplingSampler {
public:
    IndependentCoupling(std::shared_ptr<const PointSampler> p0,
                        std::shared_ptr<const PointSampler> p1);
    int dim() const override { return p0_->dim(); }
    std::pair<Vector, Vector> draw(RngStream& rng) const override;

private:
    std::shared_ptr<const PointSampler> p0_;
    std::shared_ptr<const PointSampler> p1_;
};

// z1 = map(z0) for a deterministic transport map.
class DeterministicMapCoupling final : public CouplingSampler {
public:
    using MapFn = std::function<Vector(const Vector&)>;
    DeterministicMapCoupling(std::shared_ptr<const PointSampler> p0, MapFn map);
    int dim() const override { return p0_->dim(); }
    std::pair<Vector, Vector> draw(RngStream& rng) const override;

private:
    std::shared_ptr<const PointSampler> p0_;
    MapFn map_;
};

// Uniform resampling from a stored pair list (reflow couplings).
class PairListCoupling final : public CouplingSampler {
public:
    explicit PairListCoupling(Coupling coupling);
    int dim() const override { return coupling_.dim(); }
    std::pair<Vector, Vector> draw(RngStream& rng) const override;

private:
    Coupling coupling_;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    int steps = 4000;
    int batch = 128;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    bool cosine_decay = true;
    int checkpoint_every = 0;  // 0 disables intermediate checkpoints
    std::uint64_t seed = 0;
};

struct Checkpoint {
    int iteration = 0;
    Mlp net;
    double running_loss = 0.0;
};

struct TrainResult {
    std::shared_ptr<MlpFlowField> field;
    std::vector<Checkpoint> checkpoints;  // includes the final state
    std::vector<double> loss_history;     // one batch loss per step
};

struct BatchSample {
    Vector z0;
    Vector z1;
    double t = 0.0;
};

// Mean squared regression error of the field on interpolated states,
// ||v((1-t) z0 + t z1, t) - (z1 - z0)||^2, plus its parameter gradient.
// The per-sample terms are folded with a fixed chunk tree, so results are
// identical for any worker count.
double rf_loss_batch(const Mlp& net, const std::vector<BatchSample>& batch,
                     std::vector<double>& grad);

// Adam on the flow regression; t is uniform on [0, 1] per sample, batches are
// drawn from the coupling sampler, and everything is derived from cfg.seed.
TrainResult train_flow(const CouplingSampler& coupling, const MlpSpec& spec,
                       const TrainConfig& cfg);

// Simulates the field forward from n fresh p0 draws and returns the induced
// endpoint pairs.
Coupling reflow(const VelocityField& field, const PointSampler& p0, int n_pairs,
                int steps, Integrator method, RngStream& rng);

}  // namespace otflow
