#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "otflow/image.hpp"
#include "otflow/rng.hpp"
#include "otflow/tensor.hpp"

namespace otflow {

// ---------------------------------------------------------------------------
// Scalar scores f(x) with analytic input gradients.
// ---------------------------------------------------------------------------

class ScoreModel {
public:
    virtual ~ScoreModel() = default;
    virtual int dim() const = 0;
    virtual std::string kind() const = 0;
    virtual double value(const Vector& x) const = 0;
    virtual Vector gradient(const Vector& x) const = 0;

protected:
    void check_dim(const Vector& x) const;
};

using ScorePtr = std::shared_ptr<const ScoreModel>;

// f(x) = sum_i sin(x_i); gradient coordinate i is cos(x_i).
class AdditiveSinScore final : public ScoreModel {
public:
    explicit AdditiveSinScore(int dim) : dim_(dim) {}
    int dim() const override { return dim_; }
    std::string kind() const override { return "additive-sin"; }
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;

private:
    int dim_;
};

// f(x) = w . x + b
class LinearScore final : public ScoreModel {
public:
    explicit LinearScore(Vector w, double b = 0.0) : w_(std::move(w)), b_(b) {}
    int dim() const override { return w_.dim(); }
    std::string kind() const override { return "linear"; }
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;
    const Vector& weights() const { return w_; }

private:
    Vector w_;
    double b_;
};

// f(x) = x^T H x / 2 with symmetric positive definite H; gradient H x.
class QuadraticScore final : public ScoreModel {
public:
    explicit QuadraticScore(SpdMatrix h) : h_(std::move(h)) {}
    int dim() const override { return h_.dim(); }
    std::string kind() const override { return "quadratic"; }
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;
    // Spectral norm of the (constant) Hessian; used by residual bounds.
    double hessian_bound() const;

private:
    SpdMatrix h_;
};

// a*f + b*g kept structurally so attribution can distribute over the parts.
class CompositeScore final : public ScoreModel {
public:
    CompositeScore(double a, ScorePtr f, double b, ScorePtr g);
    int dim() const override { return f_->dim(); }
    std::string kind() const override { return "composite"; }
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;

    double coeff_f() const { return a_; }
    double coeff_g() const { return b_; }
    const ScorePtr& part_f() const { return f_; }
    const ScorePtr& part_g() const { return g_; }

private:
    double a_, b_;
    ScorePtr f_, g_;
};

// ---------------------------------------------------------------------------
// Multilayer perceptron with hand-written reverse-mode gradients. Hidden
// activations are tanh; the output layer is linear.
// ---------------------------------------------------------------------------

enum class TimeEmbedding { append_t, fourier };

struct MlpSpec {
    int input_dim = 0;    // raw coordinates, before time embedding
    int output_dim = 1;
    std::vector<int> hidden{64, 64};
    TimeEmbedding time_embedding = TimeEmbedding::append_t;
    int fourier_features = 8;  // used only by the fourier embedding, even
    bool with_time = false;    // velocity fields embed t, scores do not

    int embedded_dim() const;
    std::vector<int> layer_sizes() const;  // embedded input, hidden..., output
};

class Mlp {
public:
    Mlp() = default;
    // Symmetric uniform init scaled by 1/sqrt(fan_in).
    Mlp(const MlpSpec& spec, RngStream& rng);

    const MlpSpec& spec() const { return spec_; }
    int n_params() const;

    Vector forward(const Vector& embedded_input) const;
    // Scalar-output convenience.
    double forward_scalar(const Vector& embedded_input) const;
    // d(output[0])/d(input) for scalar-output networks.
    Vector input_gradient(const Vector& embedded_input) const;

    // Gradients of ||forward(x) - target||^2 with respect to every weight
    // and bias, accumulated into `grad` (same shape as the parameter list).
    // Returns the squared-error loss for this sample.
    double sq_err_param_grad(const Vector& embedded_input, const Vector& target,
                             std::vector<double>& grad) const;

    std::vector<double> flat_params() const;
    void set_flat_params(const std::vector<double>& p);

    std::vector<Matrix>& weights() { return w_; }
    std::vector<Vector>& biases() { return b_; }
    const std::vector<Matrix>& weights() const { return w_; }
    const std::vector<Vector>& biases() const { return b_; }

private:
    MlpSpec spec_;
    std::vector<Matrix> w_;
    std::vector<Vector> b_;
};

Vector embed_time(const MlpSpec& spec, const Vector& x, double t);

// Fixed random MLP used as a nonlinear test score.
class MlpScore final : public ScoreModel {
public:
    MlpScore(const MlpSpec& spec, RngStream& rng);
    int dim() const override { return net_.spec().input_dim; }
    std::string kind() const override { return "mlp"; }
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;
    const Mlp& net() const { return net_; }

private:
    Mlp net_;
};

// Affine score of pooled template-filter responses over a grid image. The
// templates are fixed 3x3 stencils (edges, center-surround, smoothing), each
// pooled by a global mean, so the score is differentiable in every pixel.
class GridLogitScore final : public ScoreModel {
public:
    GridLogitScore(int height, int width);
    int dim() const override { return h_ * w_; }
    std::string kind() const override { return "grid-logit"; }
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;
    int height() const { return h_; }
    int width() const { return w_; }

private:
    int h_, w_;
    std::vector<Matrix> filters_;  // 3x3 stencils
    Vector feature_weights_;
    double bias_;
};

// ---------------------------------------------------------------------------
// Time-dependent velocity fields v(x, t), t in [0, 1].
// ---------------------------------------------------------------------------

class VelocityField {
public:
    virtual ~VelocityField() = default;
    virtual int dim() const = 0;
    virtual std::string kind() const = 0;
    // Validates dimensions and the time range, then delegates to eval_impl.
    Vector eval(const Vector& x, double t) const;

protected:
    virtual Vector eval_impl(const Vector& x, double t) const = 0;
};

using FieldPtr = std::shared_ptr<const VelocityField>;

class ConstantField final : public VelocityField {
public:
    explicit ConstantField(Vector c) : c_(std::move(c)) {}
    int dim() const override { return c_.dim(); }
    std::string kind() const override { return "constant"; }

protected:
    Vector eval_impl(const Vector&, double) const override { return c_; }

private:
    Vector c_;
};

// v(x, t) = A x + b, time independent.
class AffineField final : public VelocityField {
public:
    AffineField(Matrix a, Vector b);
    int dim() const override { return b_.dim(); }
    std::string kind() const override { return "affine"; }

protected:
    Vector eval_impl(const Vector& x, double) const override;

private:
    Matrix a_;
    Vector b_;
};

// Constant displacement z1 - z0 of a fixed endpoint pair.
class StraightPairField final : public VelocityField {
public:
    StraightPairField(const Vector& z0, const Vector& z1);
    int dim() const override { return delta_.dim(); }
    std::string kind() const override { return "straight-pair"; }

protected:
    Vector eval_impl(const Vector&, double) const override { return delta_; }

private:
    Vector delta_;
};

// Arbitrary callable field; test fixture for perturbation studies.
class LambdaField final : public VelocityField {
public:
    using Fn = std::function<Vector(const Vector&, double)>;
    LambdaField(int dim, std::string kind, Fn fn)
        : dim_(dim), kind_(std::move(kind)), fn_(std::move(fn)) {}
    int dim() const override { return dim_; }
    std::string kind() const override { return kind_; }

protected:
    Vector eval_impl(const Vector& x, double t) const override { return fn_(x, t); }

private:
    int dim_;
    std::string kind_;
    Fn fn_;
};

// base + eps * u with u a bounded perturbation field.
class PerturbedField final : public VelocityField {
public:
    PerturbedField(FieldPtr base, FieldPtr bump, double eps);
    int dim() const override { return base_->dim(); }
    std::string kind() const override { return "perturbed"; }

protected:
    Vector eval_impl(const Vector& x, double t) const override;

private:
    FieldPtr base_;
    FieldPtr bump_;
    double eps_;
};

// Learned field: MLP over the time-embedded input.
class MlpFlowField final : public VelocityField {
public:
    MlpFlowField(const MlpSpec& spec, RngStream& rng);
    explicit MlpFlowField(Mlp net);
    int dim() const override { return net_.spec().input_dim; }
    std::string kind() const override { return "mlp-flow"; }

    const Mlp& net() const { return net_; }
    Mlp& net() { return net_; }

protected:
    Vector eval_impl(const Vector& x, double t) const override;

private:
    Mlp net_;
};

}  // namespace otflow
