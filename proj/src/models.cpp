#include "otflow/models.hpp"

#include <cmath>
#include <string>

namespace otflow {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void ScoreModel::check_dim(const Vector& x) const {
    if (x.dim() != dim()) {
        throw DimMismatch(kind() + " score expects dim " + std::to_string(dim()) +
                          ", got " + std::to_string(x.dim()));
    }
}

double AdditiveSinScore::value(const Vector& x) const {
    check_dim(x);
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += std::sin(x[i]);
    return s;
}

Vector AdditiveSinScore::gradient(const Vector& x) const {
    check_dim(x);
    Vector g(dim_);
    for (int i = 0; i < dim_; ++i) g[i] = std::cos(x[i]);
    return g;
}

double LinearScore::value(const Vector& x) const {
    check_dim(x);
    return dot(w_, x) + b_;
}

Vector LinearScore::gradient(const Vector& x) const {
    check_dim(x);
    return w_;
}

double QuadraticScore::value(const Vector& x) const {
    check_dim(x);
    return 0.5 * dot(x, h_.mat().matvec(x));
}

Vector QuadraticScore::gradient(const Vector& x) const {
    check_dim(x);
    return h_.mat().matvec(x);
}

double QuadraticScore::hessian_bound() const {
    const SymEig eig = jacobi_eigen(h_.mat());
    return std::max(std::fabs(eig.values[0]),
                    std::fabs(eig.values[h_.dim() - 1]));
}

CompositeScore::CompositeScore(double a, ScorePtr f, double b, ScorePtr g)
    : a_(a), b_(b), f_(std::move(f)), g_(std::move(g)) {
    if (!f_ || !g_) throw EmptyInput("composite score needs both parts");
    if (f_->dim() != g_->dim()) throw DimMismatch("composite score parts");
}

double CompositeScore::value(const Vector& x) const {
    return a_ * f_->value(x) + b_ * g_->value(x);
}

Vector CompositeScore::gradient(const Vector& x) const {
    Vector g = f_->gradient(x);
    g *= a_;
    g.axpy(b_, g_->gradient(x));
    return g;
}

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

int MlpSpec::embedded_dim() const {
    if (!with_time) return input_dim;
    if (time_embedding == TimeEmbedding::append_t) return input_dim + 1;
    return input_dim + fourier_features;
}

std::vector<int> MlpSpec::layer_sizes() const {
    std::vector<int> sizes;
    sizes.push_back(embedded_dim());
    for (int h : hidden) sizes.push_back(h);
    sizes.push_back(output_dim);
    return sizes;
}

Vector embed_time(const MlpSpec& spec, const Vector& x, double t) {
    if (!spec.with_time) return x;
    std::vector<double> e = x.raw();
    if (spec.time_embedding == TimeEmbedding::append_t) {
        e.push_back(t);
    } else {
        for (int j = 0; j < spec.fourier_features / 2; ++j) {
            const double w = kTwoPi * std::pow(2.0, j);
            e.push_back(std::sin(w * t));
            e.push_back(std::cos(w * t));
        }
    }
    return Vector::from(std::move(e));
}

Mlp::Mlp(const MlpSpec& spec, RngStream& rng) : spec_(spec) {
    if (spec.input_dim <= 0 || spec.output_dim <= 0) {
        throw RangeError("mlp dims must be positive");
    }
    if (spec.time_embedding == TimeEmbedding::fourier &&
        spec.fourier_features % 2 != 0) {
        throw RangeError("fourier feature count must be even");
    }
    const std::vector<int> sizes = spec.layer_sizes();
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-bound, bound);
        w_.push_back(std::move(w));
        b_.emplace_back(fan_out, 0.0);
    }
}

int Mlp::n_params() const {
    int n = 0;
    for (std::size_t l = 0; l < w_.size(); ++l) {
        n += w_[l].rows() * w_[l].cols() + b_[l].dim();
    }
    return n;
}

Vector Mlp::forward(const Vector& embedded_input) const {
    Vector a = embedded_input;
    for (std::size_t l = 0; l < w_.size(); ++l) {
        Vector z = w_[l].matvec(a);
        z += b_[l];
        if (l + 1 < w_.size()) {
            for (int i = 0; i < z.dim(); ++i) z[i] = std::tanh(z[i]);
        }
        a = std::move(z);
    }
    return a;
}

double Mlp::forward_scalar(const Vector& embedded_input) const {
    return forward(embedded_input)[0];
}

Vector Mlp::input_gradient(const Vector& embedded_input) const {
    if (spec_.output_dim != 1) {
        throw DimMismatch("input_gradient requires scalar output");
    }
    // Forward pass caching post-activation values per layer.
    std::vector<Vector> acts;
    acts.push_back(embedded_input);
    for (std::size_t l = 0; l < w_.size(); ++l) {
        Vector z = w_[l].matvec(acts.back());
        z += b_[l];
        if (l + 1 < w_.size()) {
            for (int i = 0; i < z.dim(); ++i) z[i] = std::tanh(z[i]);
        }
        acts.push_back(std::move(z));
    }
    // Backward: delta holds d(out)/d(z_l).
    Vector delta(1);
    delta[0] = 1.0;
    for (std::size_t l = w_.size(); l-- > 0;) {
        Vector prev = w_[l].transposed().matvec(delta);
        if (l > 0) {
            const Vector& a = acts[l];  // tanh outputs of layer l-1
            for (int i = 0; i < prev.dim(); ++i) prev[i] *= 1.0 - a[i] * a[i];
        }
        delta = std::move(prev);
    }
    return delta;
}

double Mlp::sq_err_param_grad(const Vector& embedded_input, const Vector& target,
                              std::vector<double>& grad) const {
    if (target.dim() != spec_.output_dim) {
        throw DimMismatch("sq_err_param_grad target");
    }
    if (grad.size() != static_cast<std::size_t>(n_params())) {
        throw DimMismatch("sq_err_param_grad buffer size");
    }
    std::vector<Vector> acts;
    acts.push_back(embedded_input);
    for (std::size_t l = 0; l < w_.size(); ++l) {
        Vector z = w_[l].matvec(acts.back());
        z += b_[l];
        if (l + 1 < w_.size()) {
            for (int i = 0; i < z.dim(); ++i) z[i] = std::tanh(z[i]);
        }
        acts.push_back(std::move(z));
    }

    const Vector& out = acts.back();
    double loss = 0.0;
    Vector delta(out.dim());
    for (int i = 0; i < out.dim(); ++i) {
        const double r = out[i] - target[i];
        loss += r * r;
        delta[i] = 2.0 * r;
    }

    // Parameter offsets mirror flat_params(): per layer, W row-major then b.
    std::vector<std::size_t> offsets(w_.size());
    std::size_t off = 0;
    for (std::size_t l = 0; l < w_.size(); ++l) {
        offsets[l] = off;
        off += static_cast<std::size_t>(w_[l].rows()) * w_[l].cols() + b_[l].dim();
    }

    for (std::size_t l = w_.size(); l-- > 0;) {
        const Vector& a_in = acts[l];
        double* gw = grad.data() + offsets[l];
        double* gb = gw + static_cast<std::size_t>(w_[l].rows()) * w_[l].cols();
        for (int i = 0; i < w_[l].rows(); ++i) {
            const double di = delta[i];
            double* row = gw + static_cast<std::size_t>(i) * w_[l].cols();
            for (int j = 0; j < w_[l].cols(); ++j) row[j] += di * a_in[j];
            gb[i] += di;
        }
        if (l > 0) {
            Vector prev = w_[l].transposed().matvec(delta);
            const Vector& a = acts[l];
            for (int i = 0; i < prev.dim(); ++i) prev[i] *= 1.0 - a[i] * a[i];
            delta = std::move(prev);
        }
    }
    return loss;
}

std::vector<double> Mlp::flat_params() const {
    std::vector<double> p;
    p.reserve(static_cast<std::size_t>(n_params()));
    for (std::size_t l = 0; l < w_.size(); ++l) {
        p.insert(p.end(), w_[l].raw().begin(), w_[l].raw().end());
        p.insert(p.end(), b_[l].raw().begin(), b_[l].raw().end());
    }
    return p;
}

void Mlp::set_flat_params(const std::vector<double>& p) {
    if (p.size() != static_cast<std::size_t>(n_params())) {
        throw DimMismatch("flat parameter size");
    }
    std::size_t off = 0;
    for (std::size_t l = 0; l < w_.size(); ++l) {
        for (auto& v : w_[l].raw()) v = p[off++];
        for (auto& v : b_[l].raw()) v = p[off++];
    }
}

MlpScore::MlpScore(const MlpSpec& spec, RngStream& rng)
    : net_([&] {
          MlpSpec s = spec;
          s.output_dim = 1;
          s.with_time = false;
          return Mlp(s, rng);
      }()) {}

double MlpScore::value(const Vector& x) const {
    check_dim(x);
    return net_.forward_scalar(x);
}

Vector MlpScore::gradient(const Vector& x) const {
    check_dim(x);
    return net_.input_gradient(x);
}

// ---------------------------------------------------------------------------
// Grid logit score
// ---------------------------------------------------------------------------

namespace {

Matrix stencil(std::initializer_list<double> v) {
    Matrix m(3, 3);
    int i = 0;
    for (double x : v) {
        m(i / 3, i % 3) = x;
        ++i;
    }
    return m;
}

constexpr int kRegionsPerAxis = 4;

}  // namespace

GridLogitScore::GridLogitScore(int height, int width) : h_(height), w_(width) {
    if (height < 3 || width < 3) throw RangeError("grid-logit needs >= 3x3 grids");
    filters_.push_back(stencil({-1, 0, 1, -2, 0, 2, -1, 0, 1}));   // horizontal edge
    filters_.push_back(stencil({-1, -2, -1, 0, 0, 0, 1, 2, 1}));   // vertical edge
    filters_.push_back(stencil({0, 1, 0, 1, -4, 1, 0, 1, 0}));     // center-surround
    filters_.push_back(stencil({1. / 9, 1. / 9, 1. / 9, 1. / 9, 1. / 9,
                                1. / 9, 1. / 9, 1. / 9, 1. / 9}));  // smoothing
    filters_.push_back(stencil({0, 0, 0, 0, 1, 0, 0, 0, 0}));      // identity
    feature_weights_ = Vector{0.9, 0.7, -0.5, 1.4, 0.8};
    bias_ = 0.1;
}

namespace {

// Center-weighted region template; fixed, not trained.
double region_weight(int ru, int rv, int h, int w) {
    const double cu = (ru + 0.5) * h / kRegionsPerAxis;
    const double cv = (rv + 0.5) * w / kRegionsPerAxis;
    const double du = cu - 0.5 * h;
    const double dv = cv - 0.5 * w;
    const double sigma = 0.35 * std::min(h, w);
    return std::exp(-0.5 * (du * du + dv * dv) / (sigma * sigma));
}

}  // namespace

double GridLogitScore::value(const Vector& x) const {
    check_dim(x);
    const GridImage img = GridImage::from_vector(h_, w_, x);
    auto clampi = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };

    // Region pixel counts for mean pooling.
    std::vector<int> region_count(kRegionsPerAxis * kRegionsPerAxis, 0);
    for (int u = 0; u < h_; ++u)
        for (int v = 0; v < w_; ++v)
            ++region_count[(u * kRegionsPerAxis / h_) * kRegionsPerAxis +
                           (v * kRegionsPerAxis / w_)];

    double score = bias_;
    for (std::size_t f = 0; f < filters_.size(); ++f) {
        std::vector<double> pooled(kRegionsPerAxis * kRegionsPerAxis, 0.0);
        for (int u = 0; u < h_; ++u) {
            for (int v = 0; v < w_; ++v) {
                double resp = 0.0;
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj)
                        resp += filters_[f](di + 1, dj + 1) *
                                img.at(clampi(u + di, h_), clampi(v + dj, w_));
                pooled[(u * kRegionsPerAxis / h_) * kRegionsPerAxis +
                       (v * kRegionsPerAxis / w_)] += resp;
            }
        }
        for (int ru = 0; ru < kRegionsPerAxis; ++ru) {
            for (int rv = 0; rv < kRegionsPerAxis; ++rv) {
                const int r = ru * kRegionsPerAxis + rv;
                score += feature_weights_[static_cast<int>(f)] *
                         region_weight(ru, rv, h_, w_) * pooled[r] /
                         region_count[r];
            }
        }
    }
    return score;
}

Vector GridLogitScore::gradient(const Vector& x) const {
    check_dim(x);
    auto clampi = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };

    std::vector<int> region_count(kRegionsPerAxis * kRegionsPerAxis, 0);
    for (int u = 0; u < h_; ++u)
        for (int v = 0; v < w_; ++v)
            ++region_count[(u * kRegionsPerAxis / h_) * kRegionsPerAxis +
                           (v * kRegionsPerAxis / w_)];

    GridImage grad(h_, w_);
    for (std::size_t f = 0; f < filters_.size(); ++f) {
        const double wf = feature_weights_[static_cast<int>(f)];
        for (int u = 0; u < h_; ++u) {
            for (int v = 0; v < w_; ++v) {
                const int r = (u * kRegionsPerAxis / h_) * kRegionsPerAxis +
                              (v * kRegionsPerAxis / w_);
                const double coeff = wf *
                                     region_weight(u * kRegionsPerAxis / h_,
                                                   v * kRegionsPerAxis / w_, h_, w_) /
                                     region_count[r];
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj)
                        grad.at(clampi(u + di, h_), clampi(v + dj, w_)) +=
                            coeff * filters_[f](di + 1, dj + 1);
            }
        }
    }
    return grad.to_vector();
}

// ---------------------------------------------------------------------------
// Velocity fields
// ---------------------------------------------------------------------------

Vector VelocityField::eval(const Vector& x, double t) const {
    if (x.dim() != dim()) {
        throw DimMismatch(kind() + " field expects dim " + std::to_string(dim()) +
                          ", got " + std::to_string(x.dim()));
    }
    if (!(t >= 0.0 && t <= 1.0)) {
        throw TimeOutOfRange("t = " + std::to_string(t) + " outside [0, 1]");
    }
    return eval_impl(x, t);
}

AffineField::AffineField(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() != a_.cols() || a_.rows() != b_.dim()) {
        throw DimMismatch("affine field shapes");
    }
}

Vector AffineField::eval_impl(const Vector& x, double) const {
    Vector v = a_.matvec(x);
    v += b_;
    return v;
}

StraightPairField::StraightPairField(const Vector& z0, const Vector& z1)
    : delta_(z1) {
    require_same_dim(z0, z1, "straight-pair endpoints");
    delta_ -= z0;
}

PerturbedField::PerturbedField(FieldPtr base, FieldPtr bump, double eps)
    : base_(std::move(base)), bump_(std::move(bump)), eps_(eps) {
    if (base_->dim() != bump_->dim()) throw DimMismatch("perturbed field parts");
}

Vector PerturbedField::eval_impl(const Vector& x, double t) const {
    Vector v = base_->eval(x, t);
    v.axpy(eps_, bump_->eval(x, t));
    return v;
}

MlpFlowField::MlpFlowField(const MlpSpec& spec, RngStream& rng)
    : net_([&] {
          MlpSpec s = spec;
          s.output_dim = spec.input_dim;
          s.with_time = true;
          return Mlp(s, rng);
      }()) {}

MlpFlowField::MlpFlowField(Mlp net) : net_(std::move(net)) {
    if (!net_.spec().with_time || net_.spec().output_dim != net_.spec().input_dim) {
        throw DimMismatch("mlp-flow net must map (x, t) to dim(x)");
    }
}

Vector MlpFlowField::eval_impl(const Vector& x, double t) const {
    return net_.forward(embed_time(net_.spec(), x, t));
}

}  // namespace otflow
