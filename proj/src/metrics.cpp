#include "otflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace otflow {

namespace {
constexpr double kEps = 1e-12;
}

PathGeometryReport path_geometry(const Trajectory& traj,
                                 const VelocityField* field) {
    const int k_steps = traj.steps();
    const double dt = traj.dt();
    PathGeometryReport rep;

    double length = 0.0;
    double action = 0.0;
    for (int k = 0; k < k_steps; ++k) {
        const double seg_sq = norm2_sq(traj.state(k + 1) - traj.state(k));
        length += std::sqrt(seg_sq);
        action += seg_sq / dt;
    }
    rep.action = action;

    const double displacement = norm2(traj.end() - traj.start());
    if (displacement > 0.0) rep.gps = length / displacement;

    if (field != nullptr) {
        // The residual is formed as x_{k+1} - (x_k + dt v) before scaling,
        // mirroring the explicit-Euler update expression exactly, so a
        // forward-Euler trajectory measured against its own field cancels
        // bit for bit.
        const double scale = static_cast<double>(k_steps);
        double fce = 0.0;
        for (int k = 0; k < k_steps; ++k) {
            Vector predicted = traj.state(k);
            predicted.axpy(dt, field->eval(traj.state(k), traj.time(k)));
            Vector diff = traj.state(k + 1) - predicted;
            diff *= scale;
            fce += norm2_sq(diff);
        }
        rep.fce = fce / k_steps;
    }

    if (k_steps >= 2) {
        double curv = 0.0;
        for (int k = 1; k < k_steps; ++k) {
            Vector acc = traj.state(k + 1);
            acc.axpy(-2.0, traj.state(k));
            acc += traj.state(k - 1);
            acc *= 1.0 / (dt * dt);
            curv += norm2_sq(acc) * dt;
        }
        rep.curvature = curv;
    }
    return rep;
}

double relative_field_error(const Trajectory& states,
                            const VelocityField& method_field,
                            const VelocityField& reference_field) {
    double num = 0.0;
    double den = 0.0;
    for (int k = 0; k < states.steps(); ++k) {
        const Vector& x = states.state(k);
        const double t = states.time(k);
        const Vector ref = reference_field.eval(x, t);
        num += norm2_sq(method_field.eval(x, t) - ref);
        den += norm2_sq(ref);
    }
    return std::sqrt(num) / (std::sqrt(den) + kEps);
}

double relative_attribution_error(const AttributionVector& method,
                                  const AttributionVector& reference) {
    require_same_dim(method.values, reference.values, "attribution error");
    return norm2(method.values - reference.values) /
           (norm2(reference.values) + kEps);
}

OracleComparison oracle_comparison(const Trajectory& method_traj,
                                   const Trajectory& oracle_traj,
                                   const VelocityField& method_field,
                                   const VelocityField& oracle_field,
                                   const AttributionVector& method_attr,
                                   const AttributionVector& oracle_attr,
                                   double oracle_action_ref) {
    if (method_traj.dim() != oracle_traj.dim()) {
        throw DimMismatch("oracle_comparison trajectory dims");
    }
    OracleComparison out;
    out.action_gap = (path_geometry(method_traj).action - oracle_action_ref) /
                     (oracle_action_ref + kEps);
    out.field_error = relative_field_error(method_traj, method_field, oracle_field);
    out.attribution_error = relative_attribution_error(method_attr, oracle_attr);
    return out;
}

double satv(const GridImage& attr_map, const GridImage& image, double alpha) {
    require_same_shape(attr_map, image, "satv");
    if (!(alpha > 0.0)) throw RangeError("satv alpha must be > 0");
    const ImageGradient ga = forward_differences(attr_map);
    const ImageGradient gi = forward_differences(image);
    double total = 0.0;
    for (int u = 0; u < image.height(); ++u) {
        for (int v = 0; v < image.width(); ++v) {
            const double s =
                std::fabs(ga.du.at(u, v)) + std::fabs(ga.dv.at(u, v));
            const double e = std::hypot(gi.du.at(u, v), gi.dv.at(u, v));
            total += s * std::exp(-alpha * e);
        }
    }
    return total;
}

double eas(const GridImage& attr_map, const GridImage& image) {
    require_same_shape(attr_map, image, "eas");
    const ImageGradient ga = forward_differences(attr_map);
    const ImageGradient gi = forward_differences(image);
    double num = 0.0;
    double den = 0.0;
    for (int u = 0; u < image.height(); ++u) {
        for (int v = 0; v < image.width(); ++v) {
            const double s =
                std::fabs(ga.du.at(u, v)) + std::fabs(ga.dv.at(u, v));
            const double e = std::hypot(gi.du.at(u, v), gi.dv.at(u, v));
            num += s * e;
            den += s;
        }
    }
    return num / (den + kEps);
}

namespace {

DeletionCurve deletion_impl(const ScoreModel& score, const GridImage& image,
                            const std::vector<int>& ranking,
                            Replacement replacement, int fraction_steps,
                            double blur_sigma) {
    require_single_channel(image, "deletion_curve");
    const int n = image.pixel_count();
    if (static_cast<int>(ranking.size()) != n) {
        throw DimMismatch("ranking size vs pixel count");
    }
    if (fraction_steps < 1) throw RangeError("deletion needs J >= 1");
    if (score.dim() != n) throw DimMismatch("score dim vs pixel count");

    std::vector<double> replacement_values(static_cast<std::size_t>(n), 0.0);
    if (replacement == Replacement::blur) {
        replacement_values = gaussian_blur(image, blur_sigma).raw();
    }

    DeletionCurve curve;
    curve.replacement = replacement;
    Vector working = image.to_vector();
    int replaced = 0;
    for (int j = 0; j <= fraction_steps; ++j) {
        const double p = static_cast<double>(j) / fraction_steps;
        const int target = static_cast<int>(std::llround(p * n));
        for (; replaced < target; ++replaced) {
            const int px = ranking[static_cast<std::size_t>(replaced)];
            working[px] = replacement_values[static_cast<std::size_t>(px)];
        }
        curve.fractions.push_back(p);
        curve.scores.push_back(score.value(working));
    }
    for (std::size_t j = 0; j + 1 < curve.scores.size(); ++j) {
        curve.auc += (curve.fractions[j + 1] - curve.fractions[j]) * 0.5 *
                     (curve.scores[j] + curve.scores[j + 1]);
    }
    return curve;
}

}  // namespace

DeletionCurve deletion_curve(const ScoreModel& score, const GridImage& image,
                             const AttributionVector& attr,
                             Replacement replacement, int fraction_steps,
                             double blur_sigma) {
    const int n = image.pixel_count();
    if (attr.dim() != n) throw DimMismatch("attribution dim vs pixel count");
    std::vector<int> ranking(static_cast<std::size_t>(n));
    std::iota(ranking.begin(), ranking.end(), 0);
    std::stable_sort(ranking.begin(), ranking.end(), [&](int a, int b) {
        return attr.values[a] > attr.values[b];
    });
    return deletion_impl(score, image, ranking, replacement, fraction_steps,
                         blur_sigma);
}

DeletionCurve deletion_curve_ranked(const ScoreModel& score,
                                    const GridImage& image,
                                    const std::vector<int>& ranking,
                                    Replacement replacement, int fraction_steps,
                                    double blur_sigma) {
    return deletion_impl(score, image, ranking, replacement, fraction_steps,
                         blur_sigma);
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

namespace {

GridImage normalize_max_abs(const GridImage& img) {
    GridImage out = img;
    const double m = img.max_abs();
    if (m > 0.0) {
        for (auto& v : out.raw()) v /= m;
    }
    return out;
}

std::vector<double> average_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) throw DimMismatch("pearson inputs");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double num = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        num += da * db;
        va += da * da;
        vb += db * db;
    }
    const double den = std::sqrt(va) * std::sqrt(vb);
    return den > 0.0 ? num / den : 0.0;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson(average_ranks(a), average_ranks(b));
}

double ssim(const GridImage& a, const GridImage& b) {
    require_same_shape(a, b, "ssim");
    require_single_channel(a, "ssim");
    const int h = a.height();
    const int w = a.width();

    double lo = a.raw()[0], hi = a.raw()[0];
    for (double v : a.raw()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : b.raw()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = std::max(hi - lo, kEps);
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);

    constexpr int kRadius = 5;  // 11x11 window
    constexpr double kSigma = 1.5;
    double kernel[2 * kRadius + 1][2 * kRadius + 1];
    for (int i = -kRadius; i <= kRadius; ++i) {
        for (int j = -kRadius; j <= kRadius; ++j) {
            kernel[i + kRadius][j + kRadius] =
                std::exp(-0.5 * (i * i + j * j) / (kSigma * kSigma));
        }
    }

    double total = 0.0;
    for (int u = 0; u < h; ++u) {
        for (int v = 0; v < w; ++v) {
            // Window clipped at the boundary, weights renormalized.
            double wsum = 0.0, mu_a = 0.0, mu_b = 0.0;
            for (int i = -kRadius; i <= kRadius; ++i) {
                for (int j = -kRadius; j <= kRadius; ++j) {
                    const int uu = u + i, vv = v + j;
                    if (uu < 0 || uu >= h || vv < 0 || vv >= w) continue;
                    const double kw = kernel[i + kRadius][j + kRadius];
                    wsum += kw;
                    mu_a += kw * a.at(uu, vv);
                    mu_b += kw * b.at(uu, vv);
                }
            }
            mu_a /= wsum;
            mu_b /= wsum;
            double var_a = 0.0, var_b = 0.0, cov = 0.0;
            for (int i = -kRadius; i <= kRadius; ++i) {
                for (int j = -kRadius; j <= kRadius; ++j) {
                    const int uu = u + i, vv = v + j;
                    if (uu < 0 || uu >= h || vv < 0 || vv >= w) continue;
                    const double kw = kernel[i + kRadius][j + kRadius] / wsum;
                    const double da = a.at(uu, vv) - mu_a;
                    const double db = b.at(uu, vv) - mu_b;
                    var_a += kw * da * da;
                    var_b += kw * db * db;
                    cov += kw * da * db;
                }
            }
            const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            const double den =
                (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
        }
    }
    return total / (static_cast<double>(h) * w);
}

StabilityReport stability_report(const std::vector<GridImage>& attr_maps) {
    if (attr_maps.size() < 2) throw TooFewSeeds("stability needs >= 2 maps");
    for (const auto& m : attr_maps) {
        require_same_shape(attr_maps.front(), m, "stability_report");
        require_single_channel(m, "stability_report");
    }
    const std::size_t n_seeds = attr_maps.size();
    std::vector<GridImage> normed;
    normed.reserve(n_seeds);
    for (const auto& m : attr_maps) normed.push_back(normalize_max_abs(m));

    const std::size_t n_px = normed.front().raw().size();
    double var_total = 0.0;
    for (std::size_t p = 0; p < n_px; ++p) {
        double mean = 0.0;
        for (const auto& m : normed) mean += m.raw()[p];
        mean /= static_cast<double>(n_seeds);
        double ss = 0.0;
        for (const auto& m : normed) {
            const double d = m.raw()[p] - mean;
            ss += d * d;
        }
        var_total += ss / static_cast<double>(n_seeds - 1);
    }

    StabilityReport rep;
    rep.pixel_variance = var_total / static_cast<double>(n_px);

    double ssim_total = 0.0;
    double rank_total = 0.0;
    std::size_t n_pairs = 0;
    for (std::size_t i = 0; i < n_seeds; ++i) {
        for (std::size_t j = i + 1; j < n_seeds; ++j) {
            ssim_total += ssim(normed[i], normed[j]);
            rank_total += spearman(normed[i].raw(), normed[j].raw());
            ++n_pairs;
        }
    }
    rep.mean_ssim = ssim_total / static_cast<double>(n_pairs);
    rep.mean_rank_corr = rank_total / static_cast<double>(n_pairs);
    return rep;
}

}  // namespace otflow
