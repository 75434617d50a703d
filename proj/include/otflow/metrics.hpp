#pragma once

#include <optional>
#include <vector>

#include "otflow/attribution.hpp"
#include "otflow/image.hpp"
#include "otflow/models.hpp"
#include "otflow/ode.hpp"

namespace otflow {

// ---------------------------------------------------------------------------
// Path geometry
// ---------------------------------------------------------------------------

struct PathGeometryReport {
    // Path length over endpoint displacement; absent when the endpoints
    // coincide (a degenerate path has no straightness score).
    std::optional<double> gps;
    // Mean squared mismatch between discrete velocities and the field;
    // absent when no field is supplied.
    std::optional<double> fce;
    // Discrete kinetic action sum_k ||dx_k||^2 / dt.
    double action = 0.0;
    // Squared second-difference acceleration integrated over the path;
    // absent for K < 2.
    std::optional<double> curvature;
};

PathGeometryReport path_geometry(const Trajectory& traj,
                                 const VelocityField* field = nullptr);

// ---------------------------------------------------------------------------
// Oracle comparisons
// ---------------------------------------------------------------------------

struct OracleComparison {
    double action_gap = 0.0;       // (action(method) - ref) / (ref + 1e-12)
    double field_error = 0.0;      // trajectory-restricted relative field error
    double attribution_error = 0.0;  // relative attribution error
};

// field_error compares the two fields at the method trajectory's states
// (k = 0..K-1); attribution_error compares credit vectors in the L2 norm.
OracleComparison oracle_comparison(const Trajectory& method_traj,
                                   const Trajectory& oracle_traj,
                                   const VelocityField& method_field,
                                   const VelocityField& oracle_field,
                                   const AttributionVector& method_attr,
                                   const AttributionVector& oracle_attr,
                                   double oracle_action_ref);

// Standalone pieces used by the experiment harness.
double relative_field_error(const Trajectory& states,
                            const VelocityField& method_field,
                            const VelocityField& reference_field);
double relative_attribution_error(const AttributionVector& method,
                                  const AttributionVector& reference);

// ---------------------------------------------------------------------------
// Structure metrics on grid images
// ---------------------------------------------------------------------------

// Total variation of the attribution map, downweighted near image edges:
// sum over pixels of ||grad(attr)||_1 * exp(-alpha ||grad(img)||_2).
double satv(const GridImage& attr_map, const GridImage& image, double alpha);

// Edge alignment: attribution-gradient-weighted mean of image edge strength.
double eas(const GridImage& attr_map, const GridImage& image);

// ---------------------------------------------------------------------------
// Deletion faithfulness
// ---------------------------------------------------------------------------

enum class Replacement { zero, blur };

struct DeletionCurve {
    std::vector<double> fractions;  // J+1 points from 0 to 1
    std::vector<double> scores;
    double auc = 0.0;  // trapezoid area of the raw score curve
    Replacement replacement = Replacement::zero;
};

// Pixels are ranked by signed attribution, descending (ties broken by index);
// at fraction p the top round(p * N) pixels are replaced by zero or by the
// Gaussian-blurred image value (sigma 2 px).
DeletionCurve deletion_curve(const ScoreModel& score, const GridImage& image,
                             const AttributionVector& attr,
                             Replacement replacement, int fraction_steps,
                             double blur_sigma = 2.0);

// Same protocol with an explicit pixel ranking; used for random-ranking
// controls.
DeletionCurve deletion_curve_ranked(const ScoreModel& score,
                                    const GridImage& image,
                                    const std::vector<int>& ranking,
                                    Replacement replacement, int fraction_steps,
                                    double blur_sigma = 2.0);

// ---------------------------------------------------------------------------
// Seed stability
// ---------------------------------------------------------------------------

struct StabilityReport {
    double pixel_variance = 0.0;  // mean across-seed sample variance
    double mean_ssim = 0.0;       // mean over unordered map pairs
    double mean_rank_corr = 0.0;  // mean Spearman over unordered pairs
};

// Maps are first normalized by their own max-abs value.
StabilityReport stability_report(const std::vector<GridImage>& attr_maps);

// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), C1=(0.01 L)^2,
// C2=(0.03 L)^2 with L the joint dynamic range of the pair.
double ssim(const GridImage& a, const GridImage& b);

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);
double pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace otflow
