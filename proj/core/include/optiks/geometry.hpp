#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <variant>

namespace optiks {

/// Trajectory samples under an arbitrary parameterization. Positions are
/// stored one row per sample, one column per k-space axis (cycles/m).
struct ParamCurve {
    Eigen::MatrixXd points;
    Eigen::VectorXd params;
    std::string label;

    Eigen::Index size() const { return params.size(); }
    Eigen::Index dims() const { return points.cols(); }

    /// Throws InvalidParams / NonMonotonicParams when the sample set is unusable.
    void validate() const;
};

/// The curve resampled uniformly in Euclidean arc-length.
struct ArcCurve {
    Eigen::VectorXd s;          // uniform grid 0..length
    Eigen::MatrixXd positions;  // N x D
    Eigen::MatrixXd tangent;    // N x D, unit rows
    Eigen::VectorXd curvature;  // >= 0, units of 1/(cycles/m)
    double length = 0.0;

    Eigen::Index size() const { return s.size(); }
    Eigen::Index dims() const { return positions.cols(); }
    double spacing() const { return length / static_cast<double>(s.size() - 1); }
    /// Largest distance of any position from the k-space origin.
    double max_radius() const;
};

inline constexpr double kGammaBarProton = 42'577'478.518;  // Hz/T

struct HardwareLimits {
    double g_max = 0.1;       // T/m
    double s_max = 150.0;     // T/m/s
    double gamma_bar = kGammaBarProton;
    double dt = 4e-6;         // s

    void validate() const;
    /// Amplitude-limited k-space speed (cycles/m/s).
    double max_speed() const { return gamma_bar * g_max; }
};

// ---------------------------------------------------------------------------
// Trajectory generators

/// Undersampling factor R as a function of normalized radius |k|/k_max in [0, 1].
using DensityFunction = std::function<double(double)>;

/// Undersampling that varies linearly from `start` at the center to `end` at the edge.
DensityFunction linear_density(double start, double end);

struct SpiralParams {
    double fov = 0.22;           // m
    double resolution = 0.001;   // m
    int interleaves = 1;
    DensityFunction density;     // empty => uniform (R = 1)
    double point_spacing = 0.25; // max arc distance between emitted samples, cycles/m
};

struct RosetteParams {
    int petals = 9;
    double resolution = 0.001;
    double point_spacing = 0.25;
};

struct CepiParams {
    double fov = 0.26;
    double resolution = 0.0028;
    double undersampling = 1.0;  // R along the phase-encode direction
    double point_spacing = 0.25;
};

using TrajectoryParams = std::variant<SpiralParams, RosetteParams, CepiParams>;

ParamCurve gen_trajectory(const TrajectoryParams& params);
/// Name-based dispatch used by file/CLI front ends; throws UnsupportedKind.
std::string_view trajectory_kind(const TrajectoryParams& params);

// ---------------------------------------------------------------------------

/// Smallest sample count whose spacing is at most gamma_bar*g_max*dt/oversampling.
Eigen::Index default_arc_samples(double length, const HardwareLimits& hw, double oversampling = 4.0);

/// Total arc length of the sample polyline.
double polyline_length(const ParamCurve& curve);

ArcCurve arclength_reparam(const ParamCurve& curve, Eigen::Index n);

/// Convenience: reparameterize with default_arc_samples.
ArcCurve arclength_reparam(const ParamCurve& curve, const HardwareLimits& hw, double oversampling = 4.0);

/// Pointwise k-space speed limit min(gamma_bar*g_max, sqrt(gamma_bar*s_max/kappa)).
Eigen::VectorXd speed_limit(const ArcCurve& arc, const HardwareLimits& hw);

}  // namespace optiks
