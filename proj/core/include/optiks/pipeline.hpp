#pragma once

#include "optiks/geometry.hpp"
#include "optiks/interp.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace optiks {

/// Per-axis gradient samples on a uniform raster. Row n of `g` is the gradient
/// vector at t = n*dt; `slew` holds forward differences of `g`.
struct Waveform {
    Eigen::MatrixXd g;     // n_t x D, T/m
    Eigen::MatrixXd slew;  // (n_t-1) x D, T/m/s
    double dt = 4e-6;

    Eigen::Index n_t() const { return g.rows(); }
    Eigen::Index dims() const { return g.cols(); }
    double duration() const { return static_cast<double>(n_t() - 1) * dt; }

    /// Build from gradient samples, deriving slew[n] = (g[n+1] - g[n]) / dt.
    static Waveform from_gradient(Eigen::MatrixXd g, double dt);
};

/// Whether the waveform must come to rest at the end of the trajectory.
enum class TerminalSpeed { Zero, Free };

/// Immutable design context shared by every forward/backward evaluation.
class DesignContext {
public:
    DesignContext(ArcCurve arc, HardwareLimits hw);

    const ArcCurve& arc() const { return arc_; }
    const HardwareLimits& hw() const { return hw_; }
    const Eigen::VectorXd& v_max() const { return v_max_; }
    std::uint64_t id() const { return id_; }

private:
    ArcCurve arc_;
    HardwareLimits hw_;
    Eigen::VectorXd v_max_;
    std::uint64_t id_;
};

double sigmoid(double x);
double logit(double p);

/// v(s) = v_max(s) * sigmoid(xi(s)).
Eigen::VectorXd speed_from_xi(const Eigen::VectorXd& xi, const Eigen::VectorXd& v_max);

struct Timing {
    Eigen::VectorXd t;  // t(s_i), t(0) = 0
    double total = 0.0;
};

/// Cumulative traversal time on a uniform arc grid of spacing ds. Each interval
/// contributes 2*ds/(v_i + v_{i+1}), which is exact when v^2 is linear across it
/// and stays finite when a single endpoint is at rest.
Timing timing_from_speed(const Eigen::VectorXd& v, double ds);
Timing timing_from_speed(const Eigen::VectorXd& v, const ArcCurve& arc);

/// Adjoint of timing_from_speed: cotangents on t(s_i) (including T in the last entry) to cotangents on v.
Eigen::VectorXd timing_vjp(const Eigen::VectorXd& v, double ds, const Eigen::VectorXd& cot_t);

struct TimeResample {
    Eigen::VectorXd tau;        // raster times n*dt, never past T
    Eigen::VectorXd s_of_tau;   // arc-length at each raster time (constant acceleration per interval)
    Eigen::MatrixXd positions;  // C(tau), n_t x D, cubic Hermite on the arc grid
    InterpPlan time_plan;       // bins of tau in t(s)
    InterpPlan arc_plan;        // bins of s(tau) in the arc grid
    Eigen::Index first_clamped = 0;  // raster index from which tau == T (n_t if none)
};

/// Number of raster samples covering a traversal of duration T.
Eigen::Index raster_samples(double total, double dt);

/// Invert t(s) on the raster n*dt <= T and look up positions. Within each arc
/// interval the motion has the constant acceleration implied by the timing rule, so
/// speed is continuous in time; positions use the arc tangents, so direction is too.
/// The endpoint is reached only when T is a raster multiple.
TimeResample resample_to_time(const ArcCurve& arc, const Timing& timing, const Eigen::VectorXd& v, double dt);

/// g[0] = 0 (start from rest); g[n] = (C[n] - C[n-1]) / (gamma_bar*dt). With
/// `terminal_at_rest` one zero sample is appended so the waveform also ends at rest.
Waveform gradient_and_slew(const Eigen::MatrixXd& c_t, const HardwareLimits& hw, bool terminal_at_rest = false);

struct ForwardCache {
    std::uint64_t context_id = 0;
    bool from_xi = false;
    bool terminal_at_rest = false;
    Eigen::VectorXd xi;
    Eigen::VectorXd v;
    Timing timing;
    TimeResample resample;
    Waveform waveform;

    double duration() const { return timing.total; }
};

ForwardCache forward_from_speed(const DesignContext& ctx, const Eigen::VectorXd& v, TerminalSpeed terminal);
ForwardCache forward_design_pass(const DesignContext& ctx, const Eigen::VectorXd& xi, TerminalSpeed terminal);

/// Re-run the forward pass at `xi` reusing the raster length, clamp index and
/// both interpolation plans of `reference`. Smooth in xi; used to check the adjoint.
ForwardCache forward_design_pass_frozen(const DesignContext& ctx, const Eigen::VectorXd& xi,
                                        const ForwardCache& reference);

/// d(loss)/d(xi) given cotangents on the gradient samples and on the duration T.
Eigen::VectorXd backward_design_pass(const DesignContext& ctx, const ForwardCache& cache,
                                     const Eigen::MatrixXd& cot_g, double cot_total);

/// Same chain ending at the speed profile instead of xi.
Eigen::VectorXd backward_to_speed(const DesignContext& ctx, const ForwardCache& cache,
                                  const Eigen::MatrixXd& cot_g, double cot_total);

}  // namespace optiks
