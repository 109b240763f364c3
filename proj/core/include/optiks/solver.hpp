#pragma once

#include "optiks/analysis.hpp"
#include "optiks/geometry.hpp"
#include "optiks/losses.hpp"
#include "optiks/pipeline.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace optiks {

struct SolverConfig {
    double init_derate = 0.9;  // alpha in [0.8, 1)
    double step_size = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int max_iterations = 2000;
    TerminalSpeed terminal = TerminalSpeed::Free;
    std::uint64_t seed = 0;
    int convergence_window = 200;
    double convergence_tol = 1e-5;

    void validate() const;
};

struct DesignSpec {
    HardwareLimits hw;
    Objective objective;
    SolverConfig solver;
    double arc_oversampling = 4.0;
    Eigen::Index arc_samples = 0;  // 0 => default_arc_samples

    /// Checks hardware, solver and objective invariants (objective.s_max is taken from hw).
    void validate() const;
    Objective resolved_objective() const;
};

struct DesignResult {
    Waveform waveform;
    Eigen::VectorXd s;
    Eigen::VectorXd v;
    Eigen::VectorXd xi;
    Eigen::VectorXd s_progress;  // arc-length at each position raster sample
    double duration = 0.0;       // continuous traversal time T
    std::vector<double> loss_trace;
    std::vector<double> best_trace;
    LossBreakdown breakdown;
    LimitReport report;
    int iterations = 0;
    int best_iteration = -1;
    bool feasible = false;
    bool converged = false;
    std::string message;
};

/// Fastest speed profile under the amplitude, curvature and acceleration limits:
/// forward sweep from rest, backward sweep from the end, pointwise minimum. Works on v^2.
Eigen::VectorXd time_optimal_speed(const ArcCurve& arc, const HardwareLimits& hw, TerminalSpeed terminal);

/// xi0 = logit(clamp(alpha v* / v_max, eps, 1 - eps)).
Eigen::VectorXd init_xi(const Eigen::VectorXd& v_star, const Eigen::VectorXd& v_max, double alpha,
                        double eps = 1e-9);

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long step = 0;

    explicit AdamState(Eigen::Index n = 0) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

/// One bias-corrected Adam update of xi in place. Throws NonFiniteGradient.
void adam_step(Eigen::VectorXd& xi, AdamState& state, const Eigen::VectorXd& grad, const SolverConfig& cfg);

using IterationCallback = std::function<void(int iteration, const LossEval& loss, const LimitReport& report)>;

DesignResult run_design(const ArcCurve& arc, const DesignSpec& spec, const IterationCallback& callback = {});

/// Waveform for a given speed profile together with its forward data.
ForwardCache waveform_for_speed(const ArcCurve& arc, const HardwareLimits& hw, const Eigen::VectorXd& v,
                                TerminalSpeed terminal);

struct DerateTarget {
    enum class Kind { PnsPercent, Duration };
    Kind kind = Kind::Duration;
    double value = 0.0;
    const PnsResponseModel* pns = nullptr;  // required for PnsPercent
};

struct DerateResult {
    double s_max = 0.0;
    double achieved = 0.0;  // max P (percent) or duration (s)
    double duration = 0.0;
    Waveform waveform;
    ForwardCache forward;
};

/// Bisection on s_max in (0, hw.s_max] with each probe solved time-optimally.
DerateResult derate_baseline(const ArcCurve& arc, const HardwareLimits& hw, const DerateTarget& target,
                             TerminalSpeed terminal = TerminalSpeed::Free, double rel_tol = 1e-3);

}  // namespace optiks
