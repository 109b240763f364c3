#include "optiks/solver.hpp"

#include "optiks/error.hpp"
#include "optiks/pns.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace optiks {

using Eigen::Index;
using Eigen::VectorXd;

void SolverConfig::validate() const {
    if (!(init_derate >= 0.8 && init_derate < 1.0)) throw Error(ErrorCode::InvalidParams, "init_derate must be in [0.8, 1)");
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw Error(ErrorCode::InvalidParams, "step size must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw Error(ErrorCode::InvalidParams, "Adam betas must be in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidParams, "Adam epsilon must be positive");
    if (max_iterations < 1) throw Error(ErrorCode::InvalidParams, "max_iterations must be at least 1");
    if (convergence_window < 1) throw Error(ErrorCode::InvalidParams, "convergence window must be at least 1");
    if (!(convergence_tol >= 0.0)) throw Error(ErrorCode::InvalidParams, "convergence tolerance must be >= 0");
}

Objective DesignSpec::resolved_objective() const {
    Objective o = objective;
    o.s_max = hw.s_max;
    o.time_scale = hw.dt;
    return o;
}

void DesignSpec::validate() const {
    hw.validate();
    solver.validate();
    if (!(arc_oversampling >= 1.0) || !std::isfinite(arc_oversampling)) {
        throw Error(ErrorCode::InvalidParams, "arc oversampling must be >= 1");
    }
    if (arc_samples != 0 && arc_samples < 2) throw Error(ErrorCode::InvalidParams, "arc_samples must be 0 or >= 2");
    const Objective o = resolved_objective();
    o.validate();
    if (o.bands) o.bands->check_nyquist(hw.dt);
}

VectorXd time_optimal_speed(const ArcCurve& arc, const HardwareLimits& hw, TerminalSpeed terminal) {
    hw.validate();
    const Index n = arc.size();
    if (n < 2) throw Error(ErrorCode::InvalidParams, "arc needs at least two samples");
    const double ds = arc.spacing();
    const double gs = hw.gamma_bar * hw.s_max;
    if (ds >= hw.gamma_bar * hw.g_max * hw.g_max / (2.0 * hw.s_max)) {
        throw Error(ErrorCode::InfeasibleGrid, "arc spacing too coarse to resolve the slew ramp");
    }
    const VectorXd vmax = speed_limit(arc, hw);
    const VectorXd umax = vmax.array().square();

    // largest u at the far end of [i, j] with tangential (du/ds)/2 and normal kappa*u both
    // inside the slew circle; kappa is the larger of the two ends and u the far end
    auto advance = [&](double u, Index i, Index j) {
        const double k = std::max(arc.curvature(i), arc.curvature(j));
        const double q = 1.0 + 4.0 * ds * ds * k * k;
        const double disc = gs * gs * q - k * k * u * u;
        const double a = disc > 0.0 ? (-2.0 * ds * k * k * u + std::sqrt(disc)) / q : 0.0;
        return u + 2.0 * ds * std::max(a, 0.0);
    };

    VectorXd fwd(n);
    fwd(0) = 0.0;
    for (Index i = 0; i + 1 < n; ++i) fwd(i + 1) = std::min(umax(i + 1), advance(fwd(i), i, i + 1));

    VectorXd bwd(n);
    bwd(n - 1) = terminal == TerminalSpeed::Zero ? 0.0 : umax(n - 1);
    for (Index i = n - 1; i > 0; --i) bwd(i - 1) = std::min(umax(i - 1), advance(bwd(i), i - 1, i));

    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = std::sqrt(std::min(fwd(i), bwd(i)));
    v(0) = 0.0;
    return v;
}

VectorXd init_xi(const VectorXd& v_star, const VectorXd& v_max, double alpha, double eps) {
    if (v_star.size() != v_max.size()) throw Error(ErrorCode::ShapeMismatch, "v* and v_max differ in length");
    VectorXd xi(v_star.size());
    for (Index i = 0; i < xi.size(); ++i) {
        const double r = v_max(i) > 0.0 ? alpha * v_star(i) / v_max(i) : eps;
        xi(i) = logit(std::clamp(r, eps, 1.0 - eps));
    }
    return xi;
}

void adam_step(VectorXd& xi, AdamState& state, const VectorXd& grad, const SolverConfig& cfg) {
    if (grad.size() != xi.size() || state.m.size() != xi.size() || state.v.size() != xi.size()) {
        throw Error(ErrorCode::ShapeMismatch, "Adam state does not match xi");
    }
    if (!grad.allFinite()) throw Error(ErrorCode::NonFiniteGradient, "loss gradient has non-finite entries");
    ++state.step;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (Index i = 0; i < xi.size(); ++i) {
        const double mh = state.m(i) / c1;
        const double vh = state.v(i) / c2;
        xi(i) -= cfg.step_size * mh / (std::sqrt(vh) + cfg.epsilon);
    }
}

ForwardCache waveform_for_speed(const ArcCurve& arc, const HardwareLimits& hw, const VectorXd& v,
                                TerminalSpeed terminal) {
    const DesignContext ctx(arc, hw);
    return forward_from_speed(ctx, v, terminal);
}

namespace {

double violation(const LimitCheck& c) {
    if (!c.checked || c.pass || !(c.limit > 0.0)) return 0.0;
    return c.value / c.limit - 1.0;
}

double total_violation(const LimitReport& r) {
    return std::max({violation(r.gradient), violation(r.slew), violation(r.pns), violation(r.duration)});
}

std::string describe_violations(const LimitReport& r) {
    std::ostringstream os;
    auto add = [&](const char* name, const LimitCheck& c) {
        if (c.checked && !c.pass) os << ' ' << name << '=' << c.value << " (limit " << c.limit << ')';
    };
    add("gradient", r.gradient);
    add("slew", r.slew);
    add("pns", r.pns);
    add("duration", r.duration);
    return os.str();
}

}  // namespace

namespace {

// with a PNS limit, start from the slew de-rating that just meets it
VectorXd initial_speed(const ArcCurve& arc, const HardwareLimits& hw, const Objective& objective,
                       TerminalSpeed terminal) {
    if (objective.weights.pns > 0.0 && objective.pns && objective.p_max) {
        DerateTarget target;
        target.kind = DerateTarget::Kind::PnsPercent;
        target.value = *objective.p_max;
        target.pns = objective.pns.get();
        try {
            const DerateResult d = derate_baseline(arc, hw, target, terminal);
            HardwareLimits h = hw;
            h.s_max = d.s_max;
            return time_optimal_speed(arc, h, terminal);
        } catch (const Error&) {
            // unreachable target: fall back to the hardware optimum
        }
    }
    return time_optimal_speed(arc, hw, terminal);
}

}  // namespace

DesignResult run_design(const ArcCurve& arc, const DesignSpec& spec, const IterationCallback& callback) {
    spec.validate();
    const Objective objective = spec.resolved_objective();
    const SolverConfig& cfg = spec.solver;
    const DesignContext ctx(arc, spec.hw);

    VectorXd xi = init_xi(initial_speed(arc, spec.hw, objective, cfg.terminal), ctx.v_max(), cfg.init_derate);
    AdamState adam(xi.size());

    DesignResult result;
    result.loss_trace.reserve(static_cast<std::size_t>(cfg.max_iterations));
    result.best_trace.reserve(static_cast<std::size_t>(cfg.max_iterations));

    VectorXd best_xi = xi;
    double best_loss = std::numeric_limits<double>::infinity();
    double best_violation = std::numeric_limits<double>::infinity();
    bool have_feasible = false;

    const int window = cfg.convergence_window;
    const int smooth = std::max(1, window / 4);
    std::vector<double> smoothed;
    smoothed.reserve(static_cast<std::size_t>(cfg.max_iterations));
    double running = 0.0;

    for (int it = 0; it < cfg.max_iterations; ++it) {
        const ForwardCache fwd = forward_design_pass(ctx, xi, cfg.terminal);
        const LossEval loss = assemble_loss(fwd.waveform, fwd.duration(), objective, true);
        const LimitReport report =
            verify_limits(fwd.waveform, spec.hw, objective.pns.get(), objective.p_max, objective.t_max);
        const bool feasible = report.pass();

        result.loss_trace.push_back(loss.total);
        result.iterations = it + 1;
        if (feasible) {
            if (!have_feasible || loss.total < best_loss) {
                have_feasible = true;
                best_loss = loss.total;
                best_xi = xi;
                result.best_iteration = it;
            }
        } else if (!have_feasible) {
            const double viol = total_violation(report);
            if (viol < best_violation || (viol == best_violation && loss.total < best_loss)) {
                best_violation = viol;
                best_loss = loss.total;
                best_xi = xi;
                result.best_iteration = it;
            }
        }
        result.best_trace.push_back(best_loss);
        if (callback) callback(it, loss, report);

        running += loss.total;
        if (it >= smooth) running -= result.loss_trace[static_cast<std::size_t>(it - smooth)];
        smoothed.push_back(running / std::min(it + 1, smooth));
        if (feasible && it >= window + smooth) {
            const double now = smoothed.back();
            const double then = smoothed[static_cast<std::size_t>(it - window)];
            if (std::abs(now - then) <= cfg.convergence_tol * std::max(std::abs(then), 1e-300)) {
                result.converged = true;
                break;
            }
        }

        const VectorXd grad = backward_design_pass(ctx, fwd, loss.cot_g, loss.cot_total);
        adam_step(xi, adam, grad, cfg);
    }

    const ForwardCache best = forward_design_pass(ctx, best_xi, cfg.terminal);
    const LossEval loss = assemble_loss(best.waveform, best.duration(), objective, false);
    result.report = verify_limits(best.waveform, spec.hw, objective.pns.get(), objective.p_max, objective.t_max);
    result.feasible = result.report.pass();
    result.breakdown = loss.terms;
    result.waveform = best.waveform;
    result.s = arc.s;
    result.v = best.v;
    result.xi = best_xi;
    result.s_progress = best.resample.s_of_tau;
    result.duration = best.duration();
    if (result.feasible) {
        result.message = result.converged ? "converged" : "iteration limit reached";
    } else {
        result.message = "no feasible iterate; best effort violates:" + describe_violations(result.report);
    }
    return result;
}

namespace {

double derate_measure(const ArcCurve& arc, HardwareLimits hw, double s_max, const DerateTarget& target,
                      TerminalSpeed terminal, ForwardCache* out) {
    hw.s_max = s_max;
    const VectorXd v = time_optimal_speed(arc, hw, terminal);
    ForwardCache f = waveform_for_speed(arc, hw, v, terminal);
    double value = f.duration();
    if (target.kind == DerateTarget::Kind::PnsPercent) {
        value = target.pns->response(f.waveform.slew, f.waveform.dt).maxCoeff();
    }
    if (out != nullptr) *out = std::move(f);
    return value;
}

}  // namespace

DerateResult derate_baseline(const ArcCurve& arc, const HardwareLimits& hw, const DerateTarget& target,
                             TerminalSpeed terminal, double rel_tol) {
    hw.validate();
    if (!(target.value > 0.0)) throw Error(ErrorCode::InvalidParams, "de-rating target must be positive");
    if (target.kind == DerateTarget::Kind::PnsPercent && target.pns == nullptr) {
        throw Error(ErrorCode::MissingKey, "PNS de-rating needs a PNS model");
    }
    if (!(rel_tol > 0.0)) throw Error(ErrorCode::InvalidParams, "tolerance must be positive");
    const bool pns = target.kind == DerateTarget::Kind::PnsPercent;

    auto ok = [&](double value) { return value <= target.value; };

    DerateResult r;
    ForwardCache f;
    const double full = derate_measure(arc, hw, hw.s_max, target, terminal, &f);
    if (!pns && full > target.value * (1.0 + rel_tol)) {
        throw Error(ErrorCode::TargetUnreachable, "duration target is below the time-optimal duration");
    }
    if (pns ? ok(full) : full >= target.value * (1.0 - rel_tol)) {
        r.s_max = hw.s_max;
        r.achieved = full;
        r.duration = f.duration();
        r.waveform = f.waveform;
        r.forward = std::move(f);
        return r;
    }

    double lo = hw.s_max * 1e-3;
    double hi = hw.s_max;
    const double v_lo = derate_measure(arc, hw, lo, target, terminal, nullptr);
    if (pns && !ok(v_lo)) throw Error(ErrorCode::TargetUnreachable, "PNS target not met even at 0.1% of s_max");
    if (!pns && v_lo <= target.value) throw Error(ErrorCode::TargetUnreachable, "duration target too long to bracket");

    // PNS: largest s_max with P <= target. Duration: smallest s_max with T <= target.
    for (int k = 0; k < 200 && (hi - lo) > 1e-6 * hi; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double m = derate_measure(arc, hw, mid, target, terminal, nullptr);
        if (pns == ok(m)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double chosen = pns ? lo : hi;
    r.s_max = chosen;
    r.achieved = derate_measure(arc, hw, chosen, target, terminal, &f);
    if (std::abs(r.achieved - target.value) > 5e-3 * target.value) {
        throw Error(ErrorCode::TargetUnreachable, "de-rating could not match the target within 0.5%");
    }
    r.duration = f.duration();
    r.waveform = f.waveform;
    r.forward = std::move(f);
    return r;
}

}  // namespace optiks
