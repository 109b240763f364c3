#include "optiks/pipeline.hpp"

#include "optiks/error.hpp"

#include <atomic>
#include <cmath>

namespace optiks {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::atomic<std::uint64_t> next_context_id{1};

void check_speed(const VectorXd& v) {
    for (Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v(i)) || v(i) < 0.0) {
            throw Error(ErrorCode::NonPositiveSpeed, "speed must be finite and nonnegative");
        }
        if (i > 0 && !(v(i) + v(i - 1) > 0.0)) {
            throw Error(ErrorCode::NonPositiveSpeed, "speed is zero across an arc interval");
        }
    }
}

}  // namespace

Waveform Waveform::from_gradient(MatrixXd g, double dt) {
    Waveform w;
    w.dt = dt;
    w.g = std::move(g);
    const Index n = w.g.rows();
    w.slew = n > 1 ? MatrixXd((w.g.bottomRows(n - 1) - w.g.topRows(n - 1)) / dt) : MatrixXd(0, w.g.cols());
    return w;
}

DesignContext::DesignContext(ArcCurve arc, HardwareLimits hw)
    : arc_(std::move(arc)), hw_(hw), v_max_(speed_limit(arc_, hw_)), id_(next_context_id.fetch_add(1)) {}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

VectorXd speed_from_xi(const VectorXd& xi, const VectorXd& v_max) {
    if (xi.size() != v_max.size()) throw Error(ErrorCode::ShapeMismatch, "xi and v_max differ in length");
    VectorXd v(xi.size());
    for (Index i = 0; i < xi.size(); ++i) v(i) = v_max(i) * sigmoid(xi(i));
    return v;
}

Timing timing_from_speed(const VectorXd& v, double ds) {
    check_speed(v);
    Timing t;
    t.t.resize(v.size());
    t.t(0) = 0.0;
    for (Index i = 0; i + 1 < v.size(); ++i) t.t(i + 1) = t.t(i) + 2.0 * ds / (v(i) + v(i + 1));
    t.total = t.t(v.size() - 1);
    return t;
}

Timing timing_from_speed(const VectorXd& v, const ArcCurve& arc) {
    if (v.size() != arc.size()) throw Error(ErrorCode::ShapeMismatch, "speed profile must match the arc grid");
    return timing_from_speed(v, arc.spacing());
}

VectorXd timing_vjp(const VectorXd& v, double ds, const VectorXd& cot_t) {
    if (cot_t.size() != v.size()) throw Error(ErrorCode::ShapeMismatch, "timing cotangent must match speed");
    VectorXd cot_v = VectorXd::Zero(v.size());
    double suffix = 0.0;
    for (Index i = v.size() - 2; i >= 0; --i) {
        suffix += cot_t(i + 1);
        const double sum = v(i) + v(i + 1);
        const double d = -2.0 * ds / (sum * sum) * suffix;
        cot_v(i) += d;
        cot_v(i + 1) += d;
    }
    return cot_v;
}

Index raster_samples(double total, double dt) {
    const double steps = total / dt;
    return static_cast<Index>(std::floor(steps + 1e-9 * std::max(1.0, steps))) + 1;
}

namespace {

// s(tau) inside interval [t_{j-1}, t_j] under constant tangential acceleration,
// which is the motion the timing rule assumes (v^2 linear in s)
VectorXd arc_at_times(const InterpPlan& plan, const Timing& timing, const VectorXd& v, double ds,
                      const VectorXd& tau) {
    VectorXd s(tau.size());
    for (Index n = 0; n < tau.size(); ++n) {
        const Index j = plan.upper[static_cast<std::size_t>(n)];
        const double h = tau(n) - timing.t(j - 1);
        const double a = (v(j) * v(j) - v(j - 1) * v(j - 1)) / (4.0 * ds);
        s(n) = static_cast<double>(j - 1) * ds + v(j - 1) * h + a * h * h;
    }
    return s;
}

void fill_positions(const ArcCurve& arc, TimeResample& r, bool fresh_plan) {
    if (fresh_plan) {
        const VectorXd clamped = r.s_of_tau.cwiseMax(0.0).cwiseMin(arc.s(arc.size() - 1));
        r.arc_plan = make_interp_plan(arc.s, clamped);
    }
    r.positions = interp_hermite_apply(r.arc_plan, arc.s, arc.positions, arc.tangent, r.s_of_tau);
}

}  // namespace

TimeResample resample_to_time(const ArcCurve& arc, const Timing& timing, const VectorXd& v, double dt) {
    if (timing.t.size() != arc.size() || v.size() != arc.size()) {
        throw Error(ErrorCode::ShapeMismatch, "timing and speed must match the arc grid");
    }
    const Index n_t = raster_samples(timing.total, dt);
    if (n_t < 4) throw Error(ErrorCode::RasterTooCoarse, "traversal spans fewer than 4 raster samples");

    TimeResample r;
    r.tau.resize(n_t);
    r.first_clamped = n_t;
    for (Index n = 0; n < n_t; ++n) {
        const double t = static_cast<double>(n) * dt;
        // only the rounding tolerance in raster_samples can put a sample past T
        if (t >= timing.total && r.first_clamped == n_t) r.first_clamped = n;
        r.tau(n) = std::min(t, timing.total);
    }
    r.time_plan = make_interp_plan(timing.t, r.tau);
    r.s_of_tau = arc_at_times(r.time_plan, timing, v, arc.spacing(), r.tau);
    fill_positions(arc, r, true);
    return r;
}

Waveform gradient_and_slew(const MatrixXd& c_t, const HardwareLimits& hw, bool terminal_at_rest) {
    const Index n = c_t.rows();
    const Index rows = terminal_at_rest ? n + 1 : n;
    MatrixXd g = MatrixXd::Zero(rows, c_t.cols());
    const double scale = 1.0 / (hw.gamma_bar * hw.dt);
    for (Index i = 1; i < n; ++i) g.row(i) = (c_t.row(i) - c_t.row(i - 1)) * scale;
    return Waveform::from_gradient(std::move(g), hw.dt);
}

namespace {

ForwardCache finish_forward(const DesignContext& ctx, ForwardCache c, TerminalSpeed terminal) {
    c.context_id = ctx.id();
    c.terminal_at_rest = terminal == TerminalSpeed::Zero;
    c.timing = timing_from_speed(c.v, ctx.arc());
    c.resample = resample_to_time(ctx.arc(), c.timing, c.v, ctx.hw().dt);
    c.waveform = gradient_and_slew(c.resample.positions, ctx.hw(), c.terminal_at_rest);
    return c;
}

}  // namespace

ForwardCache forward_from_speed(const DesignContext& ctx, const VectorXd& v, TerminalSpeed terminal) {
    if (v.size() != ctx.arc().size()) throw Error(ErrorCode::ShapeMismatch, "speed profile must match the arc grid");
    ForwardCache c;
    c.v = v;
    return finish_forward(ctx, std::move(c), terminal);
}

ForwardCache forward_design_pass(const DesignContext& ctx, const VectorXd& xi, TerminalSpeed terminal) {
    if (xi.size() != ctx.arc().size()) throw Error(ErrorCode::ShapeMismatch, "xi must match the arc grid");
    if (!xi.allFinite()) throw Error(ErrorCode::InvalidParams, "xi must be finite");
    ForwardCache c;
    c.from_xi = true;
    c.xi = xi;
    c.v = speed_from_xi(xi, ctx.v_max());
    return finish_forward(ctx, std::move(c), terminal);
}

ForwardCache forward_design_pass_frozen(const DesignContext& ctx, const VectorXd& xi, const ForwardCache& reference) {
    if (reference.context_id != ctx.id()) throw Error(ErrorCode::StaleCache, "reference pass belongs to another context");
    if (xi.size() != ctx.arc().size()) throw Error(ErrorCode::ShapeMismatch, "xi must match the arc grid");
    ForwardCache c;
    c.context_id = ctx.id();
    c.from_xi = true;
    c.terminal_at_rest = reference.terminal_at_rest;
    c.xi = xi;
    c.v = speed_from_xi(xi, ctx.v_max());
    c.timing = timing_from_speed(c.v, ctx.arc());

    TimeResample& r = c.resample;
    r.tau = reference.resample.tau;
    r.first_clamped = reference.resample.first_clamped;
    for (Index n = r.first_clamped; n < r.tau.size(); ++n) r.tau(n) = c.timing.total;
    r.time_plan = reference.resample.time_plan;
    r.arc_plan = reference.resample.arc_plan;
    r.s_of_tau = arc_at_times(r.time_plan, c.timing, c.v, ctx.arc().spacing(), r.tau);
    fill_positions(ctx.arc(), r, false);
    c.waveform = gradient_and_slew(r.positions, ctx.hw(), c.terminal_at_rest);
    return c;
}

VectorXd backward_to_speed(const DesignContext& ctx, const ForwardCache& cache, const MatrixXd& cot_g,
                           double cot_total) {
    if (cache.context_id != ctx.id()) throw Error(ErrorCode::StaleCache, "forward cache belongs to another context");
    const Waveform& w = cache.waveform;
    if (cot_g.rows() != w.n_t() || cot_g.cols() != w.dims()) {
        throw Error(ErrorCode::ShapeMismatch, "gradient cotangent does not match the cached waveform");
    }
    const ArcCurve& arc = ctx.arc();
    const TimeResample& r = cache.resample;
    const Index n_pos = r.positions.rows();
    if (cache.v.size() != arc.size() || r.tau.size() != n_pos) {
        throw Error(ErrorCode::StaleCache, "forward cache is incomplete");
    }

    // g[n] = (C[n] - C[n-1]) / (gamma_bar dt); g[0] and a trailing rest sample are constant
    const double scale = 1.0 / (ctx.hw().gamma_bar * ctx.hw().dt);
    MatrixXd cot_c = MatrixXd::Zero(n_pos, w.dims());
    for (Index n = 1; n < n_pos; ++n) {
        cot_c.row(n) += scale * cot_g.row(n);
        cot_c.row(n - 1) -= scale * cot_g.row(n);
    }

    MatrixXd slope;
    interp_hermite_apply(r.arc_plan, arc.s, arc.positions, arc.tangent, r.s_of_tau, &slope);

    const VectorXd& v = cache.v;
    const VectorXd& t = cache.timing.t;
    const double ds = arc.spacing();
    const Index last = arc.size() - 1;
    VectorXd cot_t = VectorXd::Zero(arc.size());
    VectorXd cot_v = VectorXd::Zero(arc.size());
    for (Index n = 0; n < n_pos; ++n) {
        const double cs = cot_c.row(n).dot(slope.row(n));
        if (cs == 0.0) continue;
        const Index j = r.time_plan.upper[static_cast<std::size_t>(n)];
        const double h = r.tau(n) - t(j - 1);
        const double vel = v(j - 1) + (v(j) * v(j) - v(j - 1) * v(j - 1)) / (2.0 * ds) * h;
        cot_t(j - 1) -= cs * vel;
        cot_v(j - 1) += cs * (h - v(j - 1) * h * h / (2.0 * ds));
        cot_v(j) += cs * v(j) * h * h / (2.0 * ds);
        // clamped samples sit at tau = T
        if (n >= r.first_clamped) cot_t(last) += cs * vel;
    }
    cot_t(last) += cot_total;
    return cot_v + timing_vjp(v, ds, cot_t);
}

VectorXd backward_design_pass(const DesignContext& ctx, const ForwardCache& cache, const MatrixXd& cot_g,
                              double cot_total) {
    if (!cache.from_xi || cache.xi.size() != ctx.arc().size()) {
        throw Error(ErrorCode::StaleCache, "forward cache was not produced from xi");
    }
    VectorXd cot = backward_to_speed(ctx, cache, cot_g, cot_total);
    const VectorXd& v_max = ctx.v_max();
    for (Index i = 0; i < cot.size(); ++i) {
        const double s = sigmoid(cache.xi(i));
        cot(i) *= v_max(i) * s * (1.0 - s);
    }
    return cot;
}

}  // namespace optiks
