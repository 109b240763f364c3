#include "optiks/geometry.hpp"

#include "optiks/error.hpp"
#include "optiks/interp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace optiks {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kPi = std::numbers::pi;

// Second-order finite differences on a nonuniform grid; one-sided at the ends.
void derivatives(const MatrixXd& f, const VectorXd& p, MatrixXd& d1, MatrixXd& d2) {
    const Index n = p.size();
    d1.resize(n, f.cols());
    d2.resize(n, f.cols());
    for (Index i = 1; i + 1 < n; ++i) {
        const double h1 = p(i) - p(i - 1);
        const double h2 = p(i + 1) - p(i);
        const double hs = h1 + h2;
        d1.row(i) = (-h2 / (h1 * hs)) * f.row(i - 1) + ((h2 - h1) / (h1 * h2)) * f.row(i) +
                    (h1 / (h2 * hs)) * f.row(i + 1);
        d2.row(i) = 2.0 * (f.row(i - 1) / (h1 * hs) - f.row(i) / (h1 * h2) + f.row(i + 1) / (h2 * hs));
    }
    {
        const double h1 = p(1) - p(0);
        const double h2 = p(2) - p(1);
        const double hs = h1 + h2;
        d1.row(0) = (-(2.0 * h1 + h2) / (h1 * hs)) * f.row(0) + (hs / (h1 * h2)) * f.row(1) -
                    (h1 / (h2 * hs)) * f.row(2);
        d2.row(0) = d2.row(1);
    }
    {
        const double h1 = p(n - 2) - p(n - 3);
        const double h2 = p(n - 1) - p(n - 2);
        const double hs = h1 + h2;
        d1.row(n - 1) = (h2 / (h1 * hs)) * f.row(n - 3) - (hs / (h1 * h2)) * f.row(n - 2) +
                        ((2.0 * h2 + h1) / (h2 * hs)) * f.row(n - 1);
        d2.row(n - 1) = d2.row(n - 2);
    }
}

// Accumulates samples while dropping exact repeats of the previous point.
class CurveBuilder {
public:
    explicit CurveBuilder(Index dims) : dims_(dims) {}

    void add(double x, double y) {
        if (!xs_.empty()) {
            const double dx = x - xs_.back();
            const double dy = y - ys_.back();
            const double d = std::hypot(dx, dy);
            if (d == 0.0) return;
            param_.push_back(param_.back() + d);
        } else {
            param_.push_back(0.0);
        }
        xs_.push_back(x);
        ys_.push_back(y);
    }

    double last_x() const { return xs_.back(); }
    double last_y() const { return ys_.back(); }

    ParamCurve build(std::string label, double k_max) const {
        ParamCurve c;
        const Index n = static_cast<Index>(xs_.size());
        c.points = MatrixXd::Zero(n, dims_);
        c.params.resize(n);
        double r_max = 0.0;
        for (Index i = 0; i < n; ++i) {
            c.points(i, 0) = xs_[static_cast<std::size_t>(i)];
            c.points(i, 1) = ys_[static_cast<std::size_t>(i)];
            c.params(i) = param_[static_cast<std::size_t>(i)];
            r_max = std::max(r_max, std::hypot(c.points(i, 0), c.points(i, 1)));
        }
        if (r_max > 0.0) {
            const double scale = k_max / r_max;
            c.points *= scale;
            c.params *= scale;
        }
        c.label = std::move(label);
        return c;
    }

private:
    Index dims_;
    std::vector<double> xs_, ys_, param_;
};

void cubic_bezier(CurveBuilder& b, const Eigen::Vector2d& p0, const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                  const Eigen::Vector2d& p3, double spacing) {
    const double hull = (p1 - p0).norm() + (p2 - p1).norm() + (p3 - p2).norm();
    const Index steps = std::max<Index>(8, static_cast<Index>(std::ceil(4.0 * hull / spacing)));
    for (Index i = 1; i <= steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps);
        const double u = 1.0 - t;
        const Eigen::Vector2d q = u * u * u * p0 + 3.0 * u * u * t * p1 + 3.0 * u * t * t * p2 + t * t * t * p3;
        b.add(q.x(), q.y());
    }
}

void line(CurveBuilder& b, const Eigen::Vector2d& to, double spacing) {
    const Eigen::Vector2d from(b.last_x(), b.last_y());
    const double len = (to - from).norm();
    const Index steps = std::max<Index>(1, static_cast<Index>(std::ceil(len / spacing)));
    for (Index i = 1; i <= steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps);
        const Eigen::Vector2d q = from + t * (to - from);
        b.add(q.x(), q.y());
    }
}

ParamCurve make_spiral(const SpiralParams& sp) {
    if (!(sp.fov > 0.0) || !(sp.resolution > 0.0) || sp.interleaves < 1 || !(sp.point_spacing > 0.0)) {
        throw Error(ErrorCode::InvalidParams, "spiral needs fov > 0, resolution > 0, interleaves >= 1");
    }
    const double k_max = 1.0 / (2.0 * sp.resolution);
    auto radial_rate = [&](double k) {
        const double r = sp.density ? sp.density(std::clamp(k / k_max, 0.0, 1.0)) : 1.0;
        if (!(r >= 1.0) || !std::isfinite(r)) {
            throw Error(ErrorCode::InvalidParams, "spiral undersampling factor must be >= 1");
        }
        return static_cast<double>(sp.interleaves) * r / (2.0 * kPi * sp.fov);
    };

    CurveBuilder b(2);
    std::vector<double> theta{0.0};
    double k = 0.0;
    double th = 0.0;
    b.add(0.0, 0.0);
    while (k < k_max) {
        const double rate = radial_rate(k);
        double dth = std::min(2.0 * kPi / 64.0, sp.point_spacing / std::hypot(rate, k + rate * 1e-3));
        // midpoint step of dk/dtheta = rate(k)
        double k_next = k + dth * radial_rate(k + 0.5 * dth * rate);
        if (k_next >= k_max) {
            dth *= (k_max - k) / (k_next - k);
            k_next = k_max;
        }
        th += dth;
        k = k_next;
        b.add(k * std::cos(th), k * std::sin(th));
    }
    return b.build("spiral", k_max);
}

ParamCurve make_rosette(const RosetteParams& rp) {
    if (rp.petals < 2 || !(rp.resolution > 0.0) || !(rp.point_spacing > 0.0)) {
        throw Error(ErrorCode::InvalidParams, "rosette needs petals >= 2 and resolution > 0");
    }
    const double k_max = 1.0 / (2.0 * rp.resolution);
    // rhodonea r = sin(m theta): odd m gives m petals over [0, pi]; m = p/q with
    // one of p, q even gives 2p petals over [0, 2 q pi]
    double m = 0.0;
    double span = 0.0;
    if (rp.petals % 2 == 1) {
        m = rp.petals;
        span = kPi;
    } else if (rp.petals % 4 == 0) {
        m = rp.petals / 2;
        span = 2.0 * kPi;
    } else {
        m = rp.petals / 4.0;
        span = 4.0 * kPi;
    }
    const double speed = k_max * std::sqrt(m * m + 1.0);
    const Index steps = static_cast<Index>(std::ceil(span * speed / rp.point_spacing));
    CurveBuilder b(2);
    for (Index i = 0; i <= steps; ++i) {
        const double th = span * static_cast<double>(i) / static_cast<double>(steps);
        const double r = k_max * std::sin(m * th);
        b.add(r * std::cos(th), r * std::sin(th));
    }
    return b.build("rosette", k_max);
}

ParamCurve make_cepi(const CepiParams& cp) {
    if (!(cp.fov > 0.0) || !(cp.resolution > 0.0) || !(cp.undersampling >= 1.0) || !(cp.point_spacing > 0.0)) {
        throw Error(ErrorCode::InvalidParams, "cepi needs fov > 0, resolution > 0, undersampling >= 1");
    }
    const double k_max = 1.0 / (2.0 * cp.resolution);
    const double dky = cp.undersampling / cp.fov;
    const Index lines = static_cast<Index>(std::floor(2.0 * k_max / dky));
    if (lines < 2) throw Error(ErrorCode::InvalidParams, "cepi footprint holds fewer than two lines");
    const double turn = 2.0 / 3.0 * dky;

    CurveBuilder b(2);
    b.add(0.0, 0.0);
    double dir = 1.0;
    for (Index j = 0; j < lines; ++j) {
        const double ky = (static_cast<double>(j) - 0.5 * static_cast<double>(lines - 1)) * dky;
        const double half = std::sqrt(std::max(0.0, k_max * k_max - ky * ky));
        const Eigen::Vector2d start(-dir * half, ky);
        const Eigen::Vector2d end(dir * half, ky);
        const Eigen::Vector2d here(b.last_x(), b.last_y());
        if (j == 0) {
            const double lead = (start - here).norm() / 3.0;
            cubic_bezier(b, here, here + (start - here) / 3.0, start - Eigen::Vector2d(dir * lead, 0.0), start,
                         cp.point_spacing);
        } else {
            // rounded turnaround leaving along -dir (previous line) and arriving along +dir
            const double bulge = turn + 0.5 * std::abs(here.x() - start.x());
            cubic_bezier(b, here, here + Eigen::Vector2d(-dir * bulge, 0.0),
                         start + Eigen::Vector2d(-dir * bulge, 0.0), start, cp.point_spacing);
        }
        line(b, end, cp.point_spacing);
        dir = -dir;
    }
    return b.build("cepi", k_max);
}

}  // namespace

void ParamCurve::validate() const {
    if (params.size() < 4 || points.rows() != params.size()) {
        throw Error(ErrorCode::InvalidParams, "a curve needs at least 4 samples with one parameter each");
    }
    if (points.cols() < 1 || points.cols() > 3) {
        throw Error(ErrorCode::InvalidParams, "curves must have 1 to 3 dimensions");
    }
    if (!points.allFinite() || !params.allFinite()) {
        throw Error(ErrorCode::InvalidParams, "curve samples must be finite");
    }
    for (Index i = 1; i < params.size(); ++i) {
        if (!(params(i) > params(i - 1))) {
            throw Error(ErrorCode::NonMonotonicParams, "curve parameters must be strictly increasing");
        }
    }
}

double ArcCurve::max_radius() const { return positions.rowwise().norm().maxCoeff(); }

void HardwareLimits::validate() const {
    for (double v : {g_max, s_max, gamma_bar, dt}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::InvalidParams, "hardware limits must be finite and strictly positive");
        }
    }
}

DensityFunction linear_density(double start, double end) {
    return [start, end](double r) { return start + (end - start) * r; };
}

ParamCurve gen_trajectory(const TrajectoryParams& params) {
    return std::visit(
        [](const auto& p) -> ParamCurve {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, SpiralParams>) return make_spiral(p);
            else if constexpr (std::is_same_v<T, RosetteParams>) return make_rosette(p);
            else return make_cepi(p);
        },
        params);
}

std::string_view trajectory_kind(const TrajectoryParams& params) {
    switch (params.index()) {
        case 0: return "spiral";
        case 1: return "rosette";
        default: return "cepi";
    }
}

Index default_arc_samples(double length, const HardwareLimits& hw, double oversampling) {
    const double ds = hw.gamma_bar * hw.g_max * hw.dt / oversampling;
    return std::max<Index>(16, static_cast<Index>(std::ceil(length / ds)) + 1);
}

double polyline_length(const ParamCurve& curve) {
    double len = 0.0;
    for (Index i = 1; i < curve.size(); ++i) len += (curve.points.row(i) - curve.points.row(i - 1)).norm();
    return len;
}

ArcCurve arclength_reparam(const ParamCurve& curve, Index n) {
    curve.validate();
    if (n < 16) throw Error(ErrorCode::InvalidParams, "arc-length grid needs at least 16 samples");

    const Index m = curve.size();
    const Index dims = curve.dims();
    MatrixXd d1, d2;
    derivatives(curve.points, curve.params, d1, d2);

    // cumulative chord length; repeated points are skipped so the knots stay increasing
    std::vector<Index> keep{0};
    std::vector<double> cum{0.0};
    for (Index i = 1; i < m; ++i) {
        const double d = (curve.points.row(i) - curve.points.row(keep.back())).norm();
        if (d > 0.0) {
            keep.push_back(i);
            cum.push_back(cum.back() + d);
        }
    }
    const double length = cum.back();
    if (!(length > 0.0) || keep.size() < 2) throw Error(ErrorCode::DegenerateCurve, "curve has zero length");

    const Index k = static_cast<Index>(keep.size());
    VectorXd knots(k);
    MatrixXd values(k, 2 * dims + 1);
    for (Index j = 0; j < k; ++j) {
        const Index i = keep[static_cast<std::size_t>(j)];
        knots(j) = cum[static_cast<std::size_t>(j)];
        const double speed = d1.row(i).norm();
        values.block(j, 0, 1, dims) = curve.points.row(i);
        double kappa = 0.0;
        if (speed > 0.0) {
            values.block(j, dims, 1, dims) = d1.row(i) / speed;
            const double cross2 = d1.row(i).squaredNorm() * d2.row(i).squaredNorm() - std::pow(d1.row(i).dot(d2.row(i)), 2);
            kappa = std::sqrt(std::max(0.0, cross2)) / (speed * speed * speed);
        } else {
            values.block(j, dims, 1, dims).setZero();
        }
        values(j, 2 * dims) = kappa;
    }
    // stationary samples borrow the chord direction
    for (Index j = 0; j < k; ++j) {
        if (values.block(j, dims, 1, dims).squaredNorm() == 0.0) {
            const Index a = std::max<Index>(0, j - 1);
            const Index b = std::min<Index>(k - 1, j + 1);
            Eigen::RowVectorXd chord = values.block(b, 0, 1, dims) - values.block(a, 0, 1, dims);
            values.block(j, dims, 1, dims) = chord / chord.norm();
        }
    }

    ArcCurve arc;
    arc.length = length;
    arc.s = VectorXd::LinSpaced(n, 0.0, length);
    const InterpResult r = interp_linear(knots, values, arc.s);
    arc.positions = r.q.leftCols(dims);
    arc.tangent = r.q.middleCols(dims, dims);
    for (Index i = 0; i < n; ++i) arc.tangent.row(i).normalize();
    arc.curvature = r.q.col(2 * dims).cwiseMax(0.0);
    return arc;
}

ArcCurve arclength_reparam(const ParamCurve& curve, const HardwareLimits& hw, double oversampling) {
    hw.validate();
    curve.validate();
    return arclength_reparam(curve, default_arc_samples(polyline_length(curve), hw, oversampling));
}

VectorXd speed_limit(const ArcCurve& arc, const HardwareLimits& hw) {
    hw.validate();
    const double amp = hw.max_speed();
    VectorXd v(arc.size());
    for (Index i = 0; i < arc.size(); ++i) {
        const double kappa = arc.curvature(i);
        v(i) = kappa > 0.0 ? std::min(amp, std::sqrt(hw.gamma_bar * hw.s_max / kappa)) : amp;
    }
    return v;
}

}  // namespace optiks
