#include "optiks/interp.hpp"

#include "optiks/error.hpp"

#include <algorithm>
#include <cmath>

namespace optiks {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_increasing(const VectorXd& x) {
    if (x.size() < 2) throw Error(ErrorCode::ShapeMismatch, "interpolation needs at least two knots");
    for (Index i = 1; i < x.size(); ++i) {
        if (!(x(i) > x(i - 1))) throw Error(ErrorCode::NonMonotonicX, "knots must be strictly increasing");
    }
}

}  // namespace

InterpPlan make_interp_plan(const VectorXd& x, const VectorXd& p) {
    check_increasing(x);
    const Index m = x.size();
    const double lo = x(0);
    const double hi = x(m - 1);
    const double guard = 1e-12 * std::max({std::abs(lo), std::abs(hi), hi - lo});

    InterpPlan plan;
    plan.upper.resize(static_cast<std::size_t>(p.size()));
    const double* begin = x.data();
    const double* end = x.data() + m;
    Index hint = 1;
    for (Index i = 0; i < p.size(); ++i) {
        const double q = p(i);
        if (!(q >= lo - guard && q <= hi + guard)) {
            throw Error(ErrorCode::QueryOutOfRange, "interpolation query outside the knot range");
        }
        Index j;
        // sorted queries are the common case; try the previous bin first
        if (hint < m && x(hint - 1) <= q && q <= x(hint)) {
            j = hint;
        } else if (hint + 1 < m && x(hint) <= q && q <= x(hint + 1)) {
            j = hint + 1;
        } else {
            j = static_cast<Index>(std::upper_bound(begin, end, q) - begin);
            j = std::clamp<Index>(j, 1, m - 1);
        }
        plan.upper[static_cast<std::size_t>(i)] = j;
        hint = j;
    }
    return plan;
}

MatrixXd interp_apply(const InterpPlan& plan, const VectorXd& x, const MatrixXd& y, const VectorXd& p) {
    if (plan.size() != p.size() || y.rows() != x.size()) {
        throw Error(ErrorCode::ShapeMismatch, "interpolation plan, knots and values disagree in size");
    }
    MatrixXd q(p.size(), y.cols());
    for (Index i = 0; i < p.size(); ++i) {
        const Index j = plan.upper[static_cast<std::size_t>(i)];
        const double w = x(j) - x(j - 1);
        const double a = (x(j) - p(i)) / w;
        const double b = (p(i) - x(j - 1)) / w;
        q.row(i) = a * y.row(j - 1) + b * y.row(j);
    }
    return q;
}

InterpResult interp_linear(const VectorXd& x, const MatrixXd& y, const VectorXd& p) {
    if (y.rows() != x.size()) throw Error(ErrorCode::ShapeMismatch, "values must have one row per knot");
    InterpResult r;
    r.plan = make_interp_plan(x, p);
    const double lo = x(0);
    const double hi = x(x.size() - 1);
    r.q.resize(p.size(), y.cols());
    for (Index i = 0; i < p.size(); ++i) {
        const Index j = r.plan.upper[static_cast<std::size_t>(i)];
        const double q = std::clamp(p(i), lo, hi);
        if (q == x(j)) {
            r.q.row(i) = y.row(j);
        } else if (q == x(j - 1)) {
            r.q.row(i) = y.row(j - 1);
        } else {
            const double w = x(j) - x(j - 1);
            r.q.row(i) = ((x(j) - q) / w) * y.row(j - 1) + ((q - x(j - 1)) / w) * y.row(j);
        }
    }
    return r;
}

InterpCotangents interp_vjp(const InterpPlan& plan, const VectorXd& x, const MatrixXd& y, const VectorXd& p,
                            const MatrixXd& cot_q) {
    if (plan.size() != p.size() || cot_q.rows() != p.size() || cot_q.cols() != y.cols() || y.rows() != x.size()) {
        throw Error(ErrorCode::ShapeMismatch, "interpolation cotangent shapes do not match the plan");
    }
    InterpCotangents c;
    c.x = VectorXd::Zero(x.size());
    c.y = MatrixXd::Zero(y.rows(), y.cols());
    c.p.resize(p.size());
    for (Index i = 0; i < p.size(); ++i) {
        const Index j = plan.upper[static_cast<std::size_t>(i)];
        const double w = x(j) - x(j - 1);
        const double a = (x(j) - p(i)) / w;
        const double b = (p(i) - x(j - 1)) / w;
        // slope of the bin per column, contracted with the incoming cotangent
        const double g = cot_q.row(i).dot(y.row(j) - y.row(j - 1)) / w;
        c.p(i) = g;
        c.x(j - 1) -= a * g;
        c.x(j) -= b * g;
        c.y.row(j - 1) += a * cot_q.row(i);
        c.y.row(j) += b * cot_q.row(i);
    }
    return c;
}

MatrixXd interp_hermite_apply(const InterpPlan& plan, const VectorXd& x, const MatrixXd& y, const MatrixXd& dy,
                              const VectorXd& p, MatrixXd* slope) {
    if (plan.size() != p.size() || y.rows() != x.size() || dy.rows() != y.rows() || dy.cols() != y.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "interpolation plan, knots and values disagree in size");
    }
    MatrixXd q(p.size(), y.cols());
    if (slope) slope->resize(p.size(), y.cols());
    for (Index i = 0; i < p.size(); ++i) {
        const Index j = plan.upper[static_cast<std::size_t>(i)];
        const double h = x(j) - x(j - 1);
        const double u = (p(i) - x(j - 1)) / h;
        const double u2 = u * u;
        const double u3 = u2 * u;
        q.row(i) = (2 * u3 - 3 * u2 + 1) * y.row(j - 1) + (u3 - 2 * u2 + u) * h * dy.row(j - 1) +
                   (3 * u2 - 2 * u3) * y.row(j) + (u3 - u2) * h * dy.row(j);
        if (slope) {
            slope->row(i) = (6 * u2 - 6 * u) / h * (y.row(j - 1) - y.row(j)) + (3 * u2 - 4 * u + 1) * dy.row(j - 1) +
                            (3 * u2 - 2 * u) * dy.row(j);
        }
    }
    return q;
}

}  // namespace optiks
