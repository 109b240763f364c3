#pragma once

#include <Eigen/Dense>

#include <vector>

namespace optiks {

/// Bin assignment of each query p_i into a knot interval [x_{j-1}, x_j].
/// `upper[i]` holds j; the lower neighbor is j - 1.
struct InterpPlan {
    std::vector<Eigen::Index> upper;

    Eigen::Index size() const { return static_cast<Eigen::Index>(upper.size()); }
};

struct InterpResult {
    Eigen::MatrixXd q;  // one column per column of y
    InterpPlan plan;
};

/// Bin queries into x. Requires x strictly increasing and p within [x0, x_end]
/// (a relative 1e-12 overshoot is clamped; anything further throws QueryOutOfRange).
InterpPlan make_interp_plan(const Eigen::VectorXd& x, const Eigen::VectorXd& p);

/// Piecewise-linear interpolation of each column of y at p.
InterpResult interp_linear(const Eigen::VectorXd& x, const Eigen::MatrixXd& y, const Eigen::VectorXd& p);

/// Evaluate the affine bin formula with a fixed plan. Queries are not required to
/// lie inside their bin, which is what makes the plan-frozen map smooth in (x, y, p).
Eigen::MatrixXd interp_apply(const InterpPlan& plan, const Eigen::VectorXd& x, const Eigen::MatrixXd& y,
                             const Eigen::VectorXd& p);

struct InterpCotangents {
    Eigen::VectorXd x;
    Eigen::MatrixXd y;
    Eigen::VectorXd p;
};

/// Vector-Jacobian product of interp_apply with the plan held constant.
InterpCotangents interp_vjp(const InterpPlan& plan, const Eigen::VectorXd& x, const Eigen::MatrixXd& y,
                            const Eigen::VectorXd& p, const Eigen::MatrixXd& cot_q);

/// Cubic Hermite interpolation of y with knot slopes dy, evaluated with a fixed plan.
/// `slope`, when given, receives dq/dp row by row.
Eigen::MatrixXd interp_hermite_apply(const InterpPlan& plan, const Eigen::VectorXd& x, const Eigen::MatrixXd& y,
                                     const Eigen::MatrixXd& dy, const Eigen::VectorXd& p,
                                     Eigen::MatrixXd* slope = nullptr);

}  // namespace optiks
