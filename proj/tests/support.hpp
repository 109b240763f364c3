#pragma once

#include "optiks/optiks.hpp"

#include <cmath>
#include <numbers>

namespace optiks::test {

inline constexpr double kPi = std::numbers::pi;

inline ParamCurve line_curve(double length, Eigen::Index n, double angle = 0.0) {
    ParamCurve c;
    c.points.resize(n, 2);
    c.params.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = length * static_cast<double>(i) / static_cast<double>(n - 1);
        c.params(i) = s;
        c.points(i, 0) = s * std::cos(angle);
        c.points(i, 1) = s * std::sin(angle);
    }
    return c;
}

// counter-clockwise circle of radius rho starting at (rho, 0)
inline ParamCurve circle_curve(double rho, double turns, Eigen::Index n) {
    ParamCurve c;
    c.points.resize(n, 2);
    c.params.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double th = 2.0 * kPi * turns * static_cast<double>(i) / static_cast<double>(n - 1);
        c.params(i) = th;
        c.points(i, 0) = rho * std::cos(th);
        c.points(i, 1) = rho * std::sin(th);
    }
    return c;
}

inline double rel_err(double a, double b, double floor = 1e-300) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace optiks::test
