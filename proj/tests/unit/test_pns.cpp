#include <doctest.h>

#include "support.hpp"

#include <random>

using namespace optiks;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
const PnsModel kModel{20.0, 360e-6, 0.333};
}

TEST_CASE("PNS model validation") {
    CHECK_NOTHROW(kModel.validate());
    CHECK_THROWS_AS(PnsModel({0.0, 1e-4, 1.0}).validate(), Error);
    CHECK_THROWS_AS(PnsModel({1.0, -1e-4, 1.0}).validate(), Error);
}

TEST_CASE("point-sampled kernel") {
    const VectorXd h = nerve_kernel(kModel, 4e-6, 5);
    for (int k = 0; k < 5; ++k) {
        const double t = k * 4e-6;
        CHECK(h(k) == doctest::Approx(kModel.coil_length * kModel.chronaxie /
                                      (kModel.rheobase * std::pow(kModel.chronaxie + t, 2))));
    }
}

TEST_CASE("cell weights integrate the kernel exactly") {
    const double dt = 4e-6;
    const VectorXd w = nerve_kernel_cell_weights(kModel, dt, 1000);
    double acc = 0.0;
    for (int k = 0; k < 1000; ++k) {
        acc += w(k);
        const double t = (k + 1) * dt;
        const double closed = kModel.coil_length / kModel.rheobase * (1.0 - kModel.chronaxie / (kModel.chronaxie + t));
        CHECK(acc == doctest::Approx(closed).epsilon(1e-12));
    }
}

TEST_CASE("step slew response matches the closed form") {
    const double dt = 4e-6, s0 = 80.0;
    const IecPnsModel m(kModel);
    MatrixXd slew = MatrixXd::Zero(2000, 3);
    slew.col(1).setConstant(s0);
    const VectorXd p = m.response(slew, dt);
    for (int n = 0; n < 2000; n += 37) {
        const double t = (n + 1) * dt;
        const double closed =
            100.0 * s0 * (kModel.coil_length / kModel.rheobase) * (1.0 - kModel.chronaxie / (kModel.chronaxie + t));
        CHECK(p(n) == doctest::Approx(closed).epsilon(1e-9));
    }
}

TEST_CASE("response is the norm across axes of per-axis filtered slew") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    const MatrixXd slew = MatrixXd::NullaryExpr(300, 2, [&] { return 50.0 * nd(rng); });
    const IecPnsModel m(kModel);
    const MatrixXd f = m.filtered(slew, 4e-6);
    const VectorXd p = m.response(slew, 4e-6);
    for (int n = 0; n < 300; n += 11) CHECK(p(n) == doctest::Approx(100.0 * f.row(n).norm()).epsilon(1e-12));
    CHECK(pns_response(Waveform::from_gradient(MatrixXd::Zero(301, 2), 4e-6), kModel).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("FFT causal convolution and its adjoint against direct sums") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    const VectorXd h = VectorXd::NullaryExpr(70, [&] { return nd(rng); });
    const MatrixXd x = MatrixXd::NullaryExpr(70, 2, [&] { return nd(rng); });
    const MatrixXd y = causal_convolve(h, x);
    const MatrixXd z = causal_convolve_adjoint(h, x);
    for (int n = 0; n < 70; ++n) {
        for (int d = 0; d < 2; ++d) {
            double a = 0.0, b = 0.0;
            for (int k = 0; k <= n; ++k) a += h(k) * x(n - k, d);
            for (int m = n; m < 70; ++m) b += h(m - n) * x(m, d);
            CHECK(y(n, d) == doctest::Approx(a).epsilon(1e-10));
            CHECK(z(n, d) == doctest::Approx(b).epsilon(1e-10));
        }
    }
}

TEST_CASE("response VJP matches central differences") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    const MatrixXd slew = MatrixXd::NullaryExpr(120, 3, [&] { return 40.0 * nd(rng); });
    const VectorXd w = VectorXd::NullaryExpr(120, [&] { return nd(rng); });
    const IecPnsModel m(kModel);
    const MatrixXd c = m.response_vjp(slew, 4e-6, w);
    for (int n = 0; n < 120; n += 13) {
        for (int d = 0; d < 3; ++d) {
            MatrixXd a = slew, b = slew;
            a(n, d) += 1e-5;
            b(n, d) -= 1e-5;
            const double fd = (m.response(a, 4e-6).dot(w) - m.response(b, 4e-6).dot(w)) / 2e-5;
            CHECK(c(n, d) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("PNS barrier value is the leaky barrier of the response") {
    const IecPnsModel m(kModel);
    const Waveform w = Waveform::from_gradient(MatrixXd::Constant(50, 1, 0.0) + VectorXd::LinSpaced(50, 0.0, 0.01), 4e-6);
    const VectorXd p = m.response(w.slew, w.dt);
    const PnsBarrier b = pns_barrier(w, m, 80.0, 5e-5);
    CHECK(b.value == doctest::Approx(leaky_log_barrier(p, {80.0, 5e-5})));
    CHECK(b.cot_slew.rows() == w.slew.rows());
}
