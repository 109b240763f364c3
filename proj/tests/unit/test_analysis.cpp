#include <doctest.h>

#include "support.hpp"

#include <complex>
#include <cstdlib>
#include <random>

using namespace optiks;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cd = std::complex<double>;

TEST_CASE("limit checks use a relative tolerance of 1e-3") {
    HardwareLimits hw;
    const Waveform zero = Waveform::from_gradient(MatrixXd::Zero(10, 3), hw.dt);
    CHECK(verify_limits(zero, hw).pass());
    MatrixXd g = MatrixXd::Zero(3, 1);
    g(1, 0) = hw.s_max * hw.dt * 1.0005;
    CHECK(verify_limits(Waveform::from_gradient(g, hw.dt), hw).pass());
    g(1, 0) = hw.s_max * hw.dt * 1.002;
    const LimitReport r = verify_limits(Waveform::from_gradient(g, hw.dt), hw);
    CHECK_FALSE(r.pass());
    CHECK_FALSE(r.slew.pass);
    CHECK(r.gradient.pass);
    const LimitReport t = verify_limits(zero, hw, nullptr, std::nullopt, 8.0 * hw.dt);
    CHECK_FALSE(t.duration.pass);  // 9 steps > 8
}

TEST_CASE("spectrum band table agrees with the band loss") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd;
    const Waveform w = Waveform::from_gradient(MatrixXd::NullaryExpr(500, 2, [&] { return 0.01 * nd(rng); }), 4e-6);
    const BandSet bands({{550, 650}, {1100, 1300}});
    const SpectrumReport s = power_spectrum(w, &bands);
    CHECK(s.band_total() == doctest::Approx(band_power_loss(w, bands, false).value).epsilon(1e-12));
    // Parseval on the padded transform
    CHECK(s.total_power == doctest::Approx(static_cast<double>(s.dft_length) * w.g.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("integrating the gradient recovers positions") {
    HardwareLimits hw;
    MatrixXd c(5, 2);
    c << 0, 0, 1, 2, 3, 3, 4, 7, 9, 9;
    const Waveform w = gradient_and_slew(c, hw);
    const MatrixXd k = integrate_gradient(w, hw.gamma_bar);
    CHECK((k - c).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("designed waveform follows the prescribed trajectory") {
    HardwareLimits hw;
    SpiralParams sp;
    sp.fov = 0.2;
    sp.resolution = 0.002;
    sp.interleaves = 4;
    const ParamCurve curve = gen_trajectory(sp);
    const ArcCurve arc = arclength_reparam(curve, hw, 4.0);
    const ForwardCache f = waveform_for_speed(arc, hw, time_optimal_speed(arc, hw, TerminalSpeed::Zero), TerminalSpeed::Zero);
    const double k_max = arc.max_radius();
    CHECK(kspace_fidelity(f.waveform, arc, f.resample.s_of_tau, hw.gamma_bar).max_deviation < 1e-9 * k_max);
    const ArcCurve dense = arclength_reparam(curve, curve.size());
    CHECK(kspace_fidelity(f.waveform, dense, hw.gamma_bar).max_deviation < 1e-3 * k_max);
    // a shifted waveform is caught
    Waveform bad = f.waveform;
    bad.g.col(0).array() += 1e-4;
    CHECK(kspace_fidelity(bad, dense, hw.gamma_bar).max_deviation > 1e-3 * k_max);
}

namespace {

std::vector<SpectrumPair> pairs_for(const VectorXcd& a, int count, double noise, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<SpectrumPair> out;
    for (int j = 0; j < count; ++j) {
        SpectrumPair p;
        p.input = VectorXcd::NullaryExpr(a.size(), [&] { return cd(nd(rng), nd(rng)); });
        p.output = a.cwiseProduct(p.input);
        p.output += VectorXcd::NullaryExpr(a.size(), [&] { return noise * cd(nd(rng), nd(rng)); });
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

TEST_CASE("ATF fit: noiseless recovery and the least-squares oracle") {
    const int bins = 40;
    VectorXd freq = VectorXd::LinSpaced(bins, 100.0, 2050.0);
    VectorXcd a0(bins), a1(bins);
    for (int k = 0; k < bins; ++k) {
        a0(k) = std::polar(1.0 + 0.5 * std::sin(k * 0.3), 0.1 * k);
        a1(k) = std::polar(0.2 + k * 0.01, -0.05 * k);
    }
    const auto clean = std::vector<std::vector<SpectrumPair>>{pairs_for(a0, 3, 0.0, 1), pairs_for(a1, 2, 0.0, 2)};
    const Atf fit = fit_atf(freq, clean);
    for (int k = 0; k < bins; ++k) {
        CHECK(test::rel_err(fit.magnitude(k, 0), std::abs(a0(k))) < 1e-6);
        CHECK(test::rel_err(fit.magnitude(k, 1), std::abs(a1(k))) < 1e-6);
    }

    const auto noisy = std::vector<std::vector<SpectrumPair>>{pairs_for(a0, 4, 0.3, 3)};
    const Eigen::MatrixXcd z = fit_atf_complex(noisy);
    for (int k = 0; k < bins; ++k) {
        // normal equations of min_a sum_j |O_j - a I_j|^2, solved with a 1x1 QR
        Eigen::MatrixXcd design(4, 1);
        Eigen::VectorXcd rhs(4);
        for (int j = 0; j < 4; ++j) {
            design(j, 0) = noisy[0][j].input(k);
            rhs(j) = noisy[0][j].output(k);
        }
        const cd oracle = design.colPivHouseholderQr().solve(rhs)(0);
        CHECK(std::abs(z(k, 0) - oracle) <= 1e-10 * std::abs(oracle));
    }
}

TEST_CASE("ATF reference scaling, missing bins and merging") {
    VectorXd freq(3);
    freq << 500.0, 1000.0, 1500.0;
    VectorXcd a(3);
    a << 2.0, 4.0, 8.0;
    auto pairs = pairs_for(a, 2, 0.0, 5);
    for (auto& p : pairs) p.input(2) = 0.0;
    const Atf fit = fit_atf(freq, {pairs}, AtfReference{1000.0, {1.0}});
    CHECK(fit.magnitude(0, 0) == doctest::Approx(0.5));
    CHECK(fit.magnitude(1, 0) == doctest::Approx(1.0));
    CHECK(std::isnan(fit.magnitude(2, 0)));
    CHECK(usable_bins(fit)[0] == 2);
    Atf other = fit;
    other.magnitude(0, 0) = 3.0;
    other.magnitude(2, 0) = 7.0;
    const Atf m = merge_atf_max(fit, other);
    CHECK(m.magnitude(0, 0) == 3.0);
    CHECK(m.magnitude(2, 0) == 7.0);
}

TEST_CASE("probe waveforms") {
    ProbeConfig cfg;
    cfg.f_lo = 100.0;
    cfg.f_hi = 130.0;
    const auto f = probe_frequencies(cfg);
    CHECK(f == std::vector<double>{100.0, 110.0, 120.0, 130.0});
    const auto w = gen_probe_waveforms(cfg);
    REQUIRE(w.size() == 4);
    CHECK(w[0].n_t() == 35000);
    CHECK(w[0].g.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(w[0].g.col(0).cwiseAbs().maxCoeff() == doctest::Approx(cfg.amplitude).epsilon(1e-6));
    CHECK(w[0].g.bottomRows(5000).cwiseAbs().maxCoeff() == 0.0);
    cfg.f_hi = 200e3;
    CHECK_THROWS_AS(probe_frequencies(cfg), Error);
}

TEST_CASE("FWHM of a sampled triangle") {
    VectorXd p(9);
    p << 0, 0, 0.25, 0.5, 1.0, 0.5, 0.25, 0, 0;
    CHECK(fwhm(p, 4, 2.0) == doctest::Approx(4.0));
}

TEST_CASE("PSF equals a direct DFT sum, threaded or not") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    const int m = 50;
    MatrixXd k = MatrixXd::NullaryExpr(m, 2, [&] { return u(rng); });
    VectorXd t = VectorXd::LinSpaced(m, 0.0, 5e-3);
    PsfConfig cfg;
    cfg.grid = 16;
    cfg.t2star = 20e-3;
    cfg.off_resonance_hz = 40.0;
    const PsfResult r = psf_from_samples(k, t, cfg);
    auto direct = [&](int a, int b) {
        cd acc = 0.0;
        for (int j = 0; j < m; ++j) {
            const double x = (a - 8) * r.pixel, y = (b - 8) * r.pixel;
            const double w = k.row(j).norm() * std::exp(-t(j) / cfg.t2star);
            acc += w * std::polar(1.0, -2.0 * test::kPi * cfg.off_resonance_hz * t(j)) *
                   std::polar(1.0, 2.0 * test::kPi * (k(j, 0) * x + k(j, 1) * y));
        }
        return std::abs(acc);
    };
    const double peak = direct(8, 8);
    for (int a = 0; a < 16; a += 3) {
        for (int b = 0; b < 16; b += 5) CHECK(r.magnitude(a, b) == doctest::Approx(direct(a, b) / peak).epsilon(1e-10));
    }
    CHECK(r.pixel == doctest::Approx(1.0 / (16.0 * k.rowwise().norm().maxCoeff())));
    setenv("OPTIKS_THREADS", "3", 1);
    CHECK(configured_threads() == 3);
    const PsfResult threaded = psf_from_samples(k, t, cfg);
    unsetenv("OPTIKS_THREADS");
    CHECK(configured_threads() == 1);
    CHECK((threaded.magnitude - r.magnitude).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(psf_from_samples(MatrixXd::Zero(3, 3), VectorXd::Zero(3), cfg), Error);
}

TEST_CASE("norms are invariant under rotations of the gradient axes") {
    std::mt19937_64 rng(30);
    std::normal_distribution<double> nd;
    const Waveform w = Waveform::from_gradient(MatrixXd::NullaryExpr(400, 3, [&] { return 0.01 * nd(rng); }), 4e-6);
    const Eigen::Matrix3d q = Eigen::Quaterniond(nd(rng), nd(rng), nd(rng), nd(rng)).normalized().toRotationMatrix();
    const Waveform rw = Waveform::from_gradient(w.g * q.transpose(), w.dt);
    CHECK(max_gradient_norm(rw) == doctest::Approx(max_gradient_norm(w)).epsilon(1e-12));
    CHECK(max_slew_norm(rw) == doctest::Approx(max_slew_norm(w)).epsilon(1e-12));
    const IecPnsModel m(PnsModel{20.0, 360e-6, 0.333});
    CHECK((m.response(rw.slew, rw.dt) - m.response(w.slew, w.dt)).cwiseAbs().maxCoeff() <
          1e-10 * m.response(w.slew, w.dt).maxCoeff());
}
