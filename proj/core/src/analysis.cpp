#include "optiks/analysis.hpp"

#include "optiks/error.hpp"
#include "optiks/pns.hpp"
#include "optiks/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <thread>

namespace optiks {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

double max_gradient_norm(const Waveform& w) { return w.n_t() == 0 ? 0.0 : w.g.rowwise().norm().maxCoeff(); }

double max_slew_norm(const Waveform& w) { return w.slew.rows() == 0 ? 0.0 : w.slew.rowwise().norm().maxCoeff(); }

namespace {

LimitCheck make_check(double value, double limit) {
    LimitCheck c;
    c.value = value;
    c.limit = limit;
    c.checked = true;
    c.pass = value <= limit * (1.0 + kLimitTolerance);
    return c;
}

}  // namespace

LimitReport verify_limits(const Waveform& w, const HardwareLimits& hw, const PnsResponseModel* pns,
                          std::optional<double> p_max, std::optional<double> t_max) {
    LimitReport r;
    r.gradient = make_check(max_gradient_norm(w), hw.g_max);
    r.slew = make_check(max_slew_norm(w), hw.s_max);
    if (pns != nullptr && p_max) {
        const VectorXd p = w.slew.rows() > 0 ? pns->response(w.slew, w.dt) : VectorXd();
        r.pns = make_check(p.size() > 0 ? p.maxCoeff() : 0.0, *p_max);
    } else if (pns != nullptr) {
        const VectorXd p = w.slew.rows() > 0 ? pns->response(w.slew, w.dt) : VectorXd();
        r.pns.value = p.size() > 0 ? p.maxCoeff() : 0.0;
    }
    if (t_max) r.duration = make_check(w.duration(), *t_max);
    else r.duration.value = w.duration();
    return r;
}

double SpectrumReport::band_total() const {
    double s = 0.0;
    for (const auto& b : bands) s += b.power;
    return s;
}

SpectrumReport power_spectrum(const Waveform& w, const BandSet* bands, double max_bin_hz) {
    if (w.n_t() < 1) throw Error(ErrorCode::InvalidParams, "waveform is empty");
    SpectrumReport r;
    r.dft_length = padded_dft_length(static_cast<std::size_t>(w.n_t()), w.dt, max_bin_hz);
    const RealFft& fft = real_fft(r.dft_length);
    const auto bins = static_cast<Index>(fft.bins());
    r.freq.resize(bins);
    for (Index k = 0; k < bins; ++k) r.freq(k) = bin_frequency(static_cast<std::size_t>(k), r.dft_length, w.dt);
    r.magnitude.resize(bins, w.dims());
    if (bands != nullptr) {
        for (const auto& [lo, hi] : bands->bands()) r.bands.push_back({lo, hi, 0.0});
    }
    VectorXd col;
    for (Index d = 0; d < w.dims(); ++d) {
        col = w.g.col(d);
        const auto spec = fft.forward(col.data(), static_cast<std::size_t>(w.n_t()));
        for (Index k = 0; k < bins; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const double p = std::norm(spec[ku]) * bin_multiplicity(ku, r.dft_length);
            r.magnitude(k, d) = std::abs(spec[ku]);
            r.total_power += p;
            for (auto& b : r.bands) {
                if (r.freq(k) >= b.f_lo && r.freq(k) <= b.f_hi) b.power += p;
            }
        }
    }
    return r;
}

MatrixXd integrate_gradient(const Waveform& w, double gamma_bar) {
    MatrixXd k(w.n_t(), w.dims());
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(w.dims());
    for (Index n = 0; n < w.n_t(); ++n) {
        acc += w.g.row(n);
        k.row(n) = gamma_bar * w.dt * acc;
    }
    return k;
}

namespace {

FidelityReport summarize(VectorXd dev) {
    FidelityReport r;
    if (dev.size() > 0) {
        r.max_deviation = dev.maxCoeff();
        r.rms_deviation = std::sqrt(dev.squaredNorm() / static_cast<double>(dev.size()));
    }
    r.deviation = std::move(dev);
    return r;
}

}  // namespace

FidelityReport kspace_fidelity(const Waveform& w, const ArcCurve& arc, const VectorXd& s_progress, double gamma_bar) {
    if (w.dims() != arc.dims()) throw Error(ErrorCode::AxisCountMismatch, "waveform and arc differ in axes");
    if (s_progress.size() > w.n_t()) throw Error(ErrorCode::ShapeMismatch, "more progress samples than waveform samples");
    const MatrixXd k = integrate_gradient(w, gamma_bar);
    const VectorXd clamped = s_progress.cwiseMax(0.0).cwiseMin(arc.s(arc.size() - 1));
    const MatrixXd ref = interp_hermite_apply(make_interp_plan(arc.s, clamped), arc.s, arc.positions, arc.tangent, clamped);
    VectorXd dev(w.n_t());
    for (Index n = 0; n < w.n_t(); ++n) {
        // samples past the progress record (a trailing rest sample) are held at the end point
        const Index m = std::min(n, s_progress.size() - 1);
        dev(n) = (arc.positions.row(0) + k.row(n) - ref.row(m)).norm();
    }
    return summarize(std::move(dev));
}

FidelityReport kspace_fidelity(const Waveform& w, const ArcCurve& arc, double gamma_bar) {
    if (w.dims() != arc.dims()) throw Error(ErrorCode::AxisCountMismatch, "waveform and arc differ in axes");
    const Index segs = arc.size() - 1;
    const MatrixXd k = integrate_gradient(w, gamma_bar);
    const double step = gamma_bar * w.dt * max_gradient_norm(w);
    const Index window = static_cast<Index>(std::ceil(step / arc.spacing())) + 2;
    VectorXd dev(w.n_t());
    Index j = 0;
    for (Index n = 0; n < w.n_t(); ++n) {
        const Eigen::RowVectorXd p = arc.positions.row(0) + k.row(n);
        double best = std::numeric_limits<double>::infinity();
        Index best_j = j;
        for (Index s = j; s < std::min(segs, j + window + 1); ++s) {
            const Eigen::RowVectorXd a = arc.positions.row(s);
            const Eigen::RowVectorXd d = arc.positions.row(s + 1) - a;
            const double len2 = d.squaredNorm();
            const double u = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
            const double dist = (a + u * d - p).norm();
            if (dist < best) {
                best = dist;
                best_j = s;
            }
        }
        dev(n) = best;
        j = best_j;
    }
    return summarize(std::move(dev));
}

// ---------------------------------------------------------------------------

MatrixXcd fit_atf_complex(const std::vector<std::vector<SpectrumPair>>& axes, double min_energy) {
    if (axes.empty()) throw Error(ErrorCode::InvalidParams, "no axes to fit");
    Index bins = -1;
    for (const auto& pairs : axes) {
        if (pairs.empty()) throw Error(ErrorCode::InvalidParams, "every axis needs at least one spectrum pair");
        for (const auto& p : pairs) {
            if (bins < 0) bins = p.input.size();
            if (p.input.size() != bins || p.output.size() != bins) {
                throw Error(ErrorCode::ShapeMismatch, "spectrum pairs must share one frequency grid");
            }
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    MatrixXcd a(bins, static_cast<Index>(axes.size()));
    for (std::size_t d = 0; d < axes.size(); ++d) {
        for (Index k = 0; k < bins; ++k) {
            std::complex<double> num = 0.0;
            double den = 0.0;
            for (const auto& p : axes[d]) {
                num += std::conj(p.input(k)) * p.output(k);
                den += std::norm(p.input(k));
            }
            a(k, static_cast<Index>(d)) = den > min_energy ? num / den : std::complex<double>(nan, nan);
        }
    }
    return a;
}

Atf fit_atf(const VectorXd& freq, const std::vector<std::vector<SpectrumPair>>& axes,
            const std::optional<AtfReference>& reference, double min_energy) {
    const MatrixXcd a = fit_atf_complex(axes, min_energy);
    if (freq.size() != a.rows()) throw Error(ErrorCode::ShapeMismatch, "frequency grid does not match the spectra");
    Atf atf;
    atf.freq = freq;
    atf.magnitude.resize(a.rows(), a.cols());
    for (Index i = 0; i < a.size(); ++i) {
        const std::complex<double> z = a.data()[i];
        atf.magnitude.data()[i] = std::isnan(z.real()) ? std::numeric_limits<double>::quiet_NaN() : std::abs(z);
    }
    if (reference) {
        atf.ref_hz = reference->f_ref;
        if (reference->scale.size() != static_cast<std::size_t>(atf.dims())) {
            throw Error(ErrorCode::AxisCountMismatch, "reference needs one scale per axis");
        }
        atf.validate();
        for (Index d = 0; d < atf.dims(); ++d) {
            const double at_ref = atf.magnitude_at(reference->f_ref, d);
            if (!(at_ref > 0.0)) throw Error(ErrorCode::InvalidParams, "fit is zero at the reference frequency");
            atf.magnitude.col(d) *= reference->scale[static_cast<std::size_t>(d)] / at_ref;
        }
    }
    atf.validate();
    return atf;
}

Atf merge_atf_max(const Atf& a, const Atf& b) {
    if (a.freq.size() != b.freq.size() || a.dims() != b.dims() || (a.freq - b.freq).cwiseAbs().maxCoeff() > 0.0) {
        throw Error(ErrorCode::ShapeMismatch, "ATFs must share a frequency grid and axes");
    }
    Atf m = a;
    for (Index i = 0; i < m.magnitude.size(); ++i) {
        m.magnitude.data()[i] = std::fmax(a.magnitude.data()[i], b.magnitude.data()[i]);
    }
    return m;
}

std::vector<Index> usable_bins(const Atf& atf) {
    std::vector<Index> out;
    for (Index d = 0; d < atf.dims(); ++d) {
        Index c = 0;
        for (Index k = 0; k < atf.magnitude.rows(); ++k) c += std::isnan(atf.magnitude(k, d)) ? 0 : 1;
        out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<double> probe_frequencies(const ProbeConfig& cfg) {
    if (!(cfg.f_lo > 0.0) || !(cfg.f_hi >= cfg.f_lo) || !(cfg.step > 0.0)) {
        throw Error(ErrorCode::InvalidParams, "probe frequencies need 0 < f_lo <= f_hi and step > 0");
    }
    if (cfg.f_hi >= 0.5 / cfg.dt) throw Error(ErrorCode::NyquistViolation, "probe frequency reaches Nyquist");
    std::vector<double> f;
    const auto count = static_cast<long>(std::floor((cfg.f_hi - cfg.f_lo) / cfg.step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) f.push_back(cfg.f_lo + static_cast<double>(i) * cfg.step);
    return f;
}

std::vector<Waveform> gen_probe_waveforms(const ProbeConfig& cfg) {
    if (cfg.dims < 1 || cfg.axis < 0 || cfg.axis >= cfg.dims) throw Error(ErrorCode::InvalidParams, "probe axis out of range");
    if (!(cfg.duration > 0.0) || !(cfg.tail >= 0.0) || !(cfg.dt > 0.0)) {
        throw Error(ErrorCode::InvalidParams, "probe timing must be positive");
    }
    const auto active = static_cast<Index>(std::llround(cfg.duration / cfg.dt));
    const auto tail = static_cast<Index>(std::llround(cfg.tail / cfg.dt));
    std::vector<Waveform> out;
    for (double f : probe_frequencies(cfg)) {
        MatrixXd g = MatrixXd::Zero(active + tail, cfg.dims);
        for (Index n = 0; n < active; ++n) {
            g(n, cfg.axis) = cfg.amplitude * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(n) * cfg.dt);
        }
        out.push_back(Waveform::from_gradient(std::move(g), cfg.dt));
    }
    return out;
}

// ---------------------------------------------------------------------------

unsigned configured_threads() {
    const char* env = std::getenv("OPTIKS_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) return 1;
    return static_cast<unsigned>(std::min<long>(v, 256));
}

double fwhm(const VectorXd& profile, Index center, double spacing) {
    if (center < 0 || center >= profile.size()) throw Error(ErrorCode::InvalidParams, "profile center out of range");
    const double half = 0.5 * profile(center);
    auto edge = [&](int dir) {
        Index i = center;
        while (true) {
            const Index j = i + dir;
            if (j < 0 || j >= profile.size()) return static_cast<double>(i - center);
            if (profile(j) < half) {
                const double frac = (profile(i) - half) / (profile(i) - profile(j));
                return static_cast<double>(i - center) + dir * frac;
            }
            i = j;
        }
    };
    return (edge(+1) - edge(-1)) * spacing;
}

PsfResult psf_from_samples(const MatrixXd& k, const VectorXd& t, const PsfConfig& cfg) {
    if (k.cols() != 2) throw Error(ErrorCode::NonTwoDimensional, "PSF simulation needs a 2D trajectory");
    if (t.size() != k.rows() || k.rows() == 0) throw Error(ErrorCode::ShapeMismatch, "one time per k-space sample");
    if (cfg.grid < 4 || cfg.grid > 256) throw Error(ErrorCode::InvalidParams, "PSF grid must be in [4, 256]");
    const double kmax = k.rowwise().norm().maxCoeff();
    if (!(kmax > 0.0) && !(cfg.fov > 0.0)) throw Error(ErrorCode::InvalidParams, "cannot size a PSF for a zero trajectory");

    PsfResult r;
    r.pixel = cfg.fov > 0.0 ? cfg.fov / static_cast<double>(cfg.grid) : 1.0 / (16.0 * kmax);
    const Index m = k.rows();
    const Index n = cfg.grid;
    const double two_pi = 2.0 * std::numbers::pi;

    VectorXcd d(m);
    for (Index j = 0; j < m; ++j) {
        const double decay = std::isinf(cfg.t2star) ? 1.0 : std::exp(-t(j) / cfg.t2star);
        const double phase = -two_pi * cfg.off_resonance_hz * t(j);
        const double dcf = cfg.radial_density_compensation ? k.row(j).norm() : 1.0;
        d(j) = dcf * decay * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    // separable exponentials: image = Ex^T diag(d) Ey
    MatrixXcd ex(m, n), ey(m, n);
    for (Index c = 0; c < n; ++c) {
        const double x = static_cast<double>(c - n / 2) * r.pixel;
        for (Index j = 0; j < m; ++j) {
            const double px = two_pi * k(j, 0) * x;
            const double py = two_pi * k(j, 1) * x;
            ex(j, c) = {std::cos(px), std::sin(px)};
            ey(j, c) = {std::cos(py), std::sin(py)};
        }
    }
    const MatrixXcd weighted = d.asDiagonal() * ey;
    MatrixXcd img(n, n);  // rows: x index, cols: y index
    const unsigned threads = std::min<unsigned>(configured_threads(), static_cast<unsigned>(n));
    auto work = [&](Index c0, Index c1) {
        img.middleCols(c0, c1 - c0).noalias() = ex.transpose() * weighted.middleCols(c0, c1 - c0);
    };
    if (threads <= 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const Index chunk = (n + threads - 1) / threads;
        for (Index c0 = 0; c0 < n; c0 += chunk) pool.emplace_back(work, c0, std::min(n, c0 + chunk));
        for (auto& th : pool) th.join();
    }

    r.magnitude = img.cwiseAbs();
    const double peak = r.magnitude(n / 2, n / 2);
    if (peak > 0.0) r.magnitude /= peak;
    r.fwhm_x = fwhm(r.magnitude.col(n / 2), n / 2, r.pixel);
    r.fwhm_y = fwhm(r.magnitude.row(n / 2).transpose(), n / 2, r.pixel);
    return r;
}

PsfResult psf_simulate(const Waveform& w, double gamma_bar, const PsfConfig& cfg) {
    if (w.dims() != 2) throw Error(ErrorCode::NonTwoDimensional, "PSF simulation needs a 2D waveform");
    const MatrixXd k = integrate_gradient(w, gamma_bar);
    VectorXd t(w.n_t());
    for (Index n = 0; n < w.n_t(); ++n) t(n) = static_cast<double>(n) * w.dt;
    return psf_from_samples(k, t, cfg);
}

}  // namespace optiks
