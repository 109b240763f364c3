#pragma once

#include "optiks/geometry.hpp"
#include "optiks/losses.hpp"
#include "optiks/pipeline.hpp"

#include <Eigen/Dense>

#include <complex>
#include <limits>
#include <optional>
#include <vector>

namespace optiks {

class PnsResponseModel;

inline constexpr double kLimitTolerance = 1e-3;

/// max_n ||g_n||_2
double max_gradient_norm(const Waveform& w);
/// max_n ||S_n||_2 (0 for a single-sample waveform)
double max_slew_norm(const Waveform& w);

struct LimitCheck {
    double value = 0.0;
    double limit = 0.0;
    bool checked = false;
    bool pass = true;

    /// value / limit
    double utilization() const { return limit > 0.0 ? value / limit : 0.0; }
};

struct LimitReport {
    LimitCheck gradient;
    LimitCheck slew;
    LimitCheck pns;
    LimitCheck duration;

    bool pass() const { return gradient.pass && slew.pass && pns.pass && duration.pass; }
};

LimitReport verify_limits(const Waveform& w, const HardwareLimits& hw, const PnsResponseModel* pns = nullptr,
                          std::optional<double> p_max = std::nullopt, std::optional<double> t_max = std::nullopt);

struct BandPower {
    double f_lo = 0.0;
    double f_hi = 0.0;
    double power = 0.0;
};

struct SpectrumReport {
    std::size_t dft_length = 0;
    Eigen::VectorXd freq;       // one-sided bin frequencies
    Eigen::MatrixXd magnitude;  // |G_axis(f)| per one-sided bin
    double total_power = 0.0;   // two-sided sum of |G|^2 over all axes
    std::vector<BandPower> bands;

    double band_total() const;
};

SpectrumReport power_spectrum(const Waveform& w, const BandSet* bands = nullptr, double max_bin_hz = 5.0);

/// Trajectory recovered by integrating the gradient: k[n] = gamma_bar * dt * sum_{m<=n} g[m].
Eigen::MatrixXd integrate_gradient(const Waveform& w, double gamma_bar);

struct FidelityReport {
    double max_deviation = 0.0;
    double rms_deviation = 0.0;
    Eigen::VectorXd deviation;  // per raster sample
};

/// Compare the integrated waveform with the arc evaluated at known arc-length progress
/// (same tangent-aware interpolation the design pipeline uses).
FidelityReport kspace_fidelity(const Waveform& w, const ArcCurve& arc, const Eigen::VectorXd& s_progress,
                               double gamma_bar);

/// Same comparison when progress is unknown: each integrated sample is matched to the
/// closest arc point in a window just ahead of the previous match. The arc polyline is
/// the reference, so pass an arc sampled finely enough to resolve the curve.
FidelityReport kspace_fidelity(const Waveform& w, const ArcCurve& arc, double gamma_bar);

// ---------------------------------------------------------------------------
// Acoustic transfer function fitting

struct SpectrumPair {
    Eigen::VectorXcd input;   // gradient spectrum I(f)
    Eigen::VectorXcd output;  // measured acoustic spectrum O(f)
};

struct AtfReference {
    double f_ref = 1000.0;
    std::vector<double> scale;  // measured |O/I| at f_ref, one per axis
};

/// Per-axis least-squares transfer function sum_j conj(I_j) O_j / sum_j |I_j|^2.
/// Bins whose input energy falls below `min_energy` are NaN.
Eigen::MatrixXcd fit_atf_complex(const std::vector<std::vector<SpectrumPair>>& axes, double min_energy = 1e-30);

/// Magnitude fit on `freq`, rescaled per axis so |A(f_ref)| matches the reference.
Atf fit_atf(const Eigen::VectorXd& freq, const std::vector<std::vector<SpectrumPair>>& axes,
            const std::optional<AtfReference>& reference = std::nullopt, double min_energy = 1e-30);

/// Pointwise maximum of two fits on the same grid (e.g. two microphones).
Atf merge_atf_max(const Atf& a, const Atf& b);

/// Count of usable (non-missing) bins per axis.
std::vector<Eigen::Index> usable_bins(const Atf& atf);

// ---------------------------------------------------------------------------

struct ProbeConfig {
    Eigen::Index axis = 0;
    Eigen::Index dims = 3;
    double f_lo = 50.0;
    double f_hi = 2000.0;
    double step = 10.0;
    double duration = 0.120;
    double tail = 0.020;      // zero ring-down window
    double amplitude = 0.01;  // T/m
    double dt = 4e-6;
};

/// Single-axis sinusoids amplitude*sin(2 pi f t) at f_lo, f_lo+step, ..., f_hi.
std::vector<Waveform> gen_probe_waveforms(const ProbeConfig& cfg);
std::vector<double> probe_frequencies(const ProbeConfig& cfg);

// ---------------------------------------------------------------------------
// Point spread function

struct PsfConfig {
    double t2star = std::numeric_limits<double>::infinity();  // s
    double off_resonance_hz = 0.0;
    Eigen::Index grid = 128;
    double fov = 0.0;  // image width, m; 0 => 8 pixels per nominal resolution 1/(2 k_max)
    bool radial_density_compensation = true;
};

struct PsfResult {
    Eigen::MatrixXd magnitude;  // grid x grid, peak-normalized
    double pixel = 0.0;         // m
    double fwhm_x = 0.0;        // m
    double fwhm_y = 0.0;        // m
};

/// Direct conjugate-phase sum over 2D sample positions (cycles/m) acquired at times t.
PsfResult psf_from_samples(const Eigen::MatrixXd& k, const Eigen::VectorXd& t, const PsfConfig& cfg);

/// PSF of the trajectory a waveform traces (integrated from its gradient).
PsfResult psf_simulate(const Waveform& w, double gamma_bar, const PsfConfig& cfg);

/// Full width at half maximum of a sampled profile with peak at `center`, by linear interpolation.
double fwhm(const Eigen::VectorXd& profile, Eigen::Index center, double spacing);

/// Worker count from OPTIKS_THREADS (default 1, never below 1).
unsigned configured_threads();

}  // namespace optiks
