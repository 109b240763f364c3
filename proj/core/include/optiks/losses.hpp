#pragma once

#include "optiks/pipeline.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace optiks {

class PnsResponseModel;

// ---------------------------------------------------------------------------
// Leaky log-barrier

struct BarrierConfig {
    double x_max = 0.0;
    double delta = 0.0;

    double x_switch() const { return x_max - delta; }
    void validate() const;
};

struct BarrierPoint {
    double value;
    double slope;
};

/// -ln(x_max - x) below x_max - delta, continued linearly with matching value and
/// slope beyond it.
BarrierPoint leaky_log_barrier_point(double x, const BarrierConfig& cfg);

/// Sum of leaky_log_barrier_point over x.
double leaky_log_barrier(const Eigen::Ref<const Eigen::VectorXd>& x, const BarrierConfig& cfg);

/// Plain barrier -sum ln(x_max - x); +inf once any x reaches x_max.
double log_barrier(const Eigen::Ref<const Eigen::VectorXd>& x, double x_max);

// ---------------------------------------------------------------------------
// Objective data

struct LossWeights {
    double time = 0.0;
    double bound_time = 0.0;
    double slew = 0.0;
    double pns = 0.0;
    double band = 0.0;
    double acoustic = 0.0;

    void validate() const;
};

/// Union of resonance bands (Hz), kept sorted and merged.
class BandSet {
public:
    BandSet() = default;
    explicit BandSet(std::vector<std::pair<double, double>> bands);

    const std::vector<std::pair<double, double>>& bands() const { return bands_; }
    bool empty() const { return bands_.empty(); }
    bool contains(double f) const;
    /// Throws InvalidParams if any band reaches past 1/(2 dt).
    void check_nyquist(double dt) const;

private:
    std::vector<std::pair<double, double>> bands_;
};

/// Per-axis acoustic transfer function magnitude. NaN entries are missing bins.
struct Atf {
    Eigen::VectorXd freq;       // Hz, increasing
    Eigen::MatrixXd magnitude;  // F x D
    double ref_hz = 1000.0;

    Eigen::Index dims() const { return magnitude.cols(); }
    void validate() const;
    /// Linear interpolation across missing bins and between grid points; constant beyond the grid.
    double magnitude_at(double f, Eigen::Index axis) const;
};

// ---------------------------------------------------------------------------
// Terms

struct SlewBarrier {
    double value = 0.0;
    Eigen::MatrixXd cot_slew;
};

/// Leaky barrier on ||S_n||_2 summed over the raster.
SlewBarrier slew_barrier(const Waveform& w, const BarrierConfig& cfg, bool with_gradient = true);

struct SpectralTerm {
    double value = 0.0;
    Eigen::MatrixXd cot_g;
};

/// Squared Frobenius norm of the zero-padded DFT of all axes over bins inside the band set.
SpectralTerm band_power_loss(const Waveform& w, const BandSet& bands, bool with_gradient = true);

/// Squared Frobenius norm of |A_i(f)| G_i(f) over all axes and bins.
SpectralTerm acoustic_loss(const Waveform& w, const Atf& atf, bool with_gradient = true);

struct DurationTerms {
    double minimize = 0.0;  // weights.time * T / time_scale
    double bound = 0.0;     // weights.bound_time * leaky barrier(T, t_max, delta_T)
    double cot_total = 0.0;  // d/dT in 1/s

    double value() const { return minimize + bound; }
};

/// Both time terms see T / time_scale; time_scale = dt counts raster samples.
DurationTerms duration_terms(double total, std::optional<double> t_max, const LossWeights& weights,
                             std::optional<double> delta_time = std::nullopt, double time_scale = 1.0);

/// Default relaxation for the bound-time barrier.
inline double default_time_delta(double t_max) { return 1e-4 * t_max; }

struct Objective {
    LossWeights weights;
    double s_max = 0.0;
    double delta_slew = 2e-4;
    double delta_pns = 5e-5;
    std::optional<double> delta_time;
    double time_scale = 1.0;  // s per unit of duration seen by the time terms
    std::optional<double> t_max;
    std::optional<double> p_max;
    std::optional<BandSet> bands;
    std::optional<Atf> atf;
    std::shared_ptr<const PnsResponseModel> pns;

    /// Every weighted term must have its data; throws MissingKey / NoActiveTerms.
    void validate() const;
};

struct LossBreakdown {
    double time = 0.0;
    double bound_time = 0.0;
    double slew = 0.0;
    double pns = 0.0;
    double band = 0.0;
    double acoustic = 0.0;
};

struct LossEval {
    double total = 0.0;
    LossBreakdown terms;  // weighted contributions
    Eigen::MatrixXd cot_g;
    double cot_total = 0.0;
};

/// Weighted sum of the active terms with exact cotangents wrt g and T.
LossEval assemble_loss(const Waveform& w, double total, const Objective& objective, bool with_gradient = true);

/// Fold a cotangent on the slew array back onto the gradient samples.
Eigen::MatrixXd slew_cotangent_to_gradient(const Eigen::MatrixXd& cot_slew, double dt);

}  // namespace optiks
