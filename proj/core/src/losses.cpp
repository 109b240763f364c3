#include "optiks/losses.hpp"

#include "optiks/error.hpp"
#include "optiks/pns.hpp"
#include "optiks/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace optiks {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void BarrierConfig::validate() const {
    if (!std::isfinite(x_max) || !std::isfinite(delta) || !(delta > 0.0)) {
        throw Error(ErrorCode::InvalidParams, "barrier needs a finite limit and delta > 0");
    }
    if (x_max > 0.0 && !(delta < x_max)) throw Error(ErrorCode::InvalidParams, "barrier delta must be below the limit");
}

BarrierPoint leaky_log_barrier_point(double x, const BarrierConfig& cfg) {
    const double xs = cfg.x_switch();
    if (x <= xs) {
        const double gap = cfg.x_max - x;
        return {-std::log(gap), 1.0 / gap};
    }
    return {(x - xs) / cfg.delta - std::log(cfg.delta), 1.0 / cfg.delta};
}

double leaky_log_barrier(const Eigen::Ref<const VectorXd>& x, const BarrierConfig& cfg) {
    double sum = 0.0;
    for (Index i = 0; i < x.size(); ++i) sum += leaky_log_barrier_point(x(i), cfg).value;
    return sum;
}

double log_barrier(const Eigen::Ref<const VectorXd>& x, double x_max) {
    double sum = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        if (!(x(i) < x_max)) return std::numeric_limits<double>::infinity();
        sum -= std::log(x_max - x(i));
    }
    return sum;
}

void LossWeights::validate() const {
    for (double w : {time, bound_time, slew, pns, band, acoustic}) {
        if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::InvalidParams, "loss weights must be finite and >= 0");
    }
    if (time == 0.0 && bound_time == 0.0 && slew == 0.0 && pns == 0.0 && band == 0.0 && acoustic == 0.0) {
        throw Error(ErrorCode::NoActiveTerms, "every loss weight is zero");
    }
    if ((time > 0.0 || bound_time > 0.0) && !(slew > 0.0)) {
        throw Error(ErrorCode::InvalidParams, "a time term needs a positive slew weight");
    }
}

BandSet::BandSet(std::vector<std::pair<double, double>> bands) {
    for (const auto& [lo, hi] : bands) {
        if (!std::isfinite(lo) || !std::isfinite(hi) || lo < 0.0 || !(lo < hi)) {
            throw Error(ErrorCode::InvalidParams, "bands need 0 <= f_lo < f_hi");
        }
    }
    std::sort(bands.begin(), bands.end());
    for (const auto& b : bands) {
        if (!bands_.empty() && b.first <= bands_.back().second) {
            bands_.back().second = std::max(bands_.back().second, b.second);
        } else {
            bands_.push_back(b);
        }
    }
}

bool BandSet::contains(double f) const {
    for (const auto& [lo, hi] : bands_) {
        if (f < lo) return false;
        if (f <= hi) return true;
    }
    return false;
}

void BandSet::check_nyquist(double dt) const {
    if (!bands_.empty() && bands_.back().second > 0.5 / dt) {
        throw Error(ErrorCode::NyquistViolation, "band extends past the Nyquist frequency");
    }
}

void Atf::validate() const {
    if (freq.size() < 1 || magnitude.rows() != freq.size() || magnitude.cols() < 1) {
        throw Error(ErrorCode::ShapeMismatch, "ATF needs one magnitude row per frequency");
    }
    for (Index i = 1; i < freq.size(); ++i) {
        if (!(freq(i) > freq(i - 1))) throw Error(ErrorCode::NonMonotonicX, "ATF frequencies must increase");
    }
    for (Index i = 0; i < magnitude.size(); ++i) {
        const double m = magnitude.data()[i];
        if (!std::isnan(m) && (!std::isfinite(m) || m < 0.0)) {
            throw Error(ErrorCode::InvalidParams, "ATF magnitudes must be nonnegative");
        }
    }
    if (!(ref_hz > 0.0)) throw Error(ErrorCode::InvalidParams, "ATF reference frequency must be positive");
}

namespace {

// valid (non-missing) samples of one ATF axis
struct AxisSamples {
    std::vector<double> f;
    std::vector<double> a;
};

AxisSamples axis_samples(const Atf& atf, Index axis) {
    AxisSamples s;
    for (Index i = 0; i < atf.freq.size(); ++i) {
        const double m = atf.magnitude(i, axis);
        if (!std::isnan(m)) {
            s.f.push_back(atf.freq(i));
            s.a.push_back(m);
        }
    }
    return s;
}

double eval_axis(const AxisSamples& s, double f) {
    if (s.f.empty()) return 0.0;
    if (f <= s.f.front()) return s.a.front();
    if (f >= s.f.back()) return s.a.back();
    const auto j = static_cast<std::size_t>(std::upper_bound(s.f.begin(), s.f.end(), f) - s.f.begin());
    const double w = (f - s.f[j - 1]) / (s.f[j] - s.f[j - 1]);
    return (1.0 - w) * s.a[j - 1] + w * s.a[j];
}

}  // namespace

double Atf::magnitude_at(double f, Index axis) const {
    if (axis < 0 || axis >= dims()) throw Error(ErrorCode::AxisCountMismatch, "ATF axis out of range");
    return eval_axis(axis_samples(*this, axis), f);
}

MatrixXd slew_cotangent_to_gradient(const MatrixXd& cot_slew, double dt) {
    MatrixXd cot_g = MatrixXd::Zero(cot_slew.rows() + 1, cot_slew.cols());
    cot_g.bottomRows(cot_slew.rows()) += cot_slew / dt;
    cot_g.topRows(cot_slew.rows()) -= cot_slew / dt;
    return cot_g;
}

SlewBarrier slew_barrier(const Waveform& w, const BarrierConfig& cfg, bool with_gradient) {
    cfg.validate();
    SlewBarrier out;
    if (with_gradient) out.cot_slew = MatrixXd::Zero(w.slew.rows(), w.slew.cols());
    for (Index n = 0; n < w.slew.rows(); ++n) {
        const double norm = w.slew.row(n).norm();
        const BarrierPoint b = leaky_log_barrier_point(norm, cfg);
        out.value += b.value;
        if (with_gradient && norm > 0.0) out.cot_slew.row(n) = (b.slope / norm) * w.slew.row(n);
    }
    return out;
}

SpectralTerm band_power_loss(const Waveform& w, const BandSet& bands, bool with_gradient) {
    if (bands.empty()) throw Error(ErrorCode::EmptyBandSet, "band set is empty");
    bands.check_nyquist(w.dt);
    const std::size_t n = padded_dft_length(static_cast<std::size_t>(w.n_t()), w.dt);
    const std::size_t bins = n / 2 + 1;
    MatrixXd weights(static_cast<Index>(bins), 1);
    for (std::size_t k = 0; k < bins; ++k) {
        weights(static_cast<Index>(k), 0) = bands.contains(bin_frequency(k, n, w.dt)) ? 1.0 : 0.0;
    }
    WeightedPower p = weighted_spectral_power(w.g, n, weights, with_gradient);
    return {p.value, std::move(p.cot_g)};
}

SpectralTerm acoustic_loss(const Waveform& w, const Atf& atf, bool with_gradient) {
    atf.validate();
    if (atf.dims() != w.dims()) throw Error(ErrorCode::AxisCountMismatch, "ATF axes do not match the waveform");
    const std::size_t n = padded_dft_length(static_cast<std::size_t>(w.n_t()), w.dt);
    const std::size_t bins = n / 2 + 1;
    MatrixXd weights(static_cast<Index>(bins), w.dims());
    for (Index d = 0; d < w.dims(); ++d) {
        const AxisSamples s = axis_samples(atf, d);
        for (std::size_t k = 0; k < bins; ++k) {
            const double a = eval_axis(s, bin_frequency(k, n, w.dt));
            weights(static_cast<Index>(k), d) = a * a;
        }
    }
    WeightedPower p = weighted_spectral_power(w.g, n, weights, with_gradient);
    return {p.value, std::move(p.cot_g)};
}

DurationTerms duration_terms(double total, std::optional<double> t_max, const LossWeights& weights,
                             std::optional<double> delta_time, double time_scale) {
    if (!(total > 0.0)) throw Error(ErrorCode::InvalidParams, "duration must be positive");
    if (!(time_scale > 0.0)) throw Error(ErrorCode::InvalidParams, "time scale must be positive");
    DurationTerms d;
    d.minimize = weights.time * total / time_scale;
    d.cot_total = weights.time / time_scale;
    if (weights.bound_time > 0.0) {
        if (!t_max || !(*t_max > 0.0)) throw Error(ErrorCode::MissingKey, "bound-time term needs t_max");
        const double delta = delta_time.value_or(default_time_delta(*t_max));
        const BarrierConfig cfg{*t_max / time_scale, delta / time_scale};
        cfg.validate();
        const BarrierPoint b = leaky_log_barrier_point(total / time_scale, cfg);
        d.bound = weights.bound_time * b.value;
        d.cot_total += weights.bound_time * b.slope / time_scale;
    }
    return d;
}

void Objective::validate() const {
    weights.validate();
    if (!(time_scale > 0.0) || !std::isfinite(time_scale)) throw Error(ErrorCode::InvalidParams, "time scale must be positive");
    if (weights.slew > 0.0) BarrierConfig{s_max, delta_slew}.validate();
    if (weights.bound_time > 0.0) {
        if (!t_max) throw Error(ErrorCode::MissingKey, "lambda_bound_time > 0 requires t_max");
        BarrierConfig{*t_max, delta_time.value_or(default_time_delta(*t_max))}.validate();
    }
    if (weights.pns > 0.0) {
        if (!pns) throw Error(ErrorCode::MissingKey, "lambda_pns > 0 requires a PNS model");
        if (!p_max) throw Error(ErrorCode::MissingKey, "lambda_pns > 0 requires p_max");
        BarrierConfig{*p_max, delta_pns}.validate();
    }
    if (weights.band > 0.0) {
        if (!bands) throw Error(ErrorCode::MissingKey, "lambda_band > 0 requires a band set");
        if (bands->empty()) throw Error(ErrorCode::EmptyBandSet, "band set is empty");
    }
    if (weights.acoustic > 0.0) {
        if (!atf) throw Error(ErrorCode::MissingKey, "lambda_acoustic > 0 requires an ATF");
        atf->validate();
    }
}

LossEval assemble_loss(const Waveform& w, double total, const Objective& objective, bool with_gradient) {
    const LossWeights& lw = objective.weights;
    lw.validate();
    LossEval e;
    if (with_gradient) e.cot_g = MatrixXd::Zero(w.n_t(), w.dims());

    const DurationTerms d = duration_terms(total, objective.t_max, lw, objective.delta_time, objective.time_scale);
    e.terms.time = d.minimize;
    e.terms.bound_time = d.bound;
    e.cot_total = d.cot_total;

    if (lw.slew > 0.0) {
        const SlewBarrier s = slew_barrier(w, {objective.s_max, objective.delta_slew}, with_gradient);
        e.terms.slew = lw.slew * s.value;
        if (with_gradient) e.cot_g += lw.slew * slew_cotangent_to_gradient(s.cot_slew, w.dt);
    }
    if (lw.pns > 0.0) {
        if (!objective.pns || !objective.p_max) throw Error(ErrorCode::MissingKey, "PNS term needs a model and p_max");
        const PnsBarrier p = pns_barrier(w, *objective.pns, *objective.p_max, objective.delta_pns);
        e.terms.pns = lw.pns * p.value;
        if (with_gradient) e.cot_g += lw.pns * slew_cotangent_to_gradient(p.cot_slew, w.dt);
    }
    if (lw.band > 0.0) {
        if (!objective.bands) throw Error(ErrorCode::MissingKey, "band term needs a band set");
        const SpectralTerm b = band_power_loss(w, *objective.bands, with_gradient);
        e.terms.band = lw.band * b.value;
        if (with_gradient) e.cot_g += lw.band * b.cot_g;
    }
    if (lw.acoustic > 0.0) {
        if (!objective.atf) throw Error(ErrorCode::MissingKey, "acoustic term needs an ATF");
        const SpectralTerm a = acoustic_loss(w, *objective.atf, with_gradient);
        e.terms.acoustic = lw.acoustic * a.value;
        if (with_gradient) e.cot_g += lw.acoustic * a.cot_g;
    }
    const LossBreakdown& t = e.terms;
    e.total = t.time + t.bound_time + t.slew + t.pns + t.band + t.acoustic;
    return e;
}

}  // namespace optiks
