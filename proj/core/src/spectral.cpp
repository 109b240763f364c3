#include "optiks/spectral.hpp"

#include "optiks/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

namespace optiks {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// FFTW planning is not thread safe; execution with new-array calls is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct RealBuf {
    double* p;
    explicit RealBuf(std::size_t n) : p(fftw_alloc_real(n)) {}
    ~RealBuf() { fftw_free(p); }
    RealBuf(const RealBuf&) = delete;
    RealBuf& operator=(const RealBuf&) = delete;
};

struct ComplexBuf {
    fftw_complex* p;
    explicit ComplexBuf(std::size_t n) : p(fftw_alloc_complex(n)) {}
    ~ComplexBuf() { fftw_free(p); }
    ComplexBuf(const ComplexBuf&) = delete;
    ComplexBuf& operator=(const ComplexBuf&) = delete;
};

}  // namespace

RealFft::RealFft(std::size_t length) : length_(length), forward_plan_(nullptr), inverse_plan_(nullptr) {
    if (length < 2) throw Error(ErrorCode::InvalidParams, "transform length must be at least 2");
    RealBuf r(length);
    ComplexBuf c(bins());
    std::lock_guard<std::mutex> lock(planner_mutex());
    const int n = static_cast<int>(length);
    forward_plan_ = fftw_plan_dft_r2c_1d(n, r.p, c.p, FFTW_ESTIMATE);
    inverse_plan_ = fftw_plan_dft_c2r_1d(n, c.p, r.p, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    if (inverse_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

std::vector<std::complex<double>> RealFft::forward(const double* x, std::size_t count) const {
    if (count > length_) throw Error(ErrorCode::ShapeMismatch, "signal longer than the transform");
    RealBuf r(length_);
    ComplexBuf c(bins());
    std::memcpy(r.p, x, count * sizeof(double));
    std::fill(r.p + count, r.p + length_, 0.0);
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), r.p, c.p);
    std::vector<std::complex<double>> out(bins());
    for (std::size_t k = 0; k < bins(); ++k) out[k] = {c.p[k][0], c.p[k][1]};
    return out;
}

std::vector<double> RealFft::inverse(const std::vector<std::complex<double>>& half_spectrum, std::size_t count) const {
    if (half_spectrum.size() != bins() || count > length_) {
        throw Error(ErrorCode::ShapeMismatch, "half spectrum does not match the transform");
    }
    RealBuf r(length_);
    ComplexBuf c(bins());
    for (std::size_t k = 0; k < bins(); ++k) {
        c.p[k][0] = half_spectrum[k].real();
        c.p[k][1] = half_spectrum[k].imag();
    }
    fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), c.p, r.p);
    return std::vector<double>(r.p, r.p + count);
}

const RealFft& real_fft(std::size_t length) {
    static std::mutex cache_mutex;
    static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(length);
    if (it == cache.end()) it = cache.emplace(length, std::make_unique<RealFft>(length)).first;
    return *it->second;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::size_t padded_dft_length(std::size_t samples, double dt, double max_bin_hz) {
    if (!(dt > 0.0) || !(max_bin_hz > 0.0)) throw Error(ErrorCode::InvalidParams, "dt and bin spacing must be positive");
    const double needed = std::ceil(1.0 / (max_bin_hz * dt) - 1e-9);
    return next_pow2(std::max<std::size_t>({samples, static_cast<std::size_t>(needed), 2}));
}

WeightedPower weighted_spectral_power(const MatrixXd& g, std::size_t dft_length, const MatrixXd& weights,
                                      bool with_gradient) {
    const RealFft& fft = real_fft(dft_length);
    const auto bins = static_cast<Index>(fft.bins());
    if (weights.rows() != bins || (weights.cols() != 1 && weights.cols() != g.cols())) {
        throw Error(ErrorCode::ShapeMismatch, "spectral weights must be bins x 1 or bins x D");
    }
    const auto n = static_cast<std::size_t>(g.rows());
    WeightedPower out;
    if (with_gradient) out.cot_g = MatrixXd::Zero(g.rows(), g.cols());
    VectorXd col;
    for (Index d = 0; d < g.cols(); ++d) {
        const Index wc = weights.cols() == 1 ? 0 : d;
        col = g.col(d);
        std::vector<std::complex<double>> spec = fft.forward(col.data(), n);
        double acc = 0.0;
        for (Index k = 0; k < bins; ++k) {
            const double w = weights(k, wc);
            const auto ku = static_cast<std::size_t>(k);
            acc += w * bin_multiplicity(ku, dft_length) * std::norm(spec[ku]);
            spec[ku] *= w;
        }
        out.value += acc;
        if (with_gradient) {
            // d/dg_n sum_k w_k |G_k|^2 over the full spectrum = 2 Re sum_k w_k G_k e^{+i..} = 2 c2r(w G)
            const std::vector<double> back = fft.inverse(spec, n);
            for (std::size_t i = 0; i < n; ++i) out.cot_g(static_cast<Index>(i), d) = 2.0 * back[i];
        }
    }
    return out;
}

namespace {

MatrixXd fft_correlate_or_convolve(const VectorXd& kernel, const MatrixXd& x, bool adjoint) {
    const Index n = x.rows();
    if (kernel.size() < n) throw Error(ErrorCode::ShapeMismatch, "kernel shorter than the signal");
    MatrixXd y(n, x.cols());
    if (n == 0) return y;
    const std::size_t len = next_pow2(static_cast<std::size_t>(2 * n));
    const RealFft& fft = real_fft(len);
    const auto nn = static_cast<std::size_t>(n);
    const std::vector<std::complex<double>> h = fft.forward(kernel.data(), nn);
    VectorXd buf(n);
    for (Index d = 0; d < x.cols(); ++d) {
        // adjoint = convolution of the time-reversed signal, reversed back
        if (adjoint) {
            buf = x.col(d).reverse();
        } else {
            buf = x.col(d);
        }
        std::vector<std::complex<double>> s = fft.forward(buf.data(), nn);
        for (std::size_t k = 0; k < s.size(); ++k) s[k] *= h[k];
        const std::vector<double> r = fft.inverse(s, nn);
        const double scale = 1.0 / static_cast<double>(len);
        for (Index i = 0; i < n; ++i) {
            const Index dst = adjoint ? n - 1 - i : i;
            y(dst, d) = r[static_cast<std::size_t>(i)] * scale;
        }
    }
    return y;
}

}  // namespace

MatrixXd causal_convolve(const VectorXd& kernel, const MatrixXd& x) { return fft_correlate_or_convolve(kernel, x, false); }

MatrixXd causal_convolve_adjoint(const VectorXd& kernel, const MatrixXd& y) {
    return fft_correlate_or_convolve(kernel, y, true);
}

}  // namespace optiks
