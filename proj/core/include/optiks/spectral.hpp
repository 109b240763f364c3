#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

namespace optiks {

/// Real-to-complex DFT of a fixed length, backed by FFTW. Inputs shorter than
/// the transform length are zero-padded. Unnormalized in both directions.
class RealFft {
public:
    explicit RealFft(std::size_t length);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t length() const { return length_; }
    std::size_t bins() const { return length_ / 2 + 1; }

    /// X_k = sum_n x_n exp(-2 pi i k n / N), k = 0..N/2.
    std::vector<std::complex<double>> forward(const double* x, std::size_t count) const;
    /// y_n = sum_{k over full Hermitian spectrum} X_k exp(+2 pi i k n / N), first `count` samples.
    std::vector<double> inverse(const std::vector<std::complex<double>>& half_spectrum, std::size_t count) const;

private:
    std::size_t length_;
    void* forward_plan_;
    void* inverse_plan_;
};

/// Shared plan cache; plans are created once per length under a lock.
const RealFft& real_fft(std::size_t length);

std::size_t next_pow2(std::size_t n);

/// Zero-padded DFT length: next power of two that holds the signal and gives a
/// bin spacing no coarser than max_bin_hz.
std::size_t padded_dft_length(std::size_t samples, double dt, double max_bin_hz = 5.0);

/// Frequency of one-sided bin k for a length-N transform at raster dt.
inline double bin_frequency(std::size_t k, std::size_t n, double dt) {
    return static_cast<double>(k) / (static_cast<double>(n) * dt);
}

/// Multiplicity of one-sided bin k in the full two-sided spectrum (1 for DC and Nyquist, else 2).
inline double bin_multiplicity(std::size_t k, std::size_t n) { return (k == 0 || 2 * k == n) ? 1.0 : 2.0; }

struct WeightedPower {
    double value = 0.0;
    Eigen::MatrixXd cot_g;
};

/// sum over axes and two-sided bins of w_axis(|f_k|) |G_axis(f_k)|^2 with G the
/// zero-padded DFT of each column of g. `weights` is (bins x D) or (bins x 1),
/// indexed by one-sided bin. The cotangent is the exact derivative wrt g.
WeightedPower weighted_spectral_power(const Eigen::MatrixXd& g, std::size_t dft_length,
                                      const Eigen::MatrixXd& weights, bool with_gradient);

/// Causal linear convolution y[n] = sum_{k<=n} kernel[k] x[n-k] for each column of x
/// (kernel at least as long as x). FFT-based with zero padding.
Eigen::MatrixXd causal_convolve(const Eigen::VectorXd& kernel, const Eigen::MatrixXd& x);

/// Adjoint of causal_convolve: z[m] = sum_{n>=m} kernel[n-m] y[n].
Eigen::MatrixXd causal_convolve_adjoint(const Eigen::VectorXd& kernel, const Eigen::MatrixXd& y);

}  // namespace optiks
