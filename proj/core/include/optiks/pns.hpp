#pragma once

#include "optiks/pipeline.hpp"

#include <Eigen/Dense>

#include <memory>

namespace optiks {

struct BarrierConfig;

/// IEC 60601-2-33 style nerve response constants.
struct PnsModel {
    double rheobase = 0.0;    // T/s
    double chronaxie = 0.0;   // s
    double coil_length = 0.0; // effective coil length, m

    void validate() const;
};

/// Point samples h[k] = alpha*c / (r (c + k dt)^2), in (m/T)/s.
Eigen::VectorXd nerve_kernel(const PnsModel& model, double dt, Eigen::Index n);

/// Exact integral of the kernel over each raster cell [k dt, (k+1) dt]. Convolving
/// these with piecewise-constant slew reproduces the continuous convolution at
/// cell boundaries.
Eigen::VectorXd nerve_kernel_cell_weights(const PnsModel& model, double dt, Eigen::Index n);

/// A differentiable stimulation model: percent response per slew sample plus its adjoint.
class PnsResponseModel {
public:
    virtual ~PnsResponseModel() = default;

    /// P[n] for each row of `slew` (rows x D, T/m/s), percent of threshold.
    virtual Eigen::VectorXd response(const Eigen::MatrixXd& slew, double dt) const = 0;

    /// Cotangent on slew given cotangent on the response.
    virtual Eigen::MatrixXd response_vjp(const Eigen::MatrixXd& slew, double dt,
                                         const Eigen::VectorXd& cot_response) const = 0;
};

class IecPnsModel final : public PnsResponseModel {
public:
    explicit IecPnsModel(PnsModel model);

    const PnsModel& model() const { return model_; }

    Eigen::VectorXd response(const Eigen::MatrixXd& slew, double dt) const override;
    Eigen::MatrixXd response_vjp(const Eigen::MatrixXd& slew, double dt,
                                 const Eigen::VectorXd& cot_response) const override;

    /// Per-axis filtered slew (before the norm), rows x D, in units of percent/100.
    Eigen::MatrixXd filtered(const Eigen::MatrixXd& slew, double dt) const;

private:
    PnsModel model_;
};

/// P(t) = 100 || (h * S)(t) ||_2 for the waveform's slew, one value per slew sample.
Eigen::VectorXd pns_response(const Waveform& w, const PnsModel& model);

struct PnsBarrier {
    double value = 0.0;
    Eigen::MatrixXd cot_slew;
};

/// Leaky log-barrier on P(t) against p_max (percent) with relaxation delta.
PnsBarrier pns_barrier(const Waveform& w, const PnsResponseModel& model, double p_max, double delta);

}  // namespace optiks
