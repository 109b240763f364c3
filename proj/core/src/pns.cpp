#include "optiks/pns.hpp"

#include "optiks/error.hpp"
#include "optiks/losses.hpp"
#include "optiks/spectral.hpp"

#include <cmath>

namespace optiks {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void PnsModel::validate() const {
    if (!(rheobase > 0.0) || !(chronaxie > 0.0) || !(coil_length > 0.0) || !std::isfinite(rheobase) ||
        !std::isfinite(chronaxie) || !std::isfinite(coil_length)) {
        throw Error(ErrorCode::InvalidParams, "PNS model constants must be finite and positive");
    }
}

VectorXd nerve_kernel(const PnsModel& model, double dt, Index n) {
    model.validate();
    if (n < 1 || !(dt > 0.0)) throw Error(ErrorCode::InvalidParams, "kernel needs n >= 1 and dt > 0");
    const double a = model.coil_length, c = model.chronaxie, r = model.rheobase;
    VectorXd h(n);
    for (Index k = 0; k < n; ++k) {
        const double t = c + static_cast<double>(k) * dt;
        h(k) = a * c / (r * t * t);
    }
    return h;
}

VectorXd nerve_kernel_cell_weights(const PnsModel& model, double dt, Index n) {
    model.validate();
    if (n < 1 || !(dt > 0.0)) throw Error(ErrorCode::InvalidParams, "kernel needs n >= 1 and dt > 0");
    const double a = model.coil_length, c = model.chronaxie, r = model.rheobase;
    VectorXd w(n);
    for (Index k = 0; k < n; ++k) {
        const double t0 = static_cast<double>(k) * dt;
        // c/(c+t0) - c/(c+t0+dt) without cancellation
        w(k) = (a / r) * c * dt / ((c + t0) * (c + t0 + dt));
    }
    return w;
}

IecPnsModel::IecPnsModel(PnsModel model) : model_(model) { model_.validate(); }

MatrixXd IecPnsModel::filtered(const MatrixXd& slew, double dt) const {
    if (slew.rows() == 0) return MatrixXd(0, slew.cols());
    return causal_convolve(nerve_kernel_cell_weights(model_, dt, slew.rows()), slew);
}

VectorXd IecPnsModel::response(const MatrixXd& slew, double dt) const {
    return 100.0 * filtered(slew, dt).rowwise().norm();
}

MatrixXd IecPnsModel::response_vjp(const MatrixXd& slew, double dt, const VectorXd& cot_response) const {
    if (cot_response.size() != slew.rows()) throw Error(ErrorCode::ShapeMismatch, "PNS cotangent length mismatch");
    if (slew.rows() == 0) return MatrixXd(0, slew.cols());
    const MatrixXd f = filtered(slew, dt);
    MatrixXd cot_f = MatrixXd::Zero(f.rows(), f.cols());
    for (Index n = 0; n < f.rows(); ++n) {
        const double norm = f.row(n).norm();
        if (norm > 0.0) cot_f.row(n) = (100.0 * cot_response(n) / norm) * f.row(n);
    }
    return causal_convolve_adjoint(nerve_kernel_cell_weights(model_, dt, slew.rows()), cot_f);
}

VectorXd pns_response(const Waveform& w, const PnsModel& model) {
    if (w.n_t() < 2) throw Error(ErrorCode::InvalidParams, "PNS response needs at least two gradient samples");
    return IecPnsModel(model).response(w.slew, w.dt);
}

PnsBarrier pns_barrier(const Waveform& w, const PnsResponseModel& model, double p_max, double delta) {
    const BarrierConfig cfg{p_max, delta};
    cfg.validate();
    const VectorXd p = model.response(w.slew, w.dt);
    PnsBarrier out;
    VectorXd slope(p.size());
    for (Index n = 0; n < p.size(); ++n) {
        const BarrierPoint b = leaky_log_barrier_point(p(n), cfg);
        out.value += b.value;
        slope(n) = b.slope;
    }
    out.cot_slew = model.response_vjp(w.slew, w.dt, slope);
    return out;
}

}  // namespace optiks
