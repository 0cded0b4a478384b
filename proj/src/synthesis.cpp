#include "dobotc/synthesis.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace dobotc {

namespace {

// The constant-setpoint exosystem (G = 0) makes the augmented pair
// unstabilizable, so the Sylvester block is only determined up to the
// consistency condition of the (2,2) Riccati block: the feedforward must
// invert the closed-loop DC gain exactly. Rescale each column of the raw
// Sylvester solution to restore that condition; the gain relation
// Kv = R^-1 B_u' P12 is preserved because P12 is rescaled jointly.
void apply_dc_correction(const LtiPlant& plant, const ReferenceGen& ref, Matrix& p12, Matrix& kv,
                         const Matrix& a_cl) {
    const Matrix dc_row = plant.C_o * a_cl.partialPivLu().solve(Matrix(plant.B_u)); // 1 x m
    if (dc_row.norm() < 1e-12) {
        throw SynthesisError(
            "lqr_tracking_gain: no input direction reaches the output at DC; "
            "cannot enforce setpoint tracking");
    }
    for (Eigen::Index j = 0; j < kv.cols(); ++j) {
        const double raw = (dc_row * kv.col(j))(0, 0);
        const double target = ref.H(0, j);
        double scale = 1.0;
        if (std::abs(raw) < 1e-14 * (1.0 + std::abs(target))) {
            if (std::abs(target) > 1e-14) {
                throw SynthesisError(
                    "lqr_tracking_gain: feedforward column degenerate, cannot match setpoint");
            }
        } else {
            scale = target / raw;
        }
        kv.col(j) *= scale;
        p12.col(j) *= scale;
    }
}

} // namespace

TrackingGain lqr_tracking_gain(const LtiPlant& plant, const ReferenceGen& ref, double q_e,
                               const Matrix& R) {
    check_dimensions(plant);
    check_dimensions(ref);
    if (!(q_e > 0.0) || !std::isfinite(q_e)) {
        throw ParameterError("lqr_tracking_gain: Q_e must be a positive finite scalar");
    }
    if (R.rows() != plant.input_dim() || R.cols() != plant.input_dim()) {
        throw DimensionError("lqr_tracking_gain: R must be m x m");
    }
    Eigen::LLT<Matrix> r_chol(R);
    if (r_chol.info() != Eigen::Success) {
        throw ParameterError("lqr_tracking_gain: R must be positive definite");
    }

    const Matrix q_plant = plant.C_o.transpose() * q_e * plant.C_o;

    TrackingGain gain;
    try {
        gain.P11 = solve_care(plant.A, plant.B_u, q_plant, R);
    } catch (const StabilizabilityError& err) {
        throw SynthesisError(std::string("lqr_tracking_gain: ") + err.what());
    }
    gain.Kx = r_chol.solve(plant.B_u.transpose() * gain.P11);

    const Matrix a_cl = plant.A - plant.B_u * gain.Kx;
    gain.closed_loop_spectrum = eigenvalues(a_cl);
    if (!gain.closed_loop_spectrum.is_hurwitz()) {
        throw SynthesisError("lqr_tracking_gain: closed loop failed the Hurwitz certificate");
    }
    gain.are_residual = (plant.A.transpose() * gain.P11 + gain.P11 * plant.A -
                         gain.P11 * plant.B_u * r_chol.solve(plant.B_u.transpose() * gain.P11) +
                         q_plant)
                            .norm();

    // Feedforward block: A_cl' P12 + P12 G = C_o' Q_e H.
    try {
        gain.P12 = solve_sylvester(a_cl.transpose(), ref.G,
                                   plant.C_o.transpose() * q_e * ref.H);
    } catch (const SingularEquationError& err) {
        throw SynthesisError(std::string("lqr_tracking_gain: feedforward Sylvester block: ") +
                             err.what());
    }
    gain.Kv = r_chol.solve(plant.B_u.transpose() * gain.P12);

    if (ref.G.isZero(0.0)) {
        apply_dc_correction(plant, ref, gain.P12, gain.Kv, a_cl);
    }
    gain.dc_tracking_residual =
        (plant.C_o * a_cl.partialPivLu().solve(Matrix(plant.B_u * gain.Kv)) - ref.H).norm();
    return gain;
}

TrackingGain lqr_tracking_gain(const LtiPlant& plant, const ReferenceGen& ref, double q_e,
                               double r) {
    return lqr_tracking_gain(plant, ref, q_e,
                             Matrix(r * Matrix::Identity(plant.input_dim(), plant.input_dim())));
}

ObserverDesign make_observer_candidate(const LtiPlant& plant, const Matrix& L) {
    check_dimensions(plant);
    if (L.rows() != plant.disturbance_dim() || L.cols() != plant.state_dim()) {
        throw DimensionError("design_observer: L must be q x n");
    }
    if (!all_finite(L)) {
        throw ParameterError("design_observer: L contains NaN or Inf entries");
    }
    ObserverDesign design;
    design.L = L;
    design.err_dyn = -L * plant.B_d;
    design.error_spectrum = eigenvalues(design.err_dyn);
    return design;
}

ObserverDesign design_observer(const LtiPlant& plant, const Matrix& L) {
    ObserverDesign design = make_observer_candidate(plant, L);
    if (!design.error_spectrum.is_hurwitz()) {
        std::ostringstream msg;
        msg << "design_observer: -L*B_d is not Hurwitz; spectrum {";
        for (std::size_t i = 0; i < design.error_spectrum.values.size(); ++i) {
            const auto& v = design.error_spectrum.values[i];
            msg << (i ? ", " : "") << v.real() << (v.imag() < 0 ? "-" : "+")
                << std::abs(v.imag()) << "i";
        }
        msg << "}";
        throw SynthesisError(msg.str());
    }
    return design;
}

CompensatorGain compensator_gain(const LtiPlant& plant, const TrackingGain& gain) {
    std::vector<int> all(static_cast<std::size_t>(plant.input_dim()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return compensator_gain(plant, gain, all);
}

CompensatorGain compensator_gain(const LtiPlant& plant, const TrackingGain& gain,
                                 const std::vector<int>& input_channels) {
    check_dimensions(plant);
    if (gain.Kx.rows() != plant.input_dim() || gain.Kx.cols() != plant.state_dim()) {
        throw DimensionError("compensator_gain: gain does not match the plant");
    }
    if (input_channels.empty()) {
        throw ParameterError("compensator_gain: at least one input channel required");
    }

    const Eigen::Index m = plant.input_dim();
    const Eigen::Index q = plant.disturbance_dim();

    Matrix b_sel(plant.B_u.rows(), static_cast<Eigen::Index>(input_channels.size()));
    for (std::size_t i = 0; i < input_channels.size(); ++i) {
        if (input_channels[i] < 0 || input_channels[i] >= m) {
            throw DimensionError("compensator_gain: input channel index out of range");
        }
        b_sel.col(static_cast<Eigen::Index>(i)) = plant.B_u.col(input_channels[i]);
    }

    // S = (A + B_u u_c_bar)^-1 with u_c_bar = -Kx, i.e. the closed-loop inverse.
    const Matrix a_cl = plant.A - plant.B_u * gain.Kx;
    Eigen::PartialPivLU<Matrix> s_lu(a_cl);
    const Matrix row_u = plant.C_o * s_lu.solve(b_sel);           // 1 x |sel|
    const Matrix row_d = plant.C_o * s_lu.solve(Matrix(plant.B_d)); // 1 x q

    if (row_u.norm() < 1e-12) {
        throw SynthesisError(
            "compensator_gain: output-uncontrollable compensation; no selected input "
            "affects the output disturbance DC gain");
    }

    CompensatorGain comp;
    comp.u_d = Matrix::Zero(m, q);
    const Matrix u_d_sel = -pinv(row_u) * row_d;
    for (std::size_t i = 0; i < input_channels.size(); ++i) {
        comp.u_d.row(input_channels[i]) = u_d_sel.row(static_cast<Eigen::Index>(i));
    }
    comp.residual_row = plant.C_o * s_lu.solve(Matrix(plant.B_d + plant.B_u * comp.u_d));
    comp.residual_norm = comp.residual_row.norm();
    if (comp.residual_norm > 1e-8) {
        throw SynthesisError("compensator_gain: DC rejection certificate failed");
    }
    return comp;
}

} // namespace dobotc
