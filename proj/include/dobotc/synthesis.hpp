#pragma once

#include <vector>

#include "dobotc/plantmodel.hpp"

namespace dobotc {

/// State-feedback/feedforward tracking gain u_c = -Kx x - Kv v, obtained from
/// the block decomposition of the augmented LQ problem: Kx from the plant-size
/// Riccati solution P11, Kv from the Sylvester block P12.
struct TrackingGain {
    Matrix Kx;  // m x n
    Matrix Kv;  // m x p
    Matrix P11; // n x n
    Matrix P12; // n x p

    Spectrum closed_loop_spectrum; // eig(A - B_u Kx), certified Hurwitz
    double are_residual = 0.0;
    // || C_o (A - B_u Kx)^-1 B_u Kv - H ||, the DC tracking certificate.
    double dc_tracking_residual = 0.0;
};

/// Disturbance observer gain with its certified error dynamics -L B_d.
struct ObserverDesign {
    Matrix L;       // q x n
    Matrix err_dyn; // q x q, equal to -L * B_d
    Spectrum error_spectrum;
};

/// Output-channel compensation gain u_d with its DC rejection certificate
/// row C_o S (B_d + B_u u_d), S = (A - B_u Kx)^-1.
struct CompensatorGain {
    Matrix u_d;          // m x q
    Matrix residual_row; // 1 x q
    double residual_norm = 0.0;
};

TrackingGain lqr_tracking_gain(const LtiPlant& plant, const ReferenceGen& ref, double q_e,
                               const Matrix& R);
TrackingGain lqr_tracking_gain(const LtiPlant& plant, const ReferenceGen& ref, double q_e,
                               double r);

ObserverDesign design_observer(const LtiPlant& plant, const Matrix& L);

// Internal to the staged design procedure: builds the candidate without the
// stability check so the caller can certify it as a separate step.
ObserverDesign make_observer_candidate(const LtiPlant& plant, const Matrix& L);

CompensatorGain compensator_gain(const LtiPlant& plant, const TrackingGain& gain);

// Restricts compensation to the listed input channels (zero rows elsewhere).
CompensatorGain compensator_gain(const LtiPlant& plant, const TrackingGain& gain,
                                 const std::vector<int>& input_channels);

} // namespace dobotc
