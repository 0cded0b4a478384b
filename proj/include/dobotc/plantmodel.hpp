#pragma once

#include <string>
#include <vector>

#include "dobotc/matrixlab.hpp"

namespace dobotc {

/// Continuous-time LTI plant  x' = A x + B_u u + B_d w,  y = C_o x
/// with a single controlled output.
struct LtiPlant {
    Matrix A;    // n x n
    Matrix B_u;  // n x m
    Matrix B_d;  // n x q
    Matrix C_o;  // 1 x n

    std::vector<std::string> input_labels; // optional, size m when set

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index input_dim() const { return B_u.cols(); }
    Eigen::Index disturbance_dim() const { return B_d.cols(); }
};

/// Autonomous reference generator  v' = G v,  y_d = H v.
struct ReferenceGen {
    Matrix G;  // p x p
    Matrix H;  // 1 x p
    Vector v0; // p

    Eigen::Index dim() const { return G.rows(); }
};

/// Block assembly of plant and reference generator with the tracking-error
/// weighting on the stacked state [x; v].
struct AugmentedPlant {
    Matrix A_bar;   // (n+p) x (n+p), blockdiag(A, G)
    Matrix B_u_bar; // (n+p) x m, zero lower block
    Matrix B_d_bar; // (n+p) x q, zero lower block
    Matrix Q_bar;   // (n+p) x (n+p), [C_o -H]' Q_e [C_o -H]
};

struct PlantDiagnostics {
    Eigen::Index controllability_rank = 0;
    Eigen::Index observability_rank = 0;
    bool controllable = false;
    bool observable = false;
    Spectrum open_loop_spectrum;
    std::vector<std::string> notes;
};

void check_dimensions(const LtiPlant& plant);
void check_dimensions(const ReferenceGen& ref);

// [C_o -H]' * Q_e * [C_o -H]; Q_e must be positive.
Matrix build_weighting(const Matrix& c_o, const Matrix& h, double q_e);

AugmentedPlant augment(const LtiPlant& plant, const ReferenceGen& ref, double q_e);

// Scalar exosystem encoding of a constant setpoint: G = [0], H = [1], v0 = [y_d].
ReferenceGen constant_reference(double y_d);

// Identified second-order slot-die coater model (grey-level output units).
// B_d defaults to B_u; select disturbance channels by masking its columns.
LtiPlant slot_die_plant();

// Returns the plant with B_d replaced by the selected columns of the current B_d.
LtiPlant mask_disturbance_columns(const LtiPlant& plant, const std::vector<int>& columns);

PlantDiagnostics validate(const LtiPlant& plant);

} // namespace dobotc
