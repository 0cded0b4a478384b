#include "dobotc/plantmodel.hpp"

#include <sstream>

#include <Eigen/SVD>

namespace dobotc {

void check_dimensions(const LtiPlant& plant) {
    const Eigen::Index n = plant.A.rows();
    if (n < 1 || plant.A.cols() != n) {
        throw DimensionError("plant: A must be square and non-empty");
    }
    if (plant.B_u.rows() != n || plant.B_u.cols() < 1) {
        throw DimensionError("plant: B_u must have as many rows as A");
    }
    if (plant.B_d.rows() != n || plant.B_d.cols() < 1) {
        throw DimensionError("plant: B_d must have as many rows as A");
    }
    if (plant.C_o.rows() != 1 || plant.C_o.cols() != n) {
        throw DimensionError("plant: C_o must be a single row matching the state size");
    }
    if (!all_finite(plant.A) || !all_finite(plant.B_u) || !all_finite(plant.B_d) ||
        !all_finite(plant.C_o)) {
        throw ParameterError("plant: matrices contain NaN or Inf entries");
    }
    if (!plant.input_labels.empty() &&
        plant.input_labels.size() != static_cast<std::size_t>(plant.B_u.cols())) {
        throw DimensionError("plant: input_labels size must match the input count");
    }
}

void check_dimensions(const ReferenceGen& ref) {
    const Eigen::Index p = ref.G.rows();
    if (p < 1 || ref.G.cols() != p) {
        throw DimensionError("reference: G must be square and non-empty");
    }
    if (ref.H.rows() != 1 || ref.H.cols() != p) {
        throw DimensionError("reference: H must be a single row matching G");
    }
    if (ref.v0.size() != p) {
        throw DimensionError("reference: v0 size must match G");
    }
    if (!all_finite(ref.G) || !all_finite(ref.H) || !all_finite(ref.v0)) {
        throw ParameterError("reference: matrices contain NaN or Inf entries");
    }
}

Matrix build_weighting(const Matrix& c_o, const Matrix& h, double q_e) {
    if (c_o.rows() != 1 || h.rows() != 1) {
        throw DimensionError("build_weighting: C_o and H must be single rows");
    }
    if (!(q_e > 0.0) || !std::isfinite(q_e)) {
        throw ParameterError("build_weighting: Q_e must be a positive finite scalar");
    }
    Matrix stacked(1, c_o.cols() + h.cols());
    stacked << c_o, -h;
    return stacked.transpose() * q_e * stacked;
}

AugmentedPlant augment(const LtiPlant& plant, const ReferenceGen& ref, double q_e) {
    check_dimensions(plant);
    check_dimensions(ref);
    if (plant.C_o.rows() != ref.H.rows()) {
        throw DimensionError("augment: plant output and reference output sizes differ");
    }

    const Eigen::Index n = plant.state_dim();
    const Eigen::Index p = ref.dim();
    const Eigen::Index m = plant.input_dim();
    const Eigen::Index q = plant.disturbance_dim();

    AugmentedPlant aug;
    aug.A_bar = Matrix::Zero(n + p, n + p);
    aug.A_bar.topLeftCorner(n, n) = plant.A;
    aug.A_bar.bottomRightCorner(p, p) = ref.G;

    aug.B_u_bar = Matrix::Zero(n + p, m);
    aug.B_u_bar.topRows(n) = plant.B_u;

    aug.B_d_bar = Matrix::Zero(n + p, q);
    aug.B_d_bar.topRows(n) = plant.B_d;

    aug.Q_bar = build_weighting(plant.C_o, ref.H, q_e);
    return aug;
}

ReferenceGen constant_reference(double y_d) {
    if (!std::isfinite(y_d)) {
        throw ParameterError("constant_reference: y_d must be finite");
    }
    ReferenceGen ref;
    ref.G = Matrix::Zero(1, 1);
    ref.H = Matrix::Ones(1, 1);
    ref.v0 = Vector::Constant(1, y_d);
    return ref;
}

LtiPlant slot_die_plant() {
    LtiPlant plant;
    plant.A = Matrix(2, 2);
    plant.A << 3.127, 1.567,
               0.2803, 0.258;
    plant.B_u = Matrix(2, 2);
    plant.B_u << 6.921, 0.6338,
                 1.064, 0.1407;
    plant.B_d = plant.B_u;
    plant.C_o = Matrix(1, 2);
    plant.C_o << -8.083, 5.864;
    plant.input_labels = {"pump rate", "gap/velocity"};
    return plant;
}

LtiPlant mask_disturbance_columns(const LtiPlant& plant, const std::vector<int>& columns) {
    check_dimensions(plant);
    if (columns.empty()) {
        throw ParameterError("mask_disturbance_columns: at least one column required");
    }
    LtiPlant masked = plant;
    masked.B_d = Matrix(plant.B_d.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] < 0 || columns[i] >= plant.B_d.cols()) {
            throw DimensionError("mask_disturbance_columns: column index out of range");
        }
        masked.B_d.col(static_cast<Eigen::Index>(i)) = plant.B_d.col(columns[i]);
    }
    return masked;
}

namespace {

Eigen::Index numeric_rank(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const double tol = std::numeric_limits<double>::epsilon() *
                       static_cast<double>(std::max(m.rows(), m.cols())) *
                       (svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > tol) ++rank;
    }
    return rank;
}

} // namespace

PlantDiagnostics validate(const LtiPlant& plant) {
    check_dimensions(plant);
    const Eigen::Index n = plant.state_dim();
    const Eigen::Index m = plant.input_dim();

    Matrix ctrb(n, n * m);
    Matrix block = plant.B_u;
    for (Eigen::Index k = 0; k < n; ++k) {
        ctrb.middleCols(k * m, m) = block;
        block = plant.A * block;
    }
    Matrix obsv(n, n);
    Matrix row = plant.C_o;
    for (Eigen::Index k = 0; k < n; ++k) {
        obsv.row(k) = row;
        row = row * plant.A;
    }

    PlantDiagnostics diag;
    diag.controllability_rank = numeric_rank(ctrb);
    diag.observability_rank = numeric_rank(obsv);
    diag.controllable = diag.controllability_rank == n;
    diag.observable = diag.observability_rank == n;
    diag.open_loop_spectrum = eigenvalues(plant.A);

    if (!diag.controllable) diag.notes.push_back("pair (A, B_u) is not controllable");
    if (!diag.observable) diag.notes.push_back("pair (A, C_o) is not observable");
    if (!diag.open_loop_spectrum.is_hurwitz()) {
        diag.notes.push_back("open-loop plant is unstable");
    }
    if (!plant.input_labels.empty()) {
        std::ostringstream labels;
        for (std::size_t i = 0; i < plant.input_labels.size(); ++i) {
            labels << (i ? ", " : "") << "u" << i + 1 << " = " << plant.input_labels[i];
        }
        diag.notes.push_back("input channels: " + labels.str() +
                             "; channel 2 naming is ambiguous in the identification record "
                             "(gap vs substrate velocity)");
    }
    return diag;
}

} // namespace dobotc
