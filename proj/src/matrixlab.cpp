#include "dobotc/matrixlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace dobotc {

namespace {

void require_square(const Matrix& m, const char* who) {
    if (m.rows() != m.cols()) {
        std::ostringstream msg;
        msg << who << ": expected a square matrix, got " << m.rows() << "x" << m.cols();
        throw DimensionError(msg.str());
    }
}

void require_finite(const Matrix& m, const char* who) {
    if (!all_finite(m)) {
        throw ParameterError(std::string(who) + ": matrix contains NaN or Inf entries");
    }
}

Matrix kron(const Matrix& x, const Matrix& y) {
    Matrix out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
        }
    }
    return out;
}

// Shared spectra guard for the vectorized solvers: the equation
// A1 X + X A2 = C is singular iff lambda_i(A1) + mu_j(A2) = 0 for some pair.
void require_disjoint_sum(const Spectrum& s1, const Spectrum& s2, const char* who) {
    double scale = 1.0;
    for (const auto& v : s1.values) scale = std::max(scale, std::abs(v));
    for (const auto& v : s2.values) scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * scale;
    for (const auto& l1 : s1.values) {
        for (const auto& l2 : s2.values) {
            if (std::abs(l1 + l2) <= tol) {
                std::ostringstream msg;
                msg << who << ": singular equation, eigenvalue pair (" << l1.real() << "+"
                    << l1.imag() << "i, " << l2.real() << "+" << l2.imag() << "i) sums to zero";
                throw SingularEquationError(msg.str());
            }
        }
    }
}

} // namespace

bool all_finite(const Matrix& m) {
    return m.allFinite();
}

double Spectrum::max_real() const {
    double r = -std::numeric_limits<double>::infinity();
    for (const auto& v : values) r = std::max(r, v.real());
    return r;
}

Spectrum eigenvalues(const Matrix& m) {
    require_square(m, "eigenvalues");
    require_finite(m, "eigenvalues");

    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigenvalues: QR iteration did not converge");
    }

    Spectrum spec;
    spec.values.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        spec.values.push_back(solver.eigenvalues()(i));
    }
    std::sort(spec.values.begin(), spec.values.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  if (a.real() != b.real()) return a.real() > b.real();
                  return a.imag() < b.imag();
              });
    return spec;
}

Matrix solve_lyapunov(const Matrix& a_h, const Matrix& w) {
    require_square(a_h, "solve_lyapunov");
    require_square(w, "solve_lyapunov");
    require_finite(a_h, "solve_lyapunov");
    require_finite(w, "solve_lyapunov");
    if (a_h.rows() != w.rows()) {
        throw DimensionError("solve_lyapunov: A and W sizes differ");
    }

    const Spectrum spec = eigenvalues(a_h);
    require_disjoint_sum(spec, spec, "solve_lyapunov");

    const Eigen::Index n = a_h.rows();
    const Matrix eye = Matrix::Identity(n, n);
    // vec(A'P + PA) = (I (x) A' + A' (x) I) vec(P)
    const Matrix lhs = kron(eye, a_h.transpose()) + kron(a_h.transpose(), eye);
    const Eigen::Map<const Vector> w_vec(w.data(), n * n);
    Vector p_vec = lhs.partialPivLu().solve(-w_vec);
    Matrix p = Eigen::Map<Matrix>(p_vec.data(), n, n);
    p = 0.5 * (p + p.transpose()).eval();

    const double residual = (a_h.transpose() * p + p * a_h + w).norm();
    if (residual > 1e-10 * (1.0 + w.norm())) {
        throw NumericalError("solve_lyapunov: residual check failed");
    }
    return p;
}

Matrix solve_sylvester(const Matrix& a1, const Matrix& a2, const Matrix& c) {
    require_square(a1, "solve_sylvester");
    require_square(a2, "solve_sylvester");
    require_finite(a1, "solve_sylvester");
    require_finite(a2, "solve_sylvester");
    require_finite(c, "solve_sylvester");
    if (c.rows() != a1.rows() || c.cols() != a2.rows()) {
        throw DimensionError("solve_sylvester: C size incompatible with A1, A2");
    }

    require_disjoint_sum(eigenvalues(a1), eigenvalues(a2), "solve_sylvester");

    const Eigen::Index r = a1.rows();
    const Eigen::Index s = a2.rows();
    // vec(A1 X + X A2) = (I (x) A1 + A2' (x) I) vec(X)
    const Matrix lhs = kron(Matrix::Identity(s, s), a1) + kron(a2.transpose(), Matrix::Identity(r, r));
    const Eigen::Map<const Vector> c_vec(c.data(), r * s);
    Vector x_vec = lhs.partialPivLu().solve(c_vec);
    Matrix x = Eigen::Map<Matrix>(x_vec.data(), r, s);

    const double residual = (a1 * x + x * a2 - c).norm();
    if (residual > 1e-10 * (1.0 + c.norm())) {
        throw NumericalError("solve_sylvester: residual check failed");
    }
    return x;
}

Matrix stabilizing_gain_init(const Matrix& a, const Matrix& b) {
    require_square(a, "stabilizing_gain_init");
    require_finite(a, "stabilizing_gain_init");
    require_finite(b, "stabilizing_gain_init");
    if (b.rows() != a.rows()) {
        throw DimensionError("stabilizing_gain_init: B row count must match A");
    }

    const Eigen::Index n = a.rows();
    const Eigen::Index m = b.cols();

    const Spectrum open_loop = eigenvalues(a);
    if (open_loop.is_hurwitz()) {
        return Matrix::Zero(m, n);
    }

    // Bass construction: with beta > max Re eig(A), M = -(A + beta I) is
    // Hurwitz; X solving M X + X M' + 2 B B' = 0 is PSD and K = B' X^-1
    // satisfies (A - B K) X + X (A - B K)' = -2 beta X.
    const double beta = 1.0 + std::max(0.0, open_loop.max_real());
    const Matrix m_shift = -(a + beta * Matrix::Identity(n, n));
    const Matrix x = solve_lyapunov(m_shift.transpose(), 2.0 * b * b.transpose());

    Matrix k0;
    Eigen::FullPivLU<Matrix> lu(x);
    if (lu.isInvertible()) {
        k0 = (lu.solve(b)).transpose();
    } else {
        k0 = (pinv(x) * b).transpose();
    }

    if (!eigenvalues(a - b * k0).is_hurwitz()) {
        throw StabilizabilityError(
            "stabilizing_gain_init: Bass construction failed verification; (A, B) may be unstabilizable");
    }
    return k0;
}

Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
    require_square(a, "solve_care");
    require_square(q, "solve_care");
    require_square(r, "solve_care");
    require_finite(a, "solve_care");
    require_finite(b, "solve_care");
    require_finite(q, "solve_care");
    require_finite(r, "solve_care");
    if (b.rows() != a.rows() || q.rows() != a.rows() || r.rows() != b.cols()) {
        throw DimensionError("solve_care: incompatible operand sizes");
    }
    if ((q - q.transpose()).norm() > 1e-9 * (1.0 + q.norm())) {
        throw ParameterError("solve_care: Q must be symmetric");
    }
    Eigen::LLT<Matrix> r_chol(r);
    if (r_chol.info() != Eigen::Success) {
        throw ParameterError("solve_care: R must be positive definite");
    }

    const double q_scale = 1.0 + q.norm();
    auto care_residual = [&](const Matrix& p) {
        return (a.transpose() * p + p * a - p * b * r_chol.solve(b.transpose() * p) + q).norm();
    };

    Matrix k = stabilizing_gain_init(a, b);
    Matrix p;
    double residual = std::numeric_limits<double>::infinity();
    constexpr int kMaxIterations = 100;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        // Kleinman step: policy evaluation of the current gain.
        const Matrix a_cl = a - b * k;
        p = solve_lyapunov(a_cl, q + k.transpose() * r * k);
        k = r_chol.solve(b.transpose() * p);
        residual = care_residual(p);
        if (residual <= 1e-10 * q_scale) break;
    }

    if (!(residual <= 1e-8 * q_scale)) {
        std::ostringstream msg;
        msg << "solve_care: Newton iteration stalled at residual " << residual;
        throw NumericalError(msg.str());
    }
    if (!eigenvalues(a - b * r_chol.solve(b.transpose() * p)).is_hurwitz()) {
        throw StabilizabilityError("solve_care: converged P is not stabilizing");
    }
    return 0.5 * (p + p.transpose()).eval();
}

Matrix pinv(const Matrix& m) {
    require_finite(m, "pinv");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double tol = std::numeric_limits<double>::epsilon() *
                       static_cast<double>(std::max(m.rows(), m.cols())) *
                       (svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0);
    Vector inv_sv = svd.singularValues();
    for (Eigen::Index i = 0; i < inv_sv.size(); ++i) {
        inv_sv(i) = inv_sv(i) > tol ? 1.0 / inv_sv(i) : 0.0;
    }
    return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

} // namespace dobotc
