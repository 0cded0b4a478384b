#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "dobotc/errors.hpp"

namespace dobotc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues of a real square matrix, sorted by descending real part,
/// ties broken by ascending imaginary part.
struct Spectrum {
    std::vector<std::complex<double>> values;

    double max_real() const;
    bool is_hurwitz(double margin = 0.0) const { return max_real() < -margin; }
};

bool all_finite(const Matrix& m);

Spectrum eigenvalues(const Matrix& m);

// Solves A_h' * P + P * A_h + W = 0 for symmetric P.
// W must be symmetric; fails if two eigenvalues of A_h sum to zero.
Matrix solve_lyapunov(const Matrix& a_h, const Matrix& w);

// Solves A1 * X + X * A2 = C; fails if spec(A1) and -spec(A2) intersect.
Matrix solve_sylvester(const Matrix& a1, const Matrix& a2, const Matrix& c);

// Stabilizing solution of A'P + PA - P B R^-1 B' P + Q = 0 via the
// Kleinman-Newton iteration (one Lyapunov solve per step).
// Requires (A, B) stabilizable, Q symmetric PSD, R symmetric PD.
Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r);

// Some K0 with A - B*K0 Hurwitz, via the Bass shifted-Lyapunov
// construction; the result is certified by an eigenvalue check.
Matrix stabilizing_gain_init(const Matrix& a, const Matrix& b);

// Moore-Penrose pseudoinverse (SVD based).
Matrix pinv(const Matrix& m);

} // namespace dobotc
