#pragma once

// Brute-force dense oracles for verification; not part of the production API.
// All solvers vectorize via Kronecker products, so they are limited to small
// dimensions (N <= 64).

#include <Eigen/LU>

#include "emgram/types.hpp"

namespace emgram::testing {

namespace detail {

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline Vector vec(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix solve_vectorized(const Matrix& lhs, const Matrix& rhs, Index n) {
    Eigen::FullPivLU<Matrix> lu(lhs);
    if (!lu.isInvertible()) {
        throw numerical_error("oracle: singular Kronecker system (eigenvalue pair sums to zero)");
    }
    Vector w = lu.solve(vec(rhs));
    return Eigen::Map<Matrix>(w.data(), n, n);
}

}  // namespace detail

/// Solve A W + W A^T + Q = 0 by Kronecker vectorization.
inline Matrix lyapunov_oracle(const Matrix& a, const Matrix& q) {
    const Index n = a.rows();
    if (n > 64) throw config_error("lyapunov_oracle: N <= 64 required");
    const Matrix eye = Matrix::Identity(n, n);
    const Matrix lhs = detail::kron(eye, a) + detail::kron(a, eye);
    return detail::solve_vectorized(lhs, -q, n);
}

/// Solve A W + W A + B C = 0 by Kronecker vectorization; sign convention
/// such that A = -0.5 I yields W = B C.
inline Matrix sylvester_oracle(const Matrix& a, const Matrix& b, const Matrix& c) {
    const Index n = a.rows();
    if (n > 64) throw config_error("sylvester_oracle: N <= 64 required");
    const Matrix eye = Matrix::Identity(n, n);
    const Matrix lhs = detail::kron(eye, a) + detail::kron(a.transpose(), eye);
    return detail::solve_vectorized(lhs, -Matrix(b * c), n);
}

/// Dense matrix exponential by scaling and squaring with a Taylor series;
/// oracle quality only.
inline Matrix expm(const Matrix& a) {
    const Index n = a.rows();
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    double scale = 1.0;
    while (norm * scale > 0.5) {
        scale *= 0.5;
        ++squarings;
    }
    Matrix x = a * scale;
    Matrix result = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k <= 20; ++k) {
        term = Matrix(term * x) / static_cast<double>(k);
        result += term;
    }
    for (int k = 0; k < squarings; ++k) result = Matrix(result * result);
    return result;
}

}  // namespace emgram::testing
