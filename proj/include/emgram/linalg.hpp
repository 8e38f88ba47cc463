#pragma once

#include <Eigen/SVD>
#include <Eigen/Eigenvalues>

#include <string>

#include "emgram/types.hpp"

namespace emgram {

struct SvdResult {
    Matrix U;
    Vector S;  // descending, nonnegative
    Matrix V;
};

/// Thin SVD, Mat = U * diag(S) * V^T with S sorted descending.
inline SvdResult svd(const Matrix& mat) {
    if (!mat.allFinite()) throw numerical_error("svd: non-finite input");
    Eigen::BDCSVD<Matrix> dec(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return SvdResult{dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

/// Principal square root of a symmetric positive semi-definite matrix via
/// symmetric EVD. Eigenvalues in [-1e-10*||W||, 0) are clamped to zero;
/// anything more negative is rejected as indefinite.
inline Matrix sqrt_psd(const Matrix& w) {
    if (w.rows() != w.cols()) throw config_error("sqrt_psd: matrix must be square");
    const double scale = w.cwiseAbs().maxCoeff();
    if (scale > 0.0 && (w - w.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw numerical_error("sqrt_psd: input not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> evd(w);
    Vector lam = evd.eigenvalues();
    const double floor = -1e-10 * std::max(scale, 1.0e-300);
    for (Index i = 0; i < lam.size(); ++i) {
        if (lam(i) < floor) {
            throw numerical_error("sqrt_psd: indefinite input, eigenvalue " +
                                  std::to_string(lam(i)));
        }
        lam(i) = std::sqrt(std::max(lam(i), 0.0));
    }
    return evd.eigenvectors() * lam.asDiagonal() * evd.eigenvectors().transpose();
}

/// Diagonally dominant approximate inverse A^-1 ~ D^-1 - D^-1 E D^-1 with
/// D = diag(A) and E = A - D; costs O(N^2).
inline Matrix approx_inverse(const Matrix& a) {
    if (a.rows() != a.cols()) throw config_error("approx_inverse: matrix must be square");
    const Index n = a.rows();
    Vector dinv(n);
    for (Index i = 0; i < n; ++i) {
        if (a(i, i) == 0.0) {
            throw numerical_error("approx_inverse: zero diagonal entry at index " +
                                  std::to_string(i));
        }
        dinv(i) = 1.0 / a(i, i);
    }
    Matrix e = a;
    e.diagonal().setZero();
    Matrix result = -(dinv.asDiagonal() * e * dinv.asDiagonal());
    result.diagonal() += dinv;
    return result;
}

}  // namespace emgram
