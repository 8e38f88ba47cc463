#pragma once

#include <utility>
#include <vector>

#include "emgram/integrate.hpp"
#include "emgram/linalg.hpp"
#include "emgram/model.hpp"
#include "emgram/types.hpp"

namespace emgram {

/// Truncated Petrov-Galerkin projection for states (U1, V1) and, optionally,
/// parameters (Pi1, Lambda1), with reduction offsets x_bar / theta_bar.
struct RomProjection {
    Matrix U1;               // N x n basis
    Matrix V1;               // N x n test space, V1^T U1 = I_n
    Matrix Pi1;              // P x p parameter basis (empty if unused)
    Matrix Lambda1;          // P x p parameter test space
    Vector x_bar;            // state offset (zero if empty)
    Vector theta_bar;        // parameter offset (zero if empty)
    Vector singular_values;  // full descending spectrum of the factorization

    Index full_order() const { return U1.rows(); }
    Index order() const { return U1.cols(); }
};

namespace detail {

/// Flip singular-vector pairs so each u-column's entry of largest magnitude
/// is positive; removes the SVD sign ambiguity deterministically.
inline void fix_signs(Matrix& u, Matrix& v) {
    for (Index j = 0; j < u.cols(); ++j) {
        Index imax = 0;
        u.col(j).cwiseAbs().maxCoeff(&imax);
        if (u(imax, j) < 0.0) {
            u.col(j) = -u.col(j);
            if (j < v.cols()) v.col(j) = -v.col(j);
        }
    }
}

inline void check_rank(const Vector& sigma, Index n) {
    if (n < 1 || n > sigma.size()) {
        throw config_error("reduction order out of range [1, N]");
    }
    // only exact zeros are rejected: near-full-order reductions of smooth
    // systems run far past any relative cutoff yet still reach the numerical
    // error floor
    if (sigma(0) <= 0.0 || sigma(n - 1) <= 0.0) {
        throw numerical_error("rank deficiency: singular value " + std::to_string(n) +
                              " is zero; choose a smaller order");
    }
}

}  // namespace detail

/// Square-root balanced truncation: SVD of sqrt(WC)*sqrt(WO) yields the
/// Hankel values and the biorthogonal truncated projections
/// U1 = S_C U_n D_n^{-1/2}, V1 = S_O V_n D_n^{-1/2} with V1^T U1 = I.
inline RomProjection balance_square_root(const Matrix& wc, const Matrix& wo, Index n) {
    if (wc.rows() != wc.cols() || wo.rows() != wo.cols() || wc.rows() != wo.rows()) {
        throw config_error("balance_square_root: WC and WO must be square and equally sized");
    }
    const Matrix sc = sqrt_psd(wc);
    const Matrix so = sqrt_psd(wo);
    SvdResult dec = svd(sc * so);
    detail::check_rank(dec.S, n);
    Matrix un = dec.U.leftCols(n);
    Matrix vn = dec.V.leftCols(n);
    detail::fix_signs(un, vn);
    const Vector dinv = dec.S.head(n).cwiseSqrt().cwiseInverse();
    RomProjection proj;
    proj.U1 = sc * un * dinv.asDiagonal();
    proj.V1 = so * vn * dinv.asDiagonal();
    proj.singular_values = dec.S;
    return proj;
}

/// Direct truncation: orthogonal Galerkin projection from the leading left
/// singular vectors of the (cross) Gramian; V1 = U1.
inline RomProjection direct_truncation(const Matrix& wx, Index n) {
    if (n < 1 || n > wx.rows()) {
        throw config_error("reduction order out of range [1, N]");
    }
    // Galerkin basis with no inverse involved: the singular-vector columns
    // stay orthonormal even past the numerical rank, so no rank guard
    SvdResult dec = svd(wx);
    Matrix un = dec.U.leftCols(n);
    Matrix vn = dec.V.leftCols(n);
    detail::fix_signs(un, vn);
    RomProjection proj;
    proj.U1 = un;
    proj.V1 = un;
    proj.singular_values = dec.S;
    return proj;
}

/// Orthogonal parameter projection (Pi1, Lambda1 = Pi1) from the SVD of the
/// parameter covariance / identifiability matrix; a W_S diagonal must be
/// promoted to a diagonal matrix by the caller.
inline std::pair<Matrix, Matrix> parameter_projection(const Matrix& omega, Index p) {
    if (omega.rows() != omega.cols()) {
        throw config_error("parameter_projection: omega must be square");
    }
    if (p < 1 || p > omega.rows()) {
        throw config_error("parameter_projection: order out of range");
    }
    // no rank guard: the orthonormal singular-vector basis stays well defined
    // for rank-deficient omega, and Galerkin projection involves no inverse
    SvdResult dec = svd(omega);
    Matrix pn = dec.U.leftCols(p);
    Matrix ln = dec.V.leftCols(p);
    detail::fix_signs(pn, ln);
    return {pn, pn};
}

/// Reduced-order model: f_r(x_r,u,th_r,t) = V1^T f(x_bar + U1 x_r, u,
/// th_bar + Pi1 th_r, t) and likewise for g; parameters pass through
/// unreduced when Pi1 is empty.
inline SystemModel build_rom(const SystemModel& sys, const RomProjection& proj) {
    const Dims d = sys.dims();
    if (proj.U1.rows() != d.states || proj.V1.rows() != d.states ||
        proj.U1.cols() != proj.V1.cols()) {
        throw config_error("build_rom: state projection does not match the system dimension");
    }
    const bool reduce_params = proj.Pi1.size() > 0;
    if (reduce_params && proj.Pi1.rows() != d.params) {
        throw config_error("build_rom: parameter projection does not match P");
    }
    const Matrix u1 = proj.U1, v1t = proj.V1.transpose();
    const Matrix pi1 = proj.Pi1;
    const Vector xb = (proj.x_bar.size() > 0) ? proj.x_bar : Vector::Zero(d.states);
    const Vector tb = (proj.theta_bar.size() > 0) ? proj.theta_bar : Vector::Zero(d.params);
    auto lift_state = [u1, xb](const Vector& xr) { return Vector(xb + u1 * xr); };
    auto lift_param = [pi1, tb, reduce_params](const Vector& pr) {
        return reduce_params ? Vector(tb + pi1 * pr) : pr;
    };
    VectorField fr = [sys, v1t, lift_state, lift_param](const Vector& xr, const Vector& u,
                                                        const Vector& pr, double t) {
        return Vector(v1t * sys.f(lift_state(xr), u, lift_param(pr), t));
    };
    OutputMap gr = [sys, lift_state, lift_param](const Vector& xr, const Vector& u,
                                                 const Vector& pr, double t) {
        return sys.g(lift_state(xr), u, lift_param(pr), t);
    };
    Dims dr{d.inputs, proj.U1.cols(), d.outputs,
            reduce_params ? proj.Pi1.cols() : d.params};
    Vector xr0 = proj.V1.transpose() * (sys.x_steady() - xb);
    return SystemModel(std::move(fr), std::move(gr), dr, std::move(xr0), sys.u_steady());
}

/// Explicit reduced matrices (V1^T A U1, V1^T B, C U1, V1^T F) of a linear
/// system; preserves stability for Galerkin projections of dissipative A.
inline LinearSystem reduce_linear(const LinearSystem& sys, const RomProjection& proj) {
    sys.check();
    if (proj.U1.rows() != sys.states() || proj.V1.rows() != sys.states()) {
        throw config_error("reduce_linear: projection does not match the system dimension");
    }
    LinearSystem rom;
    rom.A = proj.V1.transpose() * sys.A * proj.U1;
    rom.B = proj.V1.transpose() * sys.B;
    rom.C = sys.C * proj.U1;
    if (sys.F) rom.F = Matrix(proj.V1.transpose() * *sys.F);
    return rom;
}

/// Discrete L2 output-error norm sqrt(h * sum_k ||y_k - y~_k||^2).
inline double l2_error(const Trajectory& y, const Trajectory& y_tilde, const TimeGrid& grid) {
    if (y.rows() != y_tilde.rows() || y.cols() != y_tilde.cols()) {
        throw config_error("l2_error: trajectory shape mismatch");
    }
    return std::sqrt(grid.h * (y.values - y_tilde.values).squaredNorm());
}

inline double l2_norm(const Trajectory& y, const TimeGrid& grid) {
    return std::sqrt(grid.h * y.values.squaredNorm());
}

/// Monte-Carlo L2 (x) L2 norm over the parameter domain:
/// sqrt(volume * mean of squared per-sample L2 errors).
inline double l2l2_error(const std::vector<double>& errors, double volume = 1.0) {
    if (errors.empty()) throw config_error("l2l2_error: empty sample set");
    double acc = 0.0;
    for (double e : errors) acc += e * e;
    return std::sqrt(volume * acc / static_cast<double>(errors.size()));
}

/// Balanced-truncation a-priori error bound 2 * ||u|| * sum_{k > n} sigma_k.
inline double bt_bound(const Vector& sigma, Index n, double u_norm) {
    double tail = 0.0;
    for (Index k = n; k < sigma.size(); ++k) tail += sigma(k);
    return 2.0 * u_norm * tail;
}

}  // namespace emgram
