#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "emgram/types.hpp"

namespace emgram {

/// Signature of a vector field: xdot = f(x, u, p, t).
using VectorField =
    std::function<Vector(const Vector& x, const Vector& u, const Vector& p, double t)>;

/// Signature of an output functional: y = g(x, u, p, t).
using OutputMap =
    std::function<Vector(const Vector& x, const Vector& u, const Vector& p, double t)>;

struct Dims {
    Index inputs = 0;   // M
    Index states = 0;   // N
    Index outputs = 0;  // Q
    Index params = 0;   // P
};

/// Nonlinear parametric input-output system
///
///   xdot(t) = f(x(t), u(t), p, t)
///      y(t) = g(x(t), u(t), p, t)
///
/// Immutable after construction; f and g must be re-entrant so that
/// trajectory simulations can run concurrently.
class SystemModel {
public:
    /// General system with an explicit output functional.
    SystemModel(VectorField f, OutputMap g, Dims dims, Vector x_steady = {}, Vector u_steady = {})
        : f_(std::move(f)),
          g_(std::move(g)),
          dims_(dims),
          x_steady_(std::move(x_steady)),
          u_steady_(std::move(u_steady)) {
        check();
    }

    /// System with the distinguished identity output g(x,u,p,t) = x (Q = N).
    /// Gramian assembly uses the marker to reuse state trajectories directly.
    static SystemModel with_identity_output(VectorField f, Dims dims, Vector x_steady = {},
                                            Vector u_steady = {}) {
        dims.outputs = dims.states;
        SystemModel sys(std::move(f), nullptr, dims, std::move(x_steady), std::move(u_steady));
        return sys;
    }

    bool identity_output() const { return !static_cast<bool>(g_); }

    Vector f(const Vector& x, const Vector& u, const Vector& p, double t) const {
        return f_(x, u, p, t);
    }

    Vector g(const Vector& x, const Vector& u, const Vector& p, double t) const {
        if (identity_output()) return x;
        return g_(x, u, p, t);
    }

    const Dims& dims() const { return dims_; }
    const Vector& x_steady() const { return x_steady_; }
    const Vector& u_steady() const { return u_steady_; }

private:
    void check() {
        if (dims_.states < 1) throw config_error("SystemModel: N >= 1 required");
        if (dims_.inputs < 0 || dims_.outputs < 0 || dims_.params < 0) {
            throw config_error("SystemModel: dimensions must be nonnegative");
        }
        if (identity_output() && dims_.outputs != dims_.states) {
            throw config_error("SystemModel: identity output requires Q = N");
        }
        if (x_steady_.size() == 0) x_steady_ = Vector::Zero(dims_.states);
        if (u_steady_.size() == 0) u_steady_ = Vector::Zero(dims_.inputs);
        if (x_steady_.size() != dims_.states) throw config_error("SystemModel: x_steady size != N");
        if (u_steady_.size() != dims_.inputs) throw config_error("SystemModel: u_steady size != M");
    }

    VectorField f_;
    OutputMap g_;
    Dims dims_;
    Vector x_steady_;
    Vector u_steady_;
};

/// Linear (time-invariant) system xdot = Ax + Bu (+ F theta), y = Cx.
struct LinearSystem {
    Matrix A;  // N x N
    Matrix B;  // N x M
    Matrix C;  // Q x N
    std::optional<Matrix> F;  // N x P, linear parametrization

    Index states() const { return A.rows(); }
    Index inputs() const { return B.cols(); }
    Index outputs() const { return C.rows(); }
    Index params() const { return F ? F->cols() : 0; }

    void check() const {
        if (A.rows() != A.cols()) throw config_error("LinearSystem: A must be square");
        if (B.rows() != A.rows()) throw config_error("LinearSystem: B row count != N");
        if (C.cols() != A.rows()) throw config_error("LinearSystem: C column count != N");
        if (F && F->rows() != A.rows()) throw config_error("LinearSystem: F row count != N");
    }

    SystemModel to_system() const {
        check();
        Dims d{inputs(), states(), outputs(), params()};
        Matrix A_ = A, B_ = B, C_ = C;
        VectorField f;
        if (F) {
            Matrix F_ = *F;
            f = [A_, B_, F_](const Vector& x, const Vector& u, const Vector& p, double) {
                return Vector(A_ * x + B_ * u + F_ * p);
            };
        } else {
            f = [A_, B_](const Vector& x, const Vector& u, const Vector&, double) {
                return Vector(A_ * x + B_ * u);
            };
        }
        OutputMap g = [C_](const Vector& x, const Vector&, const Vector&, double) {
            return Vector(C_ * x);
        };
        return SystemModel(std::move(f), std::move(g), d);
    }
};

/// Append the parameters as constant states: the augmented vector field is
/// [f(x,u,theta,t); 0] where theta is read from the appended state block.
/// Parameter perturbations enter through the augmented initial condition.
inline SystemModel augment_parameters(const SystemModel& sys) {
    const Dims d = sys.dims();
    if (d.params < 1) {
        throw config_error("augment_parameters: system has no parameters (P = 0)");
    }
    const Index n = d.states, p = d.params;
    VectorField fa = [sys, n, p](const Vector& xa, const Vector& u, const Vector&, double t) {
        Vector out = Vector::Zero(n + p);
        out.head(n) = sys.f(xa.head(n), u, xa.tail(p), t);
        return out;
    };
    OutputMap ga = [sys, n, p](const Vector& xa, const Vector& u, const Vector&, double t) {
        return sys.g(xa.head(n), u, xa.tail(p), t);
    };
    Dims da{d.inputs, n + p, d.outputs, 0};
    Vector xs = Vector::Zero(n + p);
    xs.head(n) = sys.x_steady();
    return SystemModel(std::move(fa), std::move(ga), da, std::move(xs), sys.u_steady());
}

/// Stack a square linear system with its transposed system:
/// dynamics diag(A, A^T), input [B; C^T], identity observation of the 2N
/// state. The controllability Gramian of this system holds W_X in its
/// upper-right N x N block.
inline LinearSystem augment_transpose(const LinearSystem& sys) {
    sys.check();
    if (sys.inputs() != sys.outputs()) {
        throw config_error("augment_transpose: requires a square system (M = Q)");
    }
    const Index n = sys.states(), m = sys.inputs();
    LinearSystem aug;
    aug.A = Matrix::Zero(2 * n, 2 * n);
    aug.A.topLeftCorner(n, n) = sys.A;
    aug.A.bottomRightCorner(n, n) = sys.A.transpose();
    aug.B = Matrix::Zero(2 * n, m);
    aug.B.topRows(n) = sys.B;
    aug.B.bottomRows(n) = sys.C.transpose();
    aug.C = Matrix::Identity(2 * n, 2 * n);
    return aug;
}

}  // namespace emgram
