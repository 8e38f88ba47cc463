#pragma once

#include <functional>
#include <string>
#include <utility>

#include "emgram/model.hpp"
#include "emgram/types.hpp"

namespace emgram {

/// Dense samples of a signal over the time grid, one column per sample time
/// t = 0, h, ..., K*h (K+1 columns).
struct Trajectory {
    Matrix values;

    Index rows() const { return values.rows(); }
    Index cols() const { return values.cols(); }
};

using InputFunction = std::function<Vector(double)>;

using SolverFunction = std::function<Trajectory(
    const SystemModel& sys, const TimeGrid& grid, const Vector& x0, const InputFunction& u,
    const Vector& p)>;

struct SolverConfig {
    int stages = 3;          // SSP32 by default
    SolverFunction custom;   // replaces ssp_rk when set
};

/// Optimal second-order strong-stability-preserving explicit Runge-Kutta
/// scheme with s >= 2 stages in the low-storage two-register form:
///
///   y = x_k
///   y <- y + h/(s-1) * f(y, u_k, p, t_k)        (s-1 times)
///   x_{k+1} = ((s-1)*y + h*f(y, u_k, p, t_k) + x_k) / s
///
/// The input is sampled with zero-order hold at the step's left endpoint.
/// Returns the g-mapped samples (states when g is null) at all K+1 grid
/// times including t = 0.
inline Trajectory ssp_rk(const VectorField& f, const OutputMap& g, const TimeGrid& grid,
                         const Vector& x0, const InputFunction& u, const Vector& p,
                         int stages = 3) {
    if (stages < 2) throw config_error("ssp_rk: stages >= 2 required");
    const Index steps = grid.steps();
    const double h = grid.h;
    const double hs = h / static_cast<double>(stages - 1);
    const double s = static_cast<double>(stages);

    Vector x = x0;
    Vector uk = u(0.0);
    auto observe = [&](const Vector& xk, const Vector& uin, double t) {
        return g ? g(xk, uin, p, t) : xk;
    };

    Vector y0 = observe(x, uk, 0.0);
    Trajectory traj;
    traj.values.resize(y0.size(), steps + 1);
    traj.values.col(0) = y0;

    Vector y;
    for (Index k = 0; k < steps; ++k) {
        const double t = grid.time(k);
        if (k > 0) uk = u(t);
        y = x;
        for (int i = 1; i < stages; ++i) {
            y += hs * f(y, uk, p, t);
        }
        x = ((s - 1.0) * y + h * f(y, uk, p, t) + x) / s;
        if (!x.allFinite()) {
            throw numerical_error("ssp_rk: non-finite state at step " + std::to_string(k + 1));
        }
        const double tn = grid.time(k + 1);
        traj.values.col(k + 1) = observe(x, u(tn), tn);
    }
    return traj;
}

/// Dispatch to the configured solver (default: ssp_rk). Returns the output
/// trajectory y(t) = g(x(t), u(t), p, t); the state trajectory when g is the
/// identity marker.
inline Trajectory solve(const SystemModel& sys, const TimeGrid& grid, const Vector& x0,
                        const InputFunction& u, const Vector& p,
                        const SolverConfig& solver = {}) {
    if (solver.custom) return solver.custom(sys, grid, x0, u, p);
    OutputMap g;
    if (!sys.identity_output()) {
        g = [&sys](const Vector& x, const Vector& uin, const Vector& pp, double t) {
            return sys.g(x, uin, pp, t);
        };
    }
    auto f = [&sys](const Vector& x, const Vector& uin, const Vector& pp, double t) {
        return sys.f(x, uin, pp, t);
    };
    return ssp_rk(f, g, grid, x0, u, p, solver.stages);
}

}  // namespace emgram
