#pragma once

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <string>
#include <vector>

#include "emgram/gramian.hpp"
#include "emgram/reduce.hpp"
#include "emgram/signals.hpp"
#include "emgram/types.hpp"

namespace emgram {

enum class BenchmarkKind { LinearSymmetric, Transport, TanhNetwork };

/// Configuration of one benchmark run; defaults reproduce the reference
/// experiment shapes (N = 256, M = Q = 4, theta ranges per kind).
struct BenchmarkSpec {
    BenchmarkKind kind = BenchmarkKind::LinearSymmetric;
    Index n = 256;
    Index m = 4;  // inputs/outputs (LinearSymmetric) or outputs (TanhNetwork)
    std::uint64_t seed = 1;
    TimeGrid grid{0.01, 10.0};
    std::vector<Index> orders;        // state reduction orders; empty = defaults
    std::vector<Index> param_orders;  // parameter orders (TanhNetwork only)
    int samples = 10;                 // Monte-Carlo parameter samples
    int threads = 1;
};

/// Flat numeric result table with named columns, ready for CSV emission.
struct ErrorTable {
    std::vector<std::string> columns;
    Matrix data;  // one row per record
};

namespace detail {

inline double uniform01(std::uint64_t& state) {
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

/// Portable Box-Muller normal deviates on SplitMix64.
inline double gaussian(std::uint64_t& state) {
    double u1 = uniform01(state);
    while (u1 <= 0.0) u1 = uniform01(state);
    const double u2 = uniform01(state);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t& state) {
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) out(i, j) = gaussian(state);
    }
    return out;
}

inline double max_real_eigenvalue(const Matrix& a) {
    Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
    return es.eigenvalues().real().maxCoeff();
}

}  // namespace detail

/// Zero-centered unit-variance Gaussian noise, held constant per step;
/// deterministic in (m, grid, seed).
inline InputSignal gaussian_noise_input(Index m, const TimeGrid& grid, std::uint64_t seed) {
    const Index steps = grid.steps();
    Matrix table(m, steps);
    std::uint64_t state = seed;
    for (Index k = 0; k < steps; ++k) {
        for (Index i = 0; i < m; ++i) table(i, k) = detail::gaussian(state);
    }
    return InputSignal::custom(m, grid, [table, grid](double t) {
        Index k = static_cast<Index>(t / grid.h);
        if (k >= table.cols()) k = table.cols() - 1;
        return Vector(table.col(k));
    });
}

/// Gauss bell u(t) = exp(-(t - t0)^2 / (2 s^2)) with t0 = T/10, s = T/50.
inline InputSignal gauss_bell_input(Index m, const TimeGrid& grid) {
    const double t0 = grid.horizon / 10.0;
    const double s = grid.horizon / 50.0;
    return InputSignal::custom(m, grid, [m, t0, s](double t) {
        const double v = std::exp(-0.5 * std::pow((t - t0) / s, 2));
        return Vector(Vector::Constant(m, v));
    });
}

/// Inverse-Lyapunov style random stable state-space-symmetric system:
/// A = Q diag(lambda) Q^T with lambda log-uniform in [-10, -0.1], C = B^T.
inline LinearSystem gen_linear_symmetric(Index n, Index m, std::uint64_t seed) {
    if (n < m || m < 1) throw config_error("gen_linear_symmetric: N >= M >= 1 required");
    std::uint64_t state = seed;
    Matrix g = detail::gaussian_matrix(n, n, state);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    Vector lam(n);
    const double lo = std::log(0.1), hi = std::log(10.0);
    for (Index i = 0; i < n; ++i) {
        lam(i) = -std::exp(lo + (hi - lo) * detail::uniform01(state));
    }
    LinearSystem sys;
    sys.A = q * lam.asDiagonal() * q.transpose();
    sys.A = 0.5 * (sys.A + Matrix(sys.A.transpose()));  // exact symmetry
    sys.B = detail::gaussian_matrix(n, m, state);
    sys.C = sys.B.transpose();
    return sys;
}

/// First-order upwind discretization of the unit-domain transport equation;
/// the velocity theta is factored out: dynamics theta * (A x + b u).
inline LinearSystem gen_transport(Index n) {
    if (n < 2) throw config_error("gen_transport: N >= 2 required");
    const double nn = static_cast<double>(n);
    LinearSystem sys;
    sys.A = Matrix::Zero(n, n);
    sys.A.diagonal().setConstant(-nn);
    sys.A.diagonal(-1).setConstant(nn);
    sys.B = Matrix::Zero(n, 1);
    sys.B(0, 0) = nn;
    sys.C = Matrix::Zero(1, n);
    sys.C(0, n - 1) = 1.0;
    return sys;
}

/// Parametric system xdot = theta * (A x + B u), y = C x with scalar theta.
inline SystemModel transport_system(const LinearSystem& lin) {
    lin.check();
    const Matrix a = lin.A, b = lin.B, c = lin.C;
    VectorField f = [a, b](const Vector& x, const Vector& u, const Vector& p, double) {
        return Vector(p(0) * (a * x + b * u));
    };
    OutputMap g = [c](const Vector& x, const Vector&, const Vector&, double) {
        return Vector(c * x);
    };
    return SystemModel(std::move(f), std::move(g),
                       Dims{lin.inputs(), lin.states(), lin.outputs(), 1});
}

/// Hyperbolic network xdot = A tanh(K(theta) x) + B u, y = C x with
/// A = -Lehmer(N), B_i = cos(i), C binary with contiguous unit blocks and
/// per-state gains theta (P = N).
inline SystemModel gen_tanh_network(Index n, Index q, std::uint64_t /*seed*/) {
    if (q < 1 || n % q != 0) throw config_error("gen_tanh_network: N divisible by Q required");
    Matrix a(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double mn = static_cast<double>(std::min(i, j) + 1);
            const double mx = static_cast<double>(std::max(i, j) + 1);
            a(i, j) = -mn / mx;
        }
    }
    Matrix b = Matrix::Zero(n, 1);
    for (Index i = 0; i < n; ++i) b(i, 0) = std::cos(static_cast<double>(i + 1));
    Matrix c = Matrix::Zero(q, n);
    const Index block = n / q;
    for (Index i = 0; i < n; ++i) c(i / block, i) = 1.0;
    VectorField f = [a, b](const Vector& x, const Vector& u, const Vector& p, double) {
        return Vector(a * (p.cwiseProduct(x)).array().tanh().matrix() + b * u);
    };
    OutputMap g = [c](const Vector& x, const Vector&, const Vector&, double) {
        return Vector(c * x);
    };
    return SystemModel(std::move(f), std::move(g), Dims{1, n, q, n});
}

namespace detail {

inline std::vector<Index> default_orders(Index n) {
    std::vector<Index> orders;
    for (Index k = 1; k <= std::min<Index>(n, 8); ++k) orders.push_back(k);
    for (Index k = 12; k <= n; k = (k < 16) ? 16 : k * 2) {
        orders.push_back(std::min(k, n));
        if (k >= n) break;
    }
    if (orders.back() != std::min<Index>(n, 64) && n >= 64) orders.push_back(64);
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
    return orders;
}

inline SystemModel linear_rom_system(const LinearSystem& rom) { return rom.to_system(); }

}  // namespace detail

/// Random stable symmetric system, linear cross Gramian, truncation sweep
/// with relative L2 error and the balanced-truncation bound (both divided by
/// the reference output norm); Gaussian-noise test input.
inline ErrorTable bench_linear(const BenchmarkSpec& spec) {
    LinearSystem sys = gen_linear_symmetric(spec.n, spec.m, spec.seed);
    GramianConfig cfg;
    cfg.nf.v[3] = 1;  // one-sided scales: exact for linear dynamics
    cfg.nf.v[4] = 1;
    cfg.threads = spec.threads;
    Matrix wy = empirical_wy(sys, spec.grid, cfg).primary;
    SvdResult dec = svd(wy);

    InputSignal noise = gaussian_noise_input(spec.m, spec.grid, spec.seed + 101);
    InputFunction u = [&noise](double t) { return noise.evaluate(t); };
    SystemModel fom = sys.to_system();
    Trajectory y = solve(fom, spec.grid, Vector::Zero(spec.n), u, Vector());
    const double ynorm = l2_norm(y, spec.grid);

    // discrete L2 norm of the test input for the error bound
    Matrix utab(spec.m, spec.grid.steps());
    for (Index k = 0; k < spec.grid.steps(); ++k) utab.col(k) = u(spec.grid.time(k));
    const double unorm = std::sqrt(spec.grid.h * utab.squaredNorm());

    std::vector<Index> orders = spec.orders.empty() ? detail::default_orders(spec.n)
                                                    : spec.orders;
    ErrorTable table;
    table.columns = {"order", "l2_error", "bound"};
    table.data.resize(static_cast<Index>(orders.size()), 3);
    for (std::size_t i = 0; i < orders.size(); ++i) {
        const Index n = orders[i];
        RomProjection proj = direct_truncation(wy, n);
        LinearSystem romsys = reduce_linear(sys, proj);
        Trajectory yr = solve(romsys.to_system(), spec.grid, Vector::Zero(n), u, Vector());
        table.data(static_cast<Index>(i), 0) = static_cast<double>(n);
        table.data(static_cast<Index>(i), 1) = l2_error(y, yr, spec.grid) / ynorm;
        table.data(static_cast<Index>(i), 2) = bt_bound(dec.S, n, unorm) / ynorm;
    }
    return table;
}

/// Transport equation: cross Gramian trained on impulse responses at the
/// extremal velocities, Galerkin (stability-preserving) truncation, relative
/// L2 (x) L2 error over uniform velocity samples with a Gauss-bell input.
inline ErrorTable bench_transport(const BenchmarkSpec& spec) {
    LinearSystem lin = gen_transport(spec.n);
    SystemModel sys = transport_system(lin);
    const double tmin = 1.0, tmax = 1.5;
    GramianConfig cfg;
    cfg.nf.v[3] = 1;
    cfg.nf.v[4] = 1;
    cfg.threads = spec.threads;
    cfg.pr = Matrix(1, 2);
    cfg.pr << tmin, tmax;
    Matrix wx = empirical_wx(sys, spec.grid, cfg).primary;

    InputSignal bell = gauss_bell_input(1, spec.grid);
    InputFunction u = [&bell](double t) { return bell.evaluate(t); };
    std::uint64_t state = spec.seed + 202;
    std::vector<double> thetas(static_cast<std::size_t>(spec.samples));
    for (auto& th : thetas) th = tmin + (tmax - tmin) * detail::uniform01(state);

    std::vector<Trajectory> refs;
    std::vector<double> refnorm;
    for (double th : thetas) {
        Trajectory y = solve(sys, spec.grid, Vector::Zero(spec.n), u, Vector::Constant(1, th));
        refnorm.push_back(l2_error(y, Trajectory{Matrix::Zero(y.rows(), y.cols())}, spec.grid));
        refs.push_back(std::move(y));
    }
    const double ynorm = l2l2_error(refnorm, tmax - tmin);

    std::vector<Index> orders = spec.orders.empty() ? detail::default_orders(spec.n)
                                                    : spec.orders;
    ErrorTable table;
    table.columns = {"order", "l2l2_error", "max_re_eig"};
    table.data.resize(static_cast<Index>(orders.size()), 3);
    for (std::size_t i = 0; i < orders.size(); ++i) {
        const Index n = orders[i];
        RomProjection proj = direct_truncation(wx, n);
        LinearSystem rom = reduce_linear(lin, proj);  // theta scales A and B jointly
        SystemModel romsys = transport_system(rom);
        std::vector<double> errs;
        for (std::size_t s = 0; s < thetas.size(); ++s) {
            Trajectory yr = solve(romsys, spec.grid, Vector::Zero(n), u,
                                  Vector::Constant(1, thetas[s]));
            errs.push_back(l2_error(refs[s], yr, spec.grid));
        }
        table.data(static_cast<Index>(i), 0) = static_cast<double>(n);
        table.data(static_cast<Index>(i), 1) = l2l2_error(errs, tmax - tmin) / ynorm;
        table.data(static_cast<Index>(i), 2) = detail::max_real_eigenvalue(rom.A);
    }
    return table;
}

/// Hyperbolic network: non-symmetric joint Gramian, combined state and
/// parameter reduction, relative L2 (x) L2 error over an (n, p) grid.
inline ErrorTable bench_network(const BenchmarkSpec& spec) {
    SystemModel sys = gen_tanh_network(spec.n, spec.m, spec.seed);
    const Index np = sys.dims().params;
    const double tmin = 0.5, tmax = 1.0;
    GramianConfig cfg;
    cfg.nf.v[3] = 1;
    cfg.nf.v[4] = 1;
    cfg.nf.v[6] = 1;  // non-symmetric cross Gramian (M != Q)
    cfg.nf.v[7] = 1;  // excite perturbation sims: x = 0 is an equilibrium
                      // for every theta, so parameters are unobservable
                      // without the extra input
    cfg.nf.v[8] = 1;  // mean-centered parameter perturbations
    cfg.threads = spec.threads;
    cfg.pr = Matrix(np, 2);
    cfg.pr.col(0).setConstant(tmin);
    cfg.pr.col(1).setConstant(tmax);
    GramianResult wj = empirical_wj(sys, spec.grid, cfg);
    if (!wj.companion) throw numerical_error("bench_network: missing cross-identifiability block");
    const Vector theta_bar = Vector::Constant(np, 0.5 * (tmin + tmax));

    InputSignal bell = gauss_bell_input(1, spec.grid);
    InputFunction u = [&bell](double t) { return bell.evaluate(t); };
    std::uint64_t state = spec.seed + 303;
    std::vector<Vector> thetas(static_cast<std::size_t>(spec.samples));
    for (auto& th : thetas) {
        th.resize(np);
        for (Index i = 0; i < np; ++i) th(i) = tmin + (tmax - tmin) * detail::uniform01(state);
    }

    std::vector<Trajectory> refs;
    std::vector<double> refnorm;
    for (const auto& th : thetas) {
        Trajectory y = solve(sys, spec.grid, Vector::Zero(spec.n), u, th);
        refnorm.push_back(l2_error(y, Trajectory{Matrix::Zero(y.rows(), y.cols())}, spec.grid));
        refs.push_back(std::move(y));
    }
    const double ynorm = l2l2_error(refnorm);

    std::vector<Index> orders = spec.orders.empty() ? detail::default_orders(spec.n)
                                                    : spec.orders;
    std::vector<Index> porders = spec.param_orders.empty() ? detail::default_orders(np)
                                                           : spec.param_orders;
    // symmetrized cross-identifiability information for the parameter basis
    Matrix wii = 0.5 * (*wj.companion + Matrix(wj.companion->transpose()));
    ErrorTable table;
    table.columns = {"order", "param_order", "l2l2_error"};
    table.data.resize(static_cast<Index>(orders.size() * porders.size()), 3);
    Index row = 0;
    for (Index n : orders) {
        RomProjection proj = direct_truncation(wj.primary, n);
        for (Index p : porders) {
            auto [pi1, lambda1] = parameter_projection(wii, p);
            RomProjection full = proj;
            full.Pi1 = pi1;
            full.Lambda1 = lambda1;
            full.theta_bar = theta_bar;
            SystemModel rom = build_rom(sys, full);
            std::vector<double> errs;
            for (std::size_t s = 0; s < thetas.size(); ++s) {
                Vector thr = lambda1.transpose() * (thetas[s] - theta_bar);
                Trajectory yr = solve(rom, spec.grid, Vector::Zero(n), u, thr);
                errs.push_back(l2_error(refs[s], yr, spec.grid));
            }
            table.data(row, 0) = static_cast<double>(n);
            table.data(row, 1) = static_cast<double>(p);
            table.data(row, 2) = l2l2_error(errs) / ynorm;
            ++row;
        }
    }
    return table;
}

inline ErrorTable run_benchmark(const BenchmarkSpec& spec) {
    switch (spec.kind) {
        case BenchmarkKind::LinearSymmetric: return bench_linear(spec);
        case BenchmarkKind::Transport: return bench_transport(spec);
        case BenchmarkKind::TanhNetwork: return bench_network(spec);
    }
    throw config_error("run_benchmark: unknown benchmark kind");
}

}  // namespace emgram
