#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "emgram/integrate.hpp"
#include "emgram/linalg.hpp"
#include "emgram/model.hpp"
#include "emgram/parallel.hpp"
#include "emgram/signals.hpp"
#include "emgram/types.hpp"

namespace emgram {

enum class GramianKind {
    Controllability,   // 'c'
    Observability,     // 'o'
    Cross,             // 'x'
    LinearCross,       // 'y'
    Sensitivity,       // 's'
    Identifiability,   // 'i'
    Joint,             // 'j'
};

inline char kind_to_char(GramianKind k) {
    switch (k) {
        case GramianKind::Controllability: return 'c';
        case GramianKind::Observability: return 'o';
        case GramianKind::Cross: return 'x';
        case GramianKind::LinearCross: return 'y';
        case GramianKind::Sensitivity: return 's';
        case GramianKind::Identifiability: return 'i';
        case GramianKind::Joint: return 'j';
    }
    throw config_error("unknown Gramian kind");
}

inline GramianKind kind_from_char(char c) {
    switch (c) {
        case 'c': return GramianKind::Controllability;
        case 'o': return GramianKind::Observability;
        case 'x': return GramianKind::Cross;
        case 'y': return GramianKind::LinearCross;
        case 's': return GramianKind::Sensitivity;
        case 'i': return GramianKind::Identifiability;
        case 'j': return GramianKind::Joint;
        default: throw config_error(std::string("unknown Gramian kind '") + c + "'");
    }
}

/// The twelve option flags, 0-based storage, 1-based accessor names follow
/// the interface convention nf(1)..nf(12).
struct Flags {
    std::array<int, 12> v{};

    int centering() const { return v[0]; }            // nf(1): 0..5
    int input_scale_mode() const { return v[1]; }     // nf(2): 0..4
    int state_scale_mode() const { return v[2]; }     // nf(3): 0..4
    bool input_two_sided() const { return v[3] == 0; }  // nf(4)
    bool state_two_sided() const { return v[4] == 0; }  // nf(5)
    int normalization() const { return v[5]; }        // nf(6): 0..2
    bool nonsymmetric() const { return v[6] == 1; }   // nf(7)
    bool extra_input() const { return v[7] == 1; }    // nf(8)
    int param_centering() const { return v[8]; }      // nf(9): 0..2
    int param_variant() const { return v[9]; }        // nf(10): 0..1
    Index partition_width() const { return v[10]; }   // nf(11)
    Index partition_index() const { return v[11]; }   // nf(12)

    void validate(Index n) const {
        auto in_range = [&](int idx, int lo, int hi) {
            if (v[idx] < lo || v[idx] > hi) {
                throw config_error("nf(" + std::to_string(idx + 1) + ") = " +
                                   std::to_string(v[idx]) + " out of range [" +
                                   std::to_string(lo) + "," + std::to_string(hi) + "]");
            }
        };
        in_range(0, 0, 5);
        in_range(1, 0, 4);
        in_range(2, 0, 4);
        in_range(3, 0, 1);
        in_range(4, 0, 1);
        in_range(5, 0, 2);
        in_range(6, 0, 1);
        in_range(7, 0, 1);
        in_range(8, 0, 2);
        in_range(9, 0, 1);
        if (v[10] < 0 || (v[10] != 0 && v[10] >= n)) {
            throw config_error("nf(11) must be 0 or in [1, N)");
        }
        if (v[11] < 0) throw config_error("nf(12) must be >= 0");
    }
};

/// Inner-product kernel; default is the plain matrix product. The arguments
/// are a row block (r x K') and a column block (K' x c); scalar or vector
/// results (trace / diagonal pseudo-kernels) are admissible.
using Kernel = std::function<Matrix(const Matrix&, const Matrix&)>;

/// Excitation selection for the `ut` argument.
struct InputSpec {
    SignalKind kind = SignalKind::Impulse;
    std::uint64_t seed = 0;
    std::function<Vector(double)> custom;

    InputSignal make(Index m, const TimeGrid& grid) const {
        switch (kind) {
            case SignalKind::Impulse: return InputSignal::impulse(m, grid);
            case SignalKind::PseudoRandomBinary: return InputSignal::prbs(m, grid, seed);
            case SignalKind::Chirp: return InputSignal::chirp(m, grid);
            case SignalKind::Custom: return InputSignal::custom(m, grid, custom);
        }
        throw config_error("InputSpec: unknown signal kind");
    }
};

struct GramianConfig {
    Matrix pr;          // P x n_samples parameter columns; empty = single zero column
    Flags nf;
    InputSpec ut;       // excitation signal
    Vector us;          // steady-state input, scalar-broadcast or M-vector
    Vector xs;          // steady state, scalar-broadcast or N-vector
    Matrix um;          // input scales: empty/scalar/vector/matrix(as-is)
    Matrix xm;          // state scales: empty/scalar/vector/matrix(as-is)
    Kernel dp;          // inner-product kernel, null = matrix product
    SolverConfig solver;
    int threads = 1;
};

struct GramianResult {
    Matrix primary;                    // N x N (or N x (N+P) block for partitions)
    std::optional<Matrix> companion;   // W_S diag (P x 1), W_I (P x P) or W_Idd (P x P)
};

// ---------------------------------------------------------------------------
// Configuration helpers

/// Expand a scale spec into a matrix of scale columns: mode selects the
/// subdivision sequence, two_sided prepends the negated scales.
inline Matrix scale_sequence(const Vector& base, int mode, bool two_sided) {
    if ((base.array() == 0.0).any()) throw config_error("scale_sequence: zero base scale");
    std::vector<double> seq;
    switch (mode) {
        case 0: seq = {1.0}; break;
        case 1: seq = {0.25, 0.5, 0.75, 1.0}; break;
        case 2: seq = {0.125, 0.25, 0.5, 1.0}; break;
        case 3: seq = {0.001, 0.01, 0.1, 1.0}; break;
        case 4: seq = {0.01, 0.5, 0.99, 1.0}; break;
        default: throw config_error("scale_sequence: mode out of range");
    }
    const Index l0 = static_cast<Index>(seq.size());
    const Index l = two_sided ? 2 * l0 : l0;
    Matrix scales(base.size(), l);
    for (Index k = 0; k < l0; ++k) {
        const Index col = two_sided ? l0 + k : k;
        scales.col(col) = base * seq[static_cast<std::size_t>(k)];
        if (two_sided) scales.col(k) = -scales.col(col);
    }
    return scales;
}

/// Subtract a per-row offset from a trajectory; mode semantics follow nf(1).
inline Trajectory center(const Trajectory& traj, int mode, const Vector& steady) {
    Trajectory out = traj;
    Matrix& m = out.values;
    switch (mode) {
        case 0:
            break;
        case 1:
            if (steady.size() != m.rows()) {
                throw config_error("center: steady-state dimension mismatch");
            }
            m.colwise() -= steady;
            break;
        case 2:
            m.colwise() -= Vector(m.col(m.cols() - 1));
            break;
        case 3:
            m.colwise() -= Vector(m.rowwise().mean());
            break;
        case 4:
            m.colwise() -= Vector(m.array().square().rowwise().mean().sqrt().matrix());
            break;
        case 5:
            m.colwise() -=
                Vector(0.5 * (m.rowwise().maxCoeff() + m.rowwise().minCoeff()));
            break;
        default:
            throw config_error("center: mode out of range");
    }
    return out;
}

/// Post-assembly normalization per nf(6).
inline Matrix normalize(const Matrix& w, int mode, const Vector& steady) {
    if (mode == 0) return w;
    const Index n = w.rows();
    Vector d(n);
    if (mode == 1) {
        if (w.rows() != w.cols()) throw config_error("normalize: mode 1 needs a square Gramian");
        for (Index i = 0; i < n; ++i) {
            if (w(i, i) <= 0.0) {
                throw numerical_error("normalize: nonpositive diagonal at index " +
                                      std::to_string(i));
            }
            d(i) = std::sqrt(w(i, i));
        }
    } else if (mode == 2) {
        if (steady.size() != n) throw config_error("normalize: steady-state dimension mismatch");
        for (Index i = 0; i < n; ++i) {
            if (steady(i) == 0.0) {
                throw numerical_error("normalize: zero steady-state component at index " +
                                      std::to_string(i));
            }
            d(i) = steady(i);
        }
    } else {
        throw config_error("normalize: mode out of range");
    }
    Matrix out = w;
    for (Index i = 0; i < out.rows(); ++i) {
        for (Index j = 0; j < out.cols(); ++j) {
            const double dj = (j < n) ? d(j) : 1.0;
            out(i, j) /= d(i) * dj;
        }
    }
    return out;
}

/// One contiguous column block of a partitioned cross Gramian.
struct PartitionBlock {
    Index start = 0;
    Matrix columns;
};

/// Horizontal concatenation of ordered column blocks covering [0, total)
/// contiguously; equals the unpartitioned Gramian.
inline Matrix merge_partitions(const std::vector<PartitionBlock>& blocks) {
    if (blocks.empty()) throw config_error("merge_partitions: no blocks");
    Index total = 0;
    for (const auto& b : blocks) total += b.columns.cols();
    const Index rows = blocks.front().columns.rows();
    Matrix out(rows, total);
    Index expected = 0;
    for (const auto& b : blocks) {
        if (b.columns.rows() != rows) throw config_error("merge_partitions: row mismatch");
        if (b.start != expected) {
            throw config_error("merge_partitions: blocks must be contiguous and ordered, got "
                               "start " + std::to_string(b.start) + " expected " +
                               std::to_string(expected));
        }
        out.middleCols(b.start, b.columns.cols()) = b.columns;
        expected += b.columns.cols();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parameter perturbation scales for W_S / W_I / W_J

struct ParamScales {
    Vector center;   // nominal parameter
    Matrix offsets;  // P x L perturbations relative to the center
};

/// Derive parameter perturbations from the per-parameter [min, max] span of
/// the pr columns, subdivided by the one-sided scale sequence and centered
/// per nf(9): 0 min, 1 arithmetic mean, 2 logarithmic mean.
inline ParamScales param_scales(const Matrix& pr, int mode, const Vector& seq) {
    if (pr.size() == 0) throw config_error("param_scales: empty parameter set");
    const Index p = pr.rows();
    const Vector pmin = pr.rowwise().minCoeff();
    const Vector pmax = pr.rowwise().maxCoeff();
    Vector center(p);
    for (Index i = 0; i < p; ++i) {
        switch (mode) {
            case 0:
                center(i) = pmin(i);
                break;
            case 1:
                center(i) = 0.5 * (pmin(i) + pmax(i));
                break;
            case 2: {
                if (pmin(i) <= 0.0) {
                    throw config_error(
                        "param_scales: logarithmic centering requires positive parameters");
                }
                center(i) = (pmax(i) > pmin(i))
                                ? (pmax(i) - pmin(i)) / std::log(pmax(i) / pmin(i))
                                : pmin(i);
                break;
            }
            default:
                throw config_error("param_scales: centering mode out of range");
        }
    }
    Matrix offsets(p, seq.size());
    for (Index k = 0; k < seq.size(); ++k) {
        offsets.col(k) = pmin + (pmax - pmin) * seq(k) - center;
    }
    return ParamScales{center, offsets};
}

// ---------------------------------------------------------------------------
// Assembly machinery

namespace detail {

inline Vector broadcast(const Vector& spec, Index dim, const char* name) {
    if (spec.size() == 0) return Vector::Zero(dim);
    if (spec.size() == 1) return Vector::Constant(dim, spec(0));
    if (spec.size() == dim) return spec;
    throw config_error(std::string(name) + ": expected scalar or vector of matching dimension");
}

/// Expand a scale spec into a dim x L scale matrix. Matrices with more than
/// one column are used as is, bypassing the sequence and direction flags.
inline Matrix make_scales(const Matrix& spec, Index dim, int mode, bool two_sided,
                          const char* name) {
    Vector base;
    if (spec.size() == 0) {
        base = Vector::Ones(dim);
    } else if (spec.rows() == 1 && spec.cols() == 1) {
        base = Vector::Constant(dim, spec(0, 0));
    } else if (spec.rows() == dim && spec.cols() == 1) {
        base = spec.col(0);
    } else if (spec.rows() == dim && spec.cols() > 1) {
        if ((spec.array() == 0.0).any()) {
            throw config_error(std::string(name) + ": zero scale in matrix spec");
        }
        return spec;
    } else {
        throw config_error(std::string(name) + ": bad scale spec shape");
    }
    return scale_sequence(base, mode, two_sided);
}

inline Matrix default_kernel(const Matrix& x, const Matrix& y) { return x * y; }

/// Shared per-computation state.
struct Ctx {
    const SystemModel& sys;
    const TimeGrid& grid;
    const GramianConfig& cfg;
    Index m, n, q, steps;
    Vector us, xs;
    Matrix um;  // M x Lu
    Matrix xm;  // N x Lx
    Matrix pr;  // P x S parameter sample columns
    InputSignal exc;
    Kernel dp;
    bool default_dp = false;

    Ctx(const SystemModel& system, const TimeGrid& g, const GramianConfig& c)
        : sys(system),
          grid(g),
          cfg(c),
          m(system.dims().inputs),
          n(system.dims().states),
          q(system.dims().outputs),
          steps(g.steps()),
          exc(c.ut.make(system.dims().inputs, g)) {
        cfg.nf.validate(n);
        us = broadcast(cfg.us, m, "us");
        xs = broadcast(cfg.xs, n, "xs");
        um = make_scales(cfg.um, m, cfg.nf.input_scale_mode(), cfg.nf.input_two_sided(), "um");
        xm = make_scales(cfg.xm, n, cfg.nf.state_scale_mode(), cfg.nf.state_two_sided(), "xm");
        if (cfg.pr.size() == 0) {
            pr = Matrix::Zero(sys.dims().params, 1);
        } else {
            if (cfg.pr.rows() != sys.dims().params) {
                throw config_error("pr: row count must equal the parameter count P");
            }
            pr = cfg.pr;
        }
        default_dp = !cfg.dp;
        dp = cfg.dp ? cfg.dp : Kernel(default_kernel);
    }

    /// Perturbed input u(t) = c * e_m o u_exc(t) + us.
    InputFunction perturbed_input(Index channel, double scale) const {
        const Vector base = us;
        const InputSignal* sig = &exc;
        return [base, sig, channel, scale](double t) {
            Vector u = base;
            u(channel) += scale * sig->evaluate(t)(channel);
            return u;
        };
    }

    InputFunction steady_input(bool extra) const {
        const Vector base = us;
        if (!extra || m == 0) {
            return [base](double) { return base; };
        }
        const InputSignal* sig = &exc;
        return [base, sig](double t) { return Vector(base + sig->evaluate(t)); };
    }

    Trajectory sim_states(const Vector& x0, const InputFunction& u, const Vector& p) const {
        if (cfg.solver.custom || sys.identity_output()) {
            if (sys.identity_output()) return solve(sys, grid, x0, u, p, cfg.solver);
            SystemModel states = SystemModel::with_identity_output(
                [this](const Vector& x, const Vector& uin, const Vector& pp, double t) {
                    return sys.f(x, uin, pp, t);
                },
                Dims{m, n, n, sys.dims().params}, xs, us);
            return solve(states, grid, x0, u, p, cfg.solver);
        }
        auto f = [this](const Vector& x, const Vector& uin, const Vector& pp, double t) {
            return sys.f(x, uin, pp, t);
        };
        return ssp_rk(f, nullptr, grid, x0, u, p, cfg.solver.stages);
    }

    Trajectory sim_outputs(const Vector& x0, const InputFunction& u, const Vector& p) const {
        return solve(sys, grid, x0, u, p, cfg.solver);
    }

    /// State perturbation realized as a discrete delta impulse: integrate from
    /// the steady state with forcing (d/h) e_dir during the first step. This
    /// mirrors the input-impulse realization exactly, so input- and
    /// state-perturbed trajectories share the same one-step propagator and
    /// W_C, W_O, and W_X coincide to rounding for state-space-symmetric
    /// systems.
    Trajectory sim_kicked_outputs(Index dir, double d, const InputFunction& u,
                                  const Vector& p) const {
        const double h = grid.h;
        const double amp = d / h;
        VectorField f = [this, dir, amp, h](const Vector& x, const Vector& uin,
                                            const Vector& pp, double t) {
            Vector out = sys.f(x, uin, pp, t);
            if (t < h) out(dir) += amp;
            return out;
        };
        if (sys.identity_output()) {
            SystemModel kicked = SystemModel::with_identity_output(
                std::move(f), sys.dims(), xs, us);
            return solve(kicked, grid, xs, u, p, cfg.solver);
        }
        OutputMap g = [this](const Vector& x, const Vector& uin, const Vector& pp, double t) {
            return sys.g(x, uin, pp, t);
        };
        SystemModel kicked(std::move(f), std::move(g), sys.dims(), xs, us);
        return solve(kicked, grid, xs, u, p, cfg.solver);
    }

    /// Steady output for nf(1) = 1 centering of output trajectories.
    Vector steady_output(const Vector& p) const { return sys.g(xs, us, p, 0.0); }

    /// Center per nf(1), drop the t = 0 sample, divide by the signed scale.
    Matrix prep(const Trajectory& traj, const Vector& steady, double scale) const {
        Trajectory c = center(traj, cfg.nf.centering(), steady);
        return c.values.rightCols(steps) / scale;
    }

    void accumulate(Matrix& acc, const Matrix& term) const {
        if (acc.size() == 0) {
            acc = term;
        } else {
            acc += term;
        }
    }
};

/// Empirical controllability-type accumulation: one input-perturbation state
/// (or primal/adjoint pair) block product per scale level.
inline Matrix wc_core(const Ctx& ctx) {
    if (ctx.m < 1) throw config_error("empirical controllability Gramian: M >= 1 required");
    const Index lu = ctx.um.cols();
    const Index ns = ctx.pr.cols();
    Matrix acc;
    for (Index s = 0; s < ns; ++s) {
        const Vector p = ctx.pr.col(s);
        for (Index k = 0; k < lu; ++k) {
            Matrix x(ctx.n, ctx.m * ctx.steps);
            parallel_for(ctx.m, ctx.cfg.threads, [&](Index mm) {
                const double c = ctx.um(mm, k);
                try {
                    Trajectory traj = ctx.sim_states(ctx.xs, ctx.perturbed_input(mm, c), p);
                    x.middleCols(mm * ctx.steps, ctx.steps) = ctx.prep(traj, ctx.xs, c);
                } catch (const numerical_error& e) {
                    throw numerical_error("input perturbation (scale " + std::to_string(k) +
                                          ", channel " + std::to_string(mm) + "): " + e.what());
                }
            });
            ctx.accumulate(acc, ctx.dp(x, x.transpose()));
        }
    }
    acc *= ctx.grid.h / static_cast<double>(lu * ns);
    return acc;
}

/// Per-direction count of nonzero scales; each perturbation direction is
/// averaged over its own scale set (rows padded with zeros average over
/// fewer levels, as with mixed state/parameter scale counts).
inline Vector scale_counts(const Matrix& scales) {
    Vector counts(scales.rows());
    for (Index j = 0; j < scales.rows(); ++j) {
        counts(j) = static_cast<double>((scales.row(j).array() != 0.0).count());
    }
    return counts;
}

/// Empirical observability-type accumulation over perturbation directions
/// with a per-direction scale matrix; zero scales are skipped (their columns
/// contribute nothing). Used directly for W_O and on the augmented system
/// for W_I.
inline Matrix wo_core(const Ctx& ctx, const Matrix& scales) {
    if (ctx.q < 1) throw config_error("empirical observability Gramian: Q >= 1 required");
    const Index dirs = scales.rows();
    const Index lx = scales.cols();
    const Index ns = ctx.pr.cols();
    const Vector counts = scale_counts(scales);
    const InputFunction u = ctx.steady_input(ctx.cfg.nf.extra_input());
    Matrix acc;
    for (Index s = 0; s < ns; ++s) {
        const Vector p = ctx.pr.col(s);
        const Vector ys = (ctx.cfg.nf.centering() == 1) ? ctx.steady_output(p)
                                                        : Vector::Zero(ctx.q);
        for (Index l = 0; l < lx; ++l) {
            Matrix phi = Matrix::Zero(ctx.q * ctx.steps, dirs);
            parallel_for(dirs, ctx.cfg.threads, [&](Index j) {
                const double d = scales(j, l);
                if (d == 0.0) return;
                Trajectory traj = ctx.sim_kicked_outputs(j, d, u, p);
                Matrix yc = ctx.prep(traj, ys, d) / std::sqrt(counts(j));
                phi.col(j) = Eigen::Map<const Vector>(yc.data(), yc.size());
            });
            ctx.accumulate(acc, ctx.dp(phi.transpose(), phi));
        }
    }
    acc *= ctx.grid.h / static_cast<double>(ns);
    return acc;
}

/// Empirical cross-type accumulation: input-perturbed state rows against
/// state-perturbed output columns, restricted to perturbation directions
/// [col_start, col_start + cols) for partitioned computation. The state rows
/// are the first `rows` components (all of them except for the joint
/// Gramian, which drops the parameter-state rows).
inline Matrix wx_core(const Ctx& ctx, const Matrix& scales, Index rows, Index col_start,
                      Index cols) {
    if (ctx.m < 1 || ctx.q < 1) {
        throw config_error("empirical cross Gramian: M >= 1 and Q >= 1 required");
    }
    const bool nonsym = ctx.cfg.nf.nonsymmetric();
    if (!nonsym && ctx.m != ctx.q) {
        throw config_error(
            "empirical cross Gramian: M = Q required unless nf(7) selects the non-symmetric "
            "variant");
    }
    const Index lu = ctx.um.cols();
    const Index lx = scales.cols();
    const Index ns = ctx.pr.cols();
    const Vector counts = scale_counts(scales);
    const InputFunction u_state = ctx.steady_input(ctx.cfg.nf.extra_input());
    // With the default matrix-product kernel, apply it one column at a time so
    // partitioned, augmented, and monolithic computations share identical
    // floating-point arithmetic (gemm and gemv round differently).
    auto apply_dp = [&ctx](const Matrix& x, const Matrix& t) {
        if (!ctx.default_dp) return ctx.dp(x, t);
        Matrix term(x.rows(), t.cols());
        for (Index jj = 0; jj < t.cols(); ++jj) term.col(jj) = x * t.col(jj);
        return term;
    };
    Matrix acc;
    for (Index s = 0; s < ns; ++s) {
        const Vector p = ctx.pr.col(s);
        const Vector ys = (ctx.cfg.nf.centering() == 1) ? ctx.steady_output(p)
                                                        : Vector::Zero(ctx.q);
        // input-perturbed state trajectories, first `rows` components
        std::vector<Matrix> xblocks(static_cast<std::size_t>(lu * ctx.m));
        parallel_for(lu * ctx.m, ctx.cfg.threads, [&](Index idx) {
            const Index k = idx / ctx.m, mm = idx % ctx.m;
            const double c = ctx.um(mm, k);
            Trajectory traj = ctx.sim_states(ctx.xs, ctx.perturbed_input(mm, c), p);
            traj.values.conservativeResize(rows, Eigen::NoChange);
            xblocks[static_cast<std::size_t>(idx)] = ctx.prep(traj, ctx.xs.head(rows), c);
        });
        // state-perturbed output trajectories for the requested columns
        std::vector<Matrix> yblocks(static_cast<std::size_t>(lx * cols));
        parallel_for(lx * cols, ctx.cfg.threads, [&](Index idx) {
            const Index l = idx / cols, jj = idx % cols;
            const double d = scales(col_start + jj, l);
            if (d == 0.0) return;
            Trajectory traj = ctx.sim_kicked_outputs(col_start + jj, d, u_state, p);
            yblocks[static_cast<std::size_t>(idx)] =
                ctx.prep(traj, ys, d) / counts(col_start + jj);
        });
        for (Index k = 0; k < lu; ++k) {
            for (Index l = 0; l < lx; ++l) {
                if (nonsym) {
                    // for M = 1 / Q = 1 reuse the blocks unsummed so the
                    // SISO result is bitwise identical to the symmetric path
                    Matrix xsum = xblocks[static_cast<std::size_t>(k * ctx.m)];
                    for (Index mm = 1; mm < ctx.m; ++mm) {
                        xsum += xblocks[static_cast<std::size_t>(k * ctx.m + mm)];
                    }
                    Matrix t = Matrix::Zero(ctx.steps, cols);
                    for (Index jj = 0; jj < cols; ++jj) {
                        const Matrix& y = yblocks[static_cast<std::size_t>(l * cols + jj)];
                        if (y.size() == 0) continue;
                        t.col(jj) = (ctx.q == 1) ? y.row(0).transpose()
                                                 : Matrix(y.colwise().sum().transpose());
                    }
                    ctx.accumulate(acc, apply_dp(xsum, t));
                } else {
                    for (Index mm = 0; mm < ctx.m; ++mm) {
                        Matrix t = Matrix::Zero(ctx.steps, cols);
                        for (Index jj = 0; jj < cols; ++jj) {
                            const Matrix& y = yblocks[static_cast<std::size_t>(l * cols + jj)];
                            if (y.size() == 0) continue;
                            t.col(jj) = y.row(mm).transpose();
                        }
                        ctx.accumulate(
                            acc, apply_dp(xblocks[static_cast<std::size_t>(k * ctx.m + mm)], t));
                    }
                }
            }
        }
    }
    // normalized over scale levels and parameter samples only; the channel
    // sum itself reconstructs B*C, so averaging over M would shrink the
    // Gramian M-fold and break the linear-system equality W_X = P_X
    acc *= ctx.grid.h / static_cast<double>(lu * ns);
    return acc;
}

inline void symmetrize(Matrix& w) {
    if (w.rows() == w.cols()) w = 0.5 * (w + w.transpose());
}

/// Column range selected by the partition flags nf(11)/nf(12) over `total`
/// columns; returns {0, total} when partitioning is inactive.
inline std::pair<Index, Index> partition_range(const Flags& nf, Index total) {
    const Index width = nf.partition_width();
    const Index index = nf.partition_index();
    if (width <= 0) return {0, total};
    const Index start = index * width;
    if (start >= total) {
        throw config_error("partition index " + std::to_string(index) +
                           " beyond last block for width " + std::to_string(width));
    }
    return {start, std::min(start + width, total)};
}

inline Vector one_sided_sequence(int mode) {
    return scale_sequence(Vector::Ones(1), mode, false).row(0).transpose();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public Gramian computations

inline GramianResult empirical_wc(const SystemModel& sys, const TimeGrid& grid,
                                  const GramianConfig& cfg) {
    detail::Ctx ctx(sys, grid, cfg);
    Matrix w = detail::wc_core(ctx);
    detail::symmetrize(w);
    if (cfg.nf.normalization() != 0) w = normalize(w, cfg.nf.normalization(), ctx.xs);
    return {w, std::nullopt};
}

inline GramianResult empirical_wo(const SystemModel& sys, const TimeGrid& grid,
                                  const GramianConfig& cfg) {
    detail::Ctx ctx(sys, grid, cfg);
    Matrix w = detail::wo_core(ctx, ctx.xm);
    detail::symmetrize(w);
    if (cfg.nf.normalization() != 0) w = normalize(w, cfg.nf.normalization(), ctx.xs);
    return {w, std::nullopt};
}

/// Empirical cross Gramian (nf(7) = 1: non-symmetric variant); honors the
/// partition flags nf(11)/nf(12).
inline GramianResult empirical_wx(const SystemModel& sys, const TimeGrid& grid,
                                  const GramianConfig& cfg) {
    detail::Ctx ctx(sys, grid, cfg);
    auto [start, end] = detail::partition_range(cfg.nf, ctx.n);
    Matrix w = detail::wx_core(ctx, ctx.xm, ctx.n, start, end - start);
    const bool partitioned = !(start == 0 && end == ctx.n);
    if (!partitioned && cfg.nf.normalization() != 0) {
        w = normalize(w, cfg.nf.normalization(), ctx.xs);
    }
    return {w, std::nullopt};
}

/// Empirical linear cross Gramian from primal and transposed-system
/// trajectories; defined for linear systems only.
inline GramianResult empirical_wy(const LinearSystem& lin, const TimeGrid& grid,
                                  const GramianConfig& cfg) {
    lin.check();
    if (!cfg.nf.nonsymmetric() && lin.inputs() != lin.outputs()) {
        throw config_error("empirical linear cross Gramian: M = Q required unless nf(7) = 1");
    }
    LinearSystem sys = lin;
    if (cfg.nf.nonsymmetric()) {
        // average-system reduction: sum B columns and C rows (SISO)
        Matrix bsum = sys.B.rowwise().sum();
        Matrix csum = sys.C.colwise().sum();
        sys.B = bsum;
        sys.C = csum;
    }
    const Index n = sys.states(), m = sys.inputs();
    GramianConfig cfg2 = cfg;
    cfg2.um = detail::make_scales(cfg.um, m, cfg.nf.input_scale_mode(),
                                  cfg.nf.input_two_sided(), "um");
    SystemModel primal = sys.to_system();
    LinearSystem adj{sys.A.transpose(), sys.C.transpose(), sys.B.transpose(), std::nullopt};
    SystemModel adjoint = adj.to_system();

    detail::Ctx ctx(primal, grid, cfg2);
    detail::Ctx ctxz(adjoint, grid, cfg2);
    const Index lu = ctx.um.cols();
    const Index ns = ctx.pr.cols();
    Matrix acc;
    for (Index s = 0; s < ns; ++s) {
        const Vector p = ctx.pr.col(s);
        for (Index k = 0; k < lu; ++k) {
            Matrix x(n, m * ctx.steps);
            Matrix z(n, m * ctx.steps);
            parallel_for(m, cfg.threads, [&](Index mm) {
                const double c = ctx.um(mm, k);
                const InputFunction u = ctx.perturbed_input(mm, c);
                Trajectory xt = ctx.sim_states(ctx.xs, u, p);
                Trajectory zt = ctxz.sim_states(ctxz.xs, u, Vector());
                x.middleCols(mm * ctx.steps, ctx.steps) = ctx.prep(xt, ctx.xs, c);
                z.middleCols(mm * ctx.steps, ctx.steps) = ctxz.prep(zt, ctxz.xs, c);
            });
            ctx.accumulate(acc, ctx.dp(x, z.transpose()));
        }
    }
    acc *= grid.h / static_cast<double>(lu * ns);
    if (cfg.nf.normalization() != 0) acc = normalize(acc, cfg.nf.normalization(), ctx.xs);
    return {acc, std::nullopt};
}

/// Empirical sensitivity Gramian: the input controllability Gramian plus the
/// per-parameter controllability traces, with each parameter treated as a
/// constant extra input excited by the input signal.
inline GramianResult empirical_ws(const SystemModel& sys, const TimeGrid& grid,
                                  const GramianConfig& cfg) {
    const Index p = sys.dims().params;
    if (p < 1) throw config_error("empirical sensitivity Gramian: P >= 1 required");
    detail::Ctx ctx(sys, grid, cfg);
    const Vector seq = detail::one_sided_sequence(cfg.nf.input_scale_mode());
    ParamScales ps = param_scales(ctx.pr, cfg.nf.param_centering(), seq);

    GramianConfig cfg_c = cfg;
    cfg_c.pr = ps.center;
    Matrix wc = empirical_wc(sys, grid, cfg_c).primary;

    const bool to_output = cfg.nf.param_variant() == 1;
    const InputFunction u_actual = ctx.steady_input(cfg.nf.extra_input());
    Vector ws = Vector::Zero(p);
    for (Index i = 0; i < p; ++i) {
        double acc = 0.0;
        Index used = 0;
        for (Index k = 0; k < ps.offsets.cols(); ++k) {
            const double delta = ps.offsets(i, k);
            if (delta == 0.0) continue;
            // parameter i acts as a single scaled input channel
            auto f = [&](const Vector& x, const Vector& v, const Vector&, double t) {
                Vector pp = ps.center;
                pp(i) += v(0);
                return sys.f(x, u_actual(t), pp, t);
            };
            OutputMap g;
            if (to_output && !sys.identity_output()) {
                g = [&](const Vector& x, const Vector& v, const Vector&, double t) {
                    Vector pp = ps.center;
                    pp(i) += v(0);
                    return sys.g(x, u_actual(t), pp, t);
                };
            }
            InputFunction v = [&ctx, delta](double t) {
                return Vector::Constant(1, delta * ctx.exc.evaluate(t)(0));
            };
            Trajectory traj = ssp_rk(f, g, grid, ctx.xs, v, Vector(), cfg.solver.stages);
            const Vector steady = to_output ? ctx.steady_output(ps.center) : ctx.xs;
            Matrix block = ctx.prep(traj, steady, delta);
            acc += grid.h * block.squaredNorm();  // trace of the local Gramian
            ++used;
        }
        ws(i) = (used > 0) ? acc / static_cast<double>(used) : 0.0;
    }
    return {wc, Matrix(ws)};
}

namespace detail {

/// Scale matrix for an augmented system: state rows from xm, parameter-state
/// rows from the pr-derived offsets; zero-padded to a common level count.
inline Matrix augmented_scales(const Matrix& xm, const Matrix& offsets) {
    const Index l = std::max(xm.cols(), offsets.cols());
    Matrix scales = Matrix::Zero(xm.rows() + offsets.rows(), l);
    scales.topLeftCorner(xm.rows(), xm.cols()) = xm;
    scales.bottomLeftCorner(offsets.rows(), offsets.cols()) = offsets;
    return scales;
}

inline GramianConfig augmented_config(const GramianConfig& cfg, const Vector& xs_aug) {
    GramianConfig out = cfg;
    out.pr = Matrix();
    out.xs = xs_aug;
    out.xm = Matrix();  // scales provided explicitly by the caller
    return out;
}

}  // namespace detail

/// Empirical identifiability Gramian from the augmented observability
/// Gramian; nf(10) = 0 computes the detailed Schur complement with the
/// approximate inverse, nf(10) = 1 uses the lower-right block W_P directly.
inline GramianResult empirical_wi(const SystemModel& sys, const TimeGrid& grid,
                                  const GramianConfig& cfg) {
    const Index n = sys.dims().states;
    const Index p = sys.dims().params;
    if (p < 1) throw config_error("empirical identifiability Gramian: P >= 1 required");
    if (sys.dims().outputs < 1) {
        throw config_error("empirical identifiability Gramian: Q >= 1 required");
    }
    GramianConfig cfg_base = cfg;  // partition flags apply to the augmented width
    cfg_base.nf.v[10] = 0;
    cfg_base.nf.v[11] = 0;
    detail::Ctx base(sys, grid, cfg_base);
    const Vector seq = detail::one_sided_sequence(cfg.nf.input_scale_mode());
    ParamScales ps = param_scales(base.pr, cfg.nf.param_centering(), seq);

    SystemModel aug = augment_parameters(sys);
    Vector xs_aug(n + p);
    xs_aug.head(n) = base.xs;
    xs_aug.tail(p) = ps.center;
    GramianConfig cfg_aug = detail::augmented_config(cfg, xs_aug);
    detail::Ctx ctx(aug, grid, cfg_aug);
    Matrix scales = detail::augmented_scales(base.xm, ps.offsets);
    Matrix waug = detail::wo_core(ctx, scales);
    detail::symmetrize(waug);

    Matrix wo = waug.topLeftCorner(n, n);
    Matrix wm = waug.topRightCorner(n, p);
    Matrix wp = waug.bottomRightCorner(p, p);
    Matrix wi;
    if (cfg.nf.param_variant() == 0) {
        wi = wp - wm.transpose() * approx_inverse(wo) * wm;
    } else {
        wi = wp;
    }
    return {wo, wi};
}

/// Empirical joint Gramian: the cross Gramian of the augmented system as an
/// N x (N+P) block (parameter rows are identically zero and never stored),
/// split into W_X and the cross-identifiability Schur complement.
inline GramianResult empirical_wj(const SystemModel& sys, const TimeGrid& grid,
                                  const GramianConfig& cfg) {
    const Index n = sys.dims().states;
    const Index p = sys.dims().params;
    if (p < 1) throw config_error("empirical joint Gramian: P >= 1 required");
    GramianConfig cfg_base = cfg;  // partition flags apply to the augmented width
    cfg_base.nf.v[10] = 0;
    cfg_base.nf.v[11] = 0;
    detail::Ctx base(sys, grid, cfg_base);
    const Vector seq = detail::one_sided_sequence(cfg.nf.input_scale_mode());
    ParamScales ps = param_scales(base.pr, cfg.nf.param_centering(), seq);

    SystemModel aug = augment_parameters(sys);
    Vector xs_aug(n + p);
    xs_aug.head(n) = base.xs;
    xs_aug.tail(p) = ps.center;
    GramianConfig cfg_aug = detail::augmented_config(cfg, xs_aug);
    detail::Ctx ctx(aug, grid, cfg_aug);
    Matrix scales = detail::augmented_scales(base.xm, ps.offsets);

    auto [start, end] = detail::partition_range(cfg.nf, n + p);
    Matrix w = detail::wx_core(ctx, scales, n, start, end - start);
    const bool partitioned = !(start == 0 && end == n + p);
    if (partitioned) return {w, std::nullopt};

    Matrix wx = w.leftCols(n);
    Matrix wm = w.rightCols(p);
    Matrix sym = wx + wx.transpose();
    Matrix inv;
    if (cfg.nf.param_variant() == 0) {
        inv = approx_inverse(sym);
    } else {
        inv = Matrix::Zero(n, n);
        for (Index i = 0; i < n; ++i) {
            if (sym(i, i) == 0.0) {
                throw numerical_error("empirical joint Gramian: zero diagonal at index " +
                                      std::to_string(i));
            }
            inv(i, i) = 1.0 / sym(i, i);
        }
    }
    Matrix wii = -0.5 * wm.transpose() * inv * wm;
    return {wx, wii};
}

/// Uniform entry point mirroring the single-call interface.
inline GramianResult empirical_gramian(const SystemModel& sys, const TimeGrid& grid,
                                       GramianKind kind, const GramianConfig& cfg) {
    switch (kind) {
        case GramianKind::Controllability: return empirical_wc(sys, grid, cfg);
        case GramianKind::Observability: return empirical_wo(sys, grid, cfg);
        case GramianKind::Cross: return empirical_wx(sys, grid, cfg);
        case GramianKind::LinearCross:
            throw config_error(
                "empirical linear cross Gramian requires a linear system description");
        case GramianKind::Sensitivity: return empirical_ws(sys, grid, cfg);
        case GramianKind::Identifiability: return empirical_wi(sys, grid, cfg);
        case GramianKind::Joint: return empirical_wj(sys, grid, cfg);
    }
    throw config_error("unknown Gramian kind");
}

inline GramianResult empirical_gramian(const LinearSystem& lin, const TimeGrid& grid,
                                       GramianKind kind, const GramianConfig& cfg) {
    if (kind == GramianKind::LinearCross) return empirical_wy(lin, grid, cfg);
    return empirical_gramian(lin.to_system(), grid, kind, cfg);
}

}  // namespace emgram
