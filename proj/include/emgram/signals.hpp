#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "emgram/types.hpp"

namespace emgram {

enum class SignalKind { Impulse, PseudoRandomBinary, Chirp, Custom };

namespace detail {

/// SplitMix64; fixed across platforms so PRBS sequences are reproducible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Excitation input u(t) on a time grid; immutable and shareable.
///
/// Impulse: 1/h on the first step [0,h), zero afterwards (discrete delta).
/// PRBS:    per-step values in {0,1}, precomputed from a seeded SplitMix64
///          generator, held constant within each step.
/// Chirp:   cos(2*pi*phi(t)) with instantaneous frequency sweeping
///          exponentially from 1/(2h) down to 1/T.
class InputSignal {
public:
    static InputSignal impulse(Index m, const TimeGrid& grid) {
        return InputSignal(SignalKind::Impulse, m, grid, 0, nullptr);
    }

    static InputSignal prbs(Index m, const TimeGrid& grid, std::uint64_t seed) {
        InputSignal sig(SignalKind::PseudoRandomBinary, m, grid, seed, nullptr);
        const Index steps = grid.steps();
        sig.table_ = Matrix(m, steps);
        std::uint64_t state = seed;
        for (Index k = 0; k < steps; ++k) {
            for (Index i = 0; i < m; ++i) {
                sig.table_(i, k) = static_cast<double>(detail::splitmix64(state) & 1ULL);
            }
        }
        return sig;
    }

    static InputSignal chirp(Index m, const TimeGrid& grid) {
        return InputSignal(SignalKind::Chirp, m, grid, 0, nullptr);
    }

    static InputSignal custom(Index m, const TimeGrid& grid,
                              std::function<Vector(double)> fn) {
        return InputSignal(SignalKind::Custom, m, grid, 0, std::move(fn));
    }

    Vector evaluate(double t) const {
        if (t < 0.0 || t > grid_.horizon) {
            throw config_error("InputSignal: time outside [0, T]");
        }
        switch (kind_) {
            case SignalKind::Impulse: {
                const double v = (t < grid_.h) ? 1.0 / grid_.h : 0.0;
                return Vector::Constant(m_, v);
            }
            case SignalKind::PseudoRandomBinary: {
                Index k = static_cast<Index>(t / grid_.h);
                if (k >= table_.cols()) k = table_.cols() - 1;
                return table_.col(k);
            }
            case SignalKind::Chirp: {
                const double f_max = 1.0 / (2.0 * grid_.h);
                const double f_min = 1.0 / grid_.horizon;
                const double r = f_min / f_max;
                // phi(t) = int_0^t f_max * r^(s/T) ds, closed form
                const double phi =
                    f_max * grid_.horizon / std::log(r) * (std::pow(r, t / grid_.horizon) - 1.0);
                return Vector::Constant(m_, std::cos(2.0 * M_PI * phi));
            }
            case SignalKind::Custom:
                return fn_(t);
        }
        throw config_error("InputSignal: unknown kind");
    }

    SignalKind kind() const { return kind_; }
    Index dim() const { return m_; }
    std::uint64_t seed() const { return seed_; }
    const TimeGrid& grid() const { return grid_; }

private:
    InputSignal(SignalKind kind, Index m, const TimeGrid& grid, std::uint64_t seed,
                std::function<Vector(double)> fn)
        : kind_(kind), m_(m), grid_(grid), seed_(seed), fn_(std::move(fn)) {
        if (m_ < 0) throw config_error("InputSignal: negative dimension");
    }

    SignalKind kind_;
    Index m_;
    TimeGrid grid_;
    std::uint64_t seed_;
    std::function<Vector(double)> fn_;
    Matrix table_;  // PRBS value table, one column per step
};

}  // namespace emgram
