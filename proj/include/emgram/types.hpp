#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace emgram {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Invalid configuration, flag out of range or inconsistent dimensions.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure during computation (divergence, singularity, ...).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Uniform time discretization {0, h, 2h, ..., K*h}.
struct TimeGrid {
    double h = 0.0;
    double horizon = 0.0;

    TimeGrid(double step, double T) : h(step), horizon(T) {
        if (!(h > 0.0) || !(horizon > h)) {
            throw config_error("TimeGrid: require 0 < h < T");
        }
    }

    /// Number of steps K = round(T/h); the grid has K+1 sample times.
    Index steps() const { return static_cast<Index>(std::llround(horizon / h)); }

    double time(Index k) const { return static_cast<double>(k) * h; }
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace emgram
