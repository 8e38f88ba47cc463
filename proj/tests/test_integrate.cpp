#include <catch2/catch_amalgamated.hpp>

#include "emgram/integrate.hpp"
#include "emgram/testing.hpp"

using namespace emgram;

namespace {

InputFunction no_input() {
    return [](double) { return Vector(); };
}

}  // namespace

TEST_CASE("zero vector field keeps the state constant") {
    VectorField f = [](const Vector& x, const Vector&, const Vector&, double) {
        return Vector(Vector::Zero(x.size()));
    };
    TimeGrid grid(0.1, 1.0);
    Vector x0 = Vector::Constant(3, 4.2);
    Trajectory traj = ssp_rk(f, nullptr, grid, x0, no_input(), Vector());
    REQUIRE(traj.cols() == grid.steps() + 1);
    for (Index k = 0; k <= grid.steps(); ++k) CHECK(traj.values.col(k) == x0);
}

TEST_CASE("second-order convergence on the scalar exponential for stages 2, 3, 5") {
    VectorField f = [](const Vector& x, const Vector&, const Vector&, double) {
        return Vector(-x);
    };
    const double T = 1.0;
    for (int stages : {2, 3, 5}) {
        std::vector<double> errs;
        for (double h : {0.1, 0.05, 0.025}) {
            TimeGrid grid(h, T);
            Trajectory traj =
                ssp_rk(f, nullptr, grid, Vector::Ones(1), no_input(), Vector(), stages);
            errs.push_back(std::abs(traj.values(0, grid.steps()) - std::exp(-T)));
        }
        const double slope = std::log(errs[0] / errs[2]) / std::log(4.0);
        INFO("stages = " << stages << ", slope = " << slope);
        CHECK(slope > 1.9);
        CHECK(slope < 2.1);
    }
}

TEST_CASE("linear system matches the matrix exponential with O(h^2) error") {
    Matrix a(3, 3);
    a << -1.0, 0.3, 0.0, 0.0, -2.0, 0.5, 0.1, 0.0, -0.7;
    VectorField f = [a](const Vector& x, const Vector&, const Vector&, double) {
        return Vector(a * x);
    };
    Vector x0(3);
    x0 << 1.0, -1.0, 0.5;
    double prev_err = 0.0;
    for (double h : {0.02, 0.01}) {
        TimeGrid grid(h, 1.0);
        Trajectory traj = ssp_rk(f, nullptr, grid, x0, no_input(), Vector());
        Vector exact = testing::expm(a * 1.0) * x0;
        const double err = (traj.values.col(grid.steps()) - exact).norm();
        if (prev_err > 0.0) CHECK(prev_err / err > 3.0);  // ~4x for halved h
        prev_err = err;
        CHECK(err < 1e-3);
    }
}

TEST_CASE("divergence raises a numerical error with the step index") {
    VectorField f = [](const Vector& x, const Vector&, const Vector&, double) {
        return Vector(1000.0 * x);  // unstable with h = 0.1: divergence to inf
    };
    TimeGrid grid(0.1, 10.0);
    CHECK_THROWS_AS(ssp_rk(f, nullptr, grid, Vector::Ones(1), no_input(), Vector()),
                    numerical_error);
    try {
        ssp_rk(f, nullptr, grid, Vector::Ones(1), no_input(), Vector());
    } catch (const numerical_error& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("stages below 2 are rejected") {
    VectorField f = [](const Vector& x, const Vector&, const Vector&, double) {
        return Vector(-x);
    };
    TimeGrid grid(0.1, 1.0);
    CHECK_THROWS_AS(ssp_rk(f, nullptr, grid, Vector::Ones(1), no_input(), Vector(), 1),
                    config_error);
}

TEST_CASE("solve returns the state trajectory for identity-output systems") {
    VectorField f = [](const Vector& x, const Vector&, const Vector&, double) {
        return Vector(-x);
    };
    SystemModel sys = SystemModel::with_identity_output(f, Dims{0, 2, 0, 0});
    TimeGrid grid(0.1, 1.0);
    Trajectory traj = solve(sys, grid, Vector::Ones(2), no_input(), Vector());
    CHECK(traj.rows() == 2);
    CHECK(traj.values(0, 0) == 1.0);
}

TEST_CASE("custom solver replaces the default") {
    VectorField f = [](const Vector& x, const Vector&, const Vector&, double) {
        return Vector(-x);
    };
    SystemModel sys = SystemModel::with_identity_output(f, Dims{0, 1, 0, 0});
    TimeGrid grid(0.1, 1.0);
    SolverConfig solver;
    solver.custom = [](const SystemModel&, const TimeGrid& g, const Vector& x0,
                       const InputFunction&, const Vector&) {
        Trajectory t;
        t.values = Matrix::Zero(x0.size(), g.steps() + 1);
        return t;
    };
    Trajectory traj = solve(sys, grid, Vector::Ones(1), no_input(), Vector(), solver);
    CHECK(traj.values.isZero());
}

TEST_CASE("four-state single-channel impulse response matches the exponential oracle") {
    // A = -0.5 I, B = [0;1;0;1], C = [0,0,1,1]: y(t) = C e^{At} B after the impulse
    Matrix a = -0.5 * Matrix::Identity(4, 4);
    Matrix b(4, 1);
    b << 0, 1, 0, 1;
    Matrix c(1, 4);
    c << 0, 0, 1, 1;
    LinearSystem lin{a, b, c, std::nullopt};
    SystemModel sys = lin.to_system();
    TimeGrid grid(0.001, 2.0);
    InputFunction u = [&grid](double t) {
        return Vector(Vector::Constant(1, t < grid.h ? 1.0 / grid.h : 0.0));
    };
    Trajectory y = solve(sys, grid, Vector::Zero(4), u, Vector());
    const double t_check = 1.0;
    const Index k = static_cast<Index>(std::llround(t_check / grid.h));
    Vector exact = c * testing::expm(a * t_check) * b;
    CHECK(std::abs(y.values(0, k) - exact(0)) < 5e-3);
}

TEST_CASE("increasing stages does not shrink the stable step size") {
    // x' = lambda x, lambda = -1; h at the 2-stage stability margin stays stable for more stages
    VectorField f = [](const Vector& x, const Vector&, const Vector&, double) {
        return Vector(-x);
    };
    const double h = 1.9;  // stable for SSP22 (|R(-1.9)| < 1)
    TimeGrid grid(h, 38.0);
    for (int stages : {2, 3, 5}) {
        Trajectory traj = ssp_rk(f, nullptr, grid, Vector::Ones(1), no_input(), Vector(), stages);
        CHECK(std::abs(traj.values(0, grid.steps())) < 1.0);
    }
}
